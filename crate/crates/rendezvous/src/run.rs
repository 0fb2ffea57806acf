//! One simulation plus every metric derived from it.

use rendezvous_core::analysis::{
    budget, certify, classify_z_placement, convergence_time, CertificateReport, CertifyOptions, DriftTolerance,
    ManeuverBudget, Placement, Quantity, DEFAULT_IMPULSE_FLOOR,
};
use rendezvous_core::closed_loop::{distance_to_attractor, AttractorKind, AttractorSpec, Channel, ClosedLoop, FullState};
use rendezvous_core::hybrid::{HybridTime, Integrator, SimError};
use rendezvous_core::Trajectory;

use crate::config::Scenario;

/// Closed-form arcs are exact up to rounding.
pub const CLOSED_FORM_DRIFT: f64 = 1e-12;
/// Per orbit of arc length, for RK4 at a ten-thousandth of an orbit.
pub const RK4_DRIFT_PER_ORBIT: f64 = 1e-8;
/// Zero-crossing band for out-of-plane impulses, relative to `max |r_z|`.
pub const PLACEMENT_BAND: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Run {
    pub scenario: Scenario,
    pub trajectory: Trajectory,
    pub budget: ManeuverBudget,
    pub attractor: AttractorKind,
    pub initial_distance: f64,
    pub epsilon: f64,
    pub convergence: Option<HybridTime>,
    pub final_distance: f64,
    pub report: CertificateReport,
    pub placements: Vec<Placement>,
}

pub fn certify_options(scenario: &Scenario) -> CertifyOptions {
    let drift = match scenario.options.integrator {
        Integrator::ClosedForm => DriftTolerance::PerArc(CLOSED_FORM_DRIFT),
        Integrator::Rk4 => DriftTolerance::PerOrbit { tol: RK4_DRIFT_PER_ORBIT, period: scenario.params.period() },
    };
    CertifyOptions {
        drift,
        event_tol: scenario.options.event_tol,
        impulse_floor: DEFAULT_IMPULSE_FLOOR,
        placement_band: PLACEMENT_BAND,
    }
}

pub fn closed_loop(scenario: &Scenario) -> ClosedLoop {
    let mut cl = ClosedLoop::new(scenario.params, scenario.thresholds, scenario.subsystem);
    cl.fault = scenario.fault;
    cl
}

pub fn run(scenario: &Scenario) -> Result<Run, SimError> {
    let p = &scenario.params;
    let trajectory = closed_loop(scenario).simulate(&scenario.initial, &scenario.options)?;
    let attractor = AttractorKind::for_subsystem(scenario.subsystem);
    let initial_distance = distance_to_attractor(&scenario.initial, p, attractor);
    let epsilon = scenario.epsilon.unwrap_or(scenario.epsilon_rel * initial_distance);
    let spec = AttractorSpec { which: attractor, epsilon };
    let final_state = trajectory.samples.last().map_or(scenario.initial, |s| FullState::from_vector(&s.state));
    let opts = certify_options(scenario);
    Ok(Run {
        budget: budget(&trajectory, opts.impulse_floor),
        convergence: convergence_time(&trajectory, p, &spec),
        final_distance: distance_to_attractor(&final_state, p, attractor),
        report: certify(&trajectory, p, &scenario.thresholds, &opts),
        placements: classify_z_placement(&trajectory, p, opts.event_tol, opts.placement_band),
        scenario: scenario.clone(),
        trajectory,
        attractor,
        initial_distance,
        epsilon,
    })
}

/// One row of the certificate table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn check_table(run: &Run) -> Vec<CheckRow> {
    let r = &run.report;
    let events = |c: Channel| run.trajectory.events.iter().filter(|e| e.channel == c).count();
    let row = |name, checked, pred: &dyn Fn(Quantity) -> bool| CheckRow { name, checked, violations: r.violations_of(pred) };
    let mut rows = vec![row("flow invariance", r.arcs.len(), &|q| matches!(q, Quantity::FlowDrift(_)))];
    for (c, name) in [(Channel::Z, "jump decrease z"), (Channel::Beta, "jump decrease beta"), (Channel::Alpha, "jump decrease alpha")] {
        rows.push(row(name, events(c), &|q| q == Quantity::JumpDecrease(c) || q == Quantity::ZeroInputJump(c)));
    }
    rows.push(row("V_z + beta^2 monotone", r.jumps.len(), &|q| q == Quantity::CompositeIncrease));
    rows.push(row("jump set sector", r.jumps.len(), &|q| matches!(q, Quantity::JumpSetGeometry(_))));
    rows.push(row("dwell spacing", r.jumps.len(), &|q| matches!(q, Quantity::DwellSpacing(_))));
    rows.push(row("z impulse placement", run.placements.len(), &|q| q == Quantity::Placement));
    rows
}
