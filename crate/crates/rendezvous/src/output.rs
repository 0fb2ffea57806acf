//! Files written per run: `trajectory.csv`, `events.csv`, `summary.json`
//! and `plot.gp`.
//!
//! Column names and order are fixed by [`TRAJECTORY_COLUMNS`] and
//! [`EVENTS_COLUMNS`]; a change bumps [`SCHEMA_VERSION`]. Floats are
//! written in shortest round-trip form, so every value reads back exactly.

use std::fs;
use std::path::{Path, PathBuf};

use rendezvous_core::analysis::PlacementKind;
use rendezvous_core::closed_loop::{Channel, FullState, Lyapunov, Subsystem};
use rendezvous_core::hybrid::{HybridTime, Integrator, Termination};
use serde::Serialize;

use crate::error::Error;
use crate::run::{check_table, Run};

pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_COLUMNS: [&str; 21] = [
    "t", "orbit", "j", "r_x", "r_y", "r_z", "v_x", "v_y", "v_z", "x", "y", "alpha", "beta", "tau_z", "q_z",
    "tau_beta", "tau_alpha", "q_alpha", "V_z", "beta_sq", "V_alpha",
];

pub const EVENTS_COLUMNS: [&str; 14] = [
    "t", "orbit", "j", "channel", "commanded", "applied", "V_before", "V_after", "delta_V", "bound", "h1", "h2", "h3",
    "placement",
];

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const PLOT_FILE: &str = "plot.gp";

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn logic(q: Option<rendezvous_core::controllers::Logic>) -> String {
    q.map_or_else(String::new, |q| num(q.value()))
}

fn placement_name(kind: PlacementKind) -> &'static str {
    match kind {
        PlacementKind::ZeroCrossing => "zero-crossing",
        PlacementKind::DwellDelayed => "dwell-delayed",
        PlacementKind::Misplaced => "misplaced",
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Horizon => "horizon",
        Termination::JumpBudgetExhausted => "jump-budget-exhausted",
        Termination::Settled => "settled",
    }
}

fn integrator_name(i: Integrator) -> &'static str {
    match i {
        Integrator::ClosedForm => "closed-form",
        Integrator::Rk4 => "rk4",
    }
}

pub fn trajectory_rows(run: &Run) -> Vec<Vec<String>> {
    let p = &run.scenario.params;
    let period = p.period();
    run.trajectory
        .samples
        .iter()
        .map(|s| {
            let st = FullState::from_vector(&s.state);
            let z = st.zeta(p);
            let v: &Lyapunov = &s.monitor;
            let mut row = vec![num(s.time.t), num(s.time.t / period), s.time.j.to_string()];
            row.extend(st.plant.r.iter().chain(st.plant.v.iter()).map(|&c| num(c)));
            row.extend([z.x, z.y, z.alpha, z.beta].map(num));
            row.extend([
                num(st.z_ctl.tau),
                logic(st.z_ctl.q),
                num(st.beta_ctl.tau),
                num(st.alpha_ctl.tau),
                logic(st.alpha_ctl.q),
            ]);
            row.extend([v.z, v.beta, v.alpha].map(num));
            row
        })
        .collect()
}

pub fn event_rows(run: &Run) -> Vec<Vec<String>> {
    let p = &run.scenario.params;
    let period = p.period();
    let mut placements = run.placements.iter();
    run.trajectory
        .events
        .iter()
        .zip(run.report.jumps.iter())
        .map(|(e, check)| {
            let terms = e.trigger.terms();
            let term = |i: usize| terms.get(i).map_or_else(String::new, |&h| num(h));
            let placement = if e.channel == Channel::Z {
                placements.next().map_or("", |pl| placement_name(pl.kind))
            } else {
                ""
            };
            vec![
                num(e.time.t),
                num(e.time.t / period),
                e.time.j.to_string(),
                e.channel.name().to_string(),
                num(e.record.commanded),
                num(e.record.applied),
                num(e.record.before.get(e.channel)),
                num(e.record.after.get(e.channel)),
                num(check.delta_v),
                num(check.bound),
                term(0),
                term(1),
                term(2),
                placement.to_string(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeSummary {
    pub t: f64,
    pub orbit: f64,
    pub j: u64,
}

impl TimeSummary {
    fn new(time: HybridTime, period: f64) -> Self {
        Self { t: time.t, orbit: time.t / period, j: time.j }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelSummary {
    pub firings: u64,
    pub impulses: u64,
    pub delta_v: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetSummary {
    pub z: ChannelSummary,
    pub beta: ChannelSummary,
    pub alpha: ChannelSummary,
    pub impulses: u64,
    pub total_delta_v: f64,
    pub impulse_floor: f64,
    pub last_impulse: Option<TimeSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub attractor: &'static str,
    pub initial_distance: f64,
    pub epsilon: f64,
    pub converged: bool,
    pub time: Option<TimeSummary>,
    pub final_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationSummary {
    pub t: f64,
    pub j: u64,
    pub quantity: String,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub passed: bool,
    pub max_flow_drift: f64,
    pub checks: Vec<CheckSummary>,
    /// The first [`MAX_LISTED_VIOLATIONS`] violations.
    pub violations: Vec<ViolationSummary>,
}

pub const MAX_LISTED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub version: u32,
    pub subsystem: &'static str,
    pub integrator: &'static str,
    pub termination: &'static str,
    pub final_time: Option<TimeSummary>,
    pub samples: usize,
    pub events: usize,
    pub budget: BudgetSummary,
    pub convergence: ConvergenceSummary,
    pub certificates: CertificateSummary,
}

fn attractor_name(subsystem: Subsystem) -> &'static str {
    match subsystem {
        Subsystem::Z => "z",
        Subsystem::InPlane => "inplane",
        Subsystem::Full => "full",
    }
}

pub fn summary(run: &Run) -> Summary {
    let period = run.scenario.params.period();
    let b = &run.budget;
    let channel = |c: Channel| {
        let cb = b.channel(c);
        ChannelSummary { firings: cb.firings, impulses: cb.impulses, delta_v: cb.delta_v }
    };
    Summary {
        version: SCHEMA_VERSION,
        subsystem: run.scenario.subsystem.name(),
        integrator: integrator_name(run.scenario.options.integrator),
        termination: termination_name(run.trajectory.termination),
        final_time: run.trajectory.final_time().map(|t| TimeSummary::new(t, period)),
        samples: run.trajectory.samples.len(),
        events: run.trajectory.events.len(),
        budget: BudgetSummary {
            z: channel(Channel::Z),
            beta: channel(Channel::Beta),
            alpha: channel(Channel::Alpha),
            impulses: b.impulses(),
            total_delta_v: b.total_delta_v,
            impulse_floor: crate::run::certify_options(&run.scenario).impulse_floor,
            last_impulse: b.last_impulse.map(|t| TimeSummary::new(t, period)),
        },
        convergence: ConvergenceSummary {
            attractor: attractor_name(run.scenario.subsystem),
            initial_distance: run.initial_distance,
            epsilon: run.epsilon,
            converged: run.convergence.is_some(),
            time: run.convergence.map(|t| TimeSummary::new(t, period)),
            final_distance: run.final_distance,
        },
        certificates: CertificateSummary {
            passed: run.report.passed(),
            max_flow_drift: run.report.max_arc_drift(),
            checks: check_table(run)
                .into_iter()
                .map(|r| CheckSummary { name: r.name, checked: r.checked, violations: r.violations, passed: r.passed() })
                .collect(),
            violations: run
                .report
                .violations
                .iter()
                .take(MAX_LISTED_VIOLATIONS)
                .map(|v| ViolationSummary {
                    t: v.time.t,
                    j: v.time.j,
                    quantity: v.quantity.to_string(),
                    observed: v.observed,
                    bound: v.bound,
                })
                .collect(),
        },
    }
}

/// Gnuplot script over the two CSVs: states, impulse magnitudes and
/// impulse instants against orbits.
pub fn plot_script(subsystem: Subsystem, n: f64) -> String {
    let states = match subsystem {
        Subsystem::Z => concat!(
            "set ylabel 'r_z [m], v_z/n [m]'\n",
            "plot T using (column('orbit')):(column('r_z')) with lines title 'r_z', \\\n",
            "     T using (column('orbit')):(column('v_z')/n) with lines title 'v_z/n'\n",
        ),
        Subsystem::InPlane | Subsystem::Full => concat!(
            "set ylabel '[m]'\n",
            "plot T using (column('orbit')):(column('r_x')) with lines title 'r_x', \\\n",
            "     T using (column('orbit')):(column('v_x')/n) with lines title 'v_x/n', \\\n",
            "     T using (column('orbit')):(2*column('beta')/3) with lines title '2 beta/3'\n",
            "plot T using (column('orbit')):(column('r_y')) with lines title 'r_y', \\\n",
            "     T using (column('orbit')):(column('v_y')/n) with lines title 'v_y/n', \\\n",
            "     T using (column('orbit')):(column('alpha')) with lines title 'alpha'\n",
        ),
    };
    let rows = if subsystem == Subsystem::Z { 3 } else { 4 };
    let channels: &[(&str, u8)] = match subsystem {
        Subsystem::Z => &[("z", 1)],
        Subsystem::InPlane => &[("beta", 2), ("alpha", 3)],
        Subsystem::Full => &[("z", 1), ("beta", 2), ("alpha", 3)],
    };
    let series = |f: &dyn Fn(&str, u8) -> String| channels.iter().map(|&(c, k)| f(c, k)).collect::<Vec<_>>().join(", \\\n     ");
    let magnitudes = series(&|c, _| {
        format!("E using (column('orbit')):(strcol('channel') eq '{c}' ? abs(column('applied')) : 1/0) with impulses title 'u_{c}'")
    });
    let instants = series(&|c, k| {
        format!("E using (column('orbit')):(strcol('channel') eq '{c}' && abs(column('applied')) > 0 ? {k} : 1/0) with points pt 7 title '{c}'")
    });
    format!(
        "# gnuplot -p {PLOT_FILE}\n\
         T = '{TRAJECTORY_FILE}'\n\
         E = '{EVENTS_FILE}'\n\
         n = {n}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'orbits'\n\
         set multiplot layout {rows},1\n\
         {states}\
         set ylabel '|u| [m/s]'\n\
         plot {magnitudes}\n\
         set ylabel 'impulses'\n\
         set yrange [0:4]\n\
         plot {instants}\n\
         unset multiplot\n"
    )
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Error> {
    let err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn write_outputs(dir: &Path, run: &Run) -> Result<Vec<PathBuf>, Error> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let paths: Vec<PathBuf> =
        [TRAJECTORY_FILE, EVENTS_FILE, SUMMARY_FILE, PLOT_FILE].iter().map(|f| dir.join(f)).collect();
    write_csv(&paths[0], &TRAJECTORY_COLUMNS, &trajectory_rows(run))?;
    write_csv(&paths[1], &EVENTS_COLUMNS, &event_rows(run))?;
    let json = serde_json::to_string_pretty(&summary(run)).expect("summary always serializes");
    write_text(&paths[2], &(json + "\n"))?;
    write_text(&paths[3], &plot_script(run.scenario.subsystem, run.scenario.params.n))?;
    Ok(paths)
}
