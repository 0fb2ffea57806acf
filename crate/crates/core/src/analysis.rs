//! Certificates and metrics over finished closed-loop solutions.
//!
//! The checks recompute everything from the recorded states: Lyapunov
//! values from the plant, bounds from the nominal control laws. Nothing is
//! taken from the jump records except the applied input magnitude used for
//! the budget.

use alloc::vec::Vec;
use core::fmt;
use core::ops::AddAssign;

use libm::{ceil, fabs};

use crate::closed_loop::{
    distance_to_attractor, AttractorSpec, Channel, FullState, Impulse, Lyapunov, Thresholds, Trajectory,
};
use crate::controllers::alpha_input;
use crate::hcw::{sat, OrbitParams};
use crate::hybrid::HybridTime;

/// Floor for relative drift denominators, in (m/s)².
pub const DRIFT_FLOOR: f64 = 1e-12;
/// Absolute slack on jump decrease bounds, in (m/s)².
pub const JUMP_SLACK: f64 = 1e-12;
/// Applied impulses at or below this magnitude count as zero input, m/s.
pub const DEFAULT_IMPULSE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantity {
    /// Relative drift of a Lyapunov function along a flow arc.
    FlowDrift(Channel),
    /// Lyapunov change across a jump of the given channel.
    JumpDecrease(Channel),
    /// Nonzero Lyapunov change across a zero-input firing.
    ZeroInputJump(Channel),
    /// `V_z + beta²` increased across some jump.
    CompositeIncrease,
    /// Pre-jump state outside the sector implied by the jump set.
    JumpSetGeometry(Channel),
    /// Two firings of one channel closer than the dwell time.
    DwellSpacing(Channel),
    /// Out-of-plane impulse neither at a zero crossing nor dwell-delayed.
    Placement,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::FlowDrift(c) => write!(f, "flow drift of V_{c}"),
            Quantity::JumpDecrease(c) => write!(f, "jump decrease on {c}"),
            Quantity::ZeroInputJump(c) => write!(f, "zero-input jump on {c}"),
            Quantity::CompositeIncrease => f.write_str("V_z + beta^2 monotone"),
            Quantity::JumpSetGeometry(c) => write!(f, "jump set sector on {c}"),
            Quantity::DwellSpacing(c) => write!(f, "dwell spacing on {c}"),
            Quantity::Placement => f.write_str("z impulse placement"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub time: HybridTime,
    pub quantity: Quantity,
    pub observed: f64,
    pub bound: f64,
}

/// Largest relative drift of each Lyapunov function over one flow arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCheck {
    pub start: HybridTime,
    pub end: HybridTime,
    pub drift: Lyapunov,
    pub allowed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpCheck {
    pub time: HybridTime,
    pub channel: Channel,
    pub delta_v: f64,
    pub bound: f64,
    pub nonzero: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateReport {
    pub arcs: Vec<ArcCheck>,
    pub jumps: Vec<JumpCheck>,
    pub violations: Vec<Violation>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: CertificateReport) {
        self.arcs.extend(other.arcs);
        self.jumps.extend(other.jumps);
        self.violations.extend(other.violations);
    }

    pub fn max_arc_drift(&self) -> f64 {
        self.arcs
            .iter()
            .map(|a| a.drift.z.max(a.drift.beta).max(a.drift.alpha))
            .fold(0.0, f64::max)
    }

    pub fn violations_of(&self, pred: impl Fn(Quantity) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v.quantity)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriftTolerance {
    /// Same bound for every arc regardless of length.
    PerArc(f64),
    /// Bound per orbital period of arc duration (at least one period).
    PerOrbit { tol: f64, period: f64 },
}

impl DriftTolerance {
    fn allowed(self, duration: f64) -> f64 {
        match self {
            DriftTolerance::PerArc(tol) => tol,
            DriftTolerance::PerOrbit { tol, period } => tol * ceil(duration / period).max(1.0),
        }
    }
}

/// Relative drift of `V_z`, `beta²` and `V_alpha` along every flow arc.
pub fn check_flow_invariance(sol: &Trajectory, tol: DriftTolerance) -> CertificateReport {
    let mut report = CertificateReport::default();
    for arc in sol.arcs() {
        let (first, last) = (arc[0], arc[arc.len() - 1]);
        let allowed = tol.allowed(last.time.t - first.time.t);
        let v0 = first.monitor;
        let mut drift = Lyapunov::default();
        for s in arc {
            let rel = |now: f64, start: f64| fabs(now - start) / start.max(DRIFT_FLOOR);
            drift.z = drift.z.max(rel(s.monitor.z, v0.z));
            drift.beta = drift.beta.max(rel(s.monitor.beta, v0.beta));
            drift.alpha = drift.alpha.max(rel(s.monitor.alpha, v0.alpha));
        }
        for c in Channel::ALL {
            if drift.get(c) > allowed {
                report.violations.push(Violation {
                    time: last.time,
                    quantity: Quantity::FlowDrift(c),
                    observed: drift.get(c),
                    bound: allowed,
                });
            }
        }
        report.arcs.push(ArcCheck { start: first.time, end: last.time, drift, allowed });
    }
    report
}

/// Upper bound on the Lyapunov change of `channel` firing at `s` under
/// the nominal law: `-v_z sat(v_z)`, `-sat(beta/3) beta/3`,
/// `-2 sat(u_x) u_x`.
pub fn decrease_bound(s: &FullState, channel: Channel, p: &OrbitParams) -> f64 {
    match channel {
        Channel::Z => {
            let v = s.plant.v[2];
            -v * sat(v, p.umax)
        }
        Channel::Beta => {
            let b = s.zeta(p).beta / 3.0;
            -sat(b, p.umax) * b
        }
        Channel::Alpha => {
            let z = s.zeta(p);
            let u = alpha_input(z.y, z.alpha, p.n);
            -2.0 * sat(u, p.umax) * u
        }
    }
}

/// Per-event decrease certificates.
///
/// Every event gets a [`JumpCheck`]. Violations are raised for a
/// Lyapunov change above its bound, a zero-input event that changes the
/// Lyapunov value, an increase of `V_z + beta²`, or a pre-jump state
/// outside the sector `v_z² >= n²r_z²` (resp. `(y - n alpha/2)² >= n²x²`).
pub fn check_jump_decrease(sol: &Trajectory, p: &OrbitParams, impulse_floor: f64) -> CertificateReport {
    let mut report = CertificateReport::default();
    for e in &sol.events {
        let (pre, post) = (e.pre_state(), e.post_state());
        let (v0, v1) = (Lyapunov::of(&pre, p), Lyapunov::of(&post, p));
        let delta = v1.get(e.channel) - v0.get(e.channel);
        let bound = decrease_bound(&pre, e.channel, p);
        let nonzero = fabs(e.record.applied) > impulse_floor;
        let mut violate = |quantity, observed, bound| {
            report.violations.push(Violation { time: e.time, quantity, observed, bound })
        };

        if delta > bound + JUMP_SLACK {
            violate(Quantity::JumpDecrease(e.channel), delta, bound);
        }
        if !nonzero && fabs(delta) > JUMP_SLACK {
            violate(Quantity::ZeroInputJump(e.channel), delta, 0.0);
        }
        let composite = (v1.z + v1.beta) - (v0.z + v0.beta);
        if composite > JUMP_SLACK {
            violate(Quantity::CompositeIncrease, composite, 0.0);
        }
        let (lhs, rhs) = match e.channel {
            Channel::Z => {
                let (r, v) = (pre.plant.r[2], pre.plant.v[2]);
                (v * v, p.n * p.n * r * r)
            }
            Channel::Alpha => {
                let z = pre.zeta(p);
                let w = z.y - 0.5 * p.n * z.alpha;
                (w * w, p.n * p.n * z.x * z.x)
            }
            Channel::Beta => (0.0, 0.0),
        };
        if lhs < rhs - 1e-12 * (lhs + rhs) - 1e-300 {
            violate(Quantity::JumpSetGeometry(e.channel), lhs, rhs);
        }
        report.jumps.push(JumpCheck { time: e.time, channel: e.channel, delta_v: delta, bound, nonzero });
    }
    report
}

/// Consecutive firings of a channel with `tau^M <= 1` must be at least
/// `tau^M` periods apart, less `event_tol`.
pub fn check_dwell_spacing(
    sol: &Trajectory,
    p: &OrbitParams,
    thresholds: &Thresholds,
    event_tol: f64,
) -> CertificateReport {
    let mut report = CertificateReport::default();
    for c in Channel::ALL {
        let th = thresholds.get(c);
        if th.get() > 1.0 {
            continue;
        }
        let min_gap = th.dwell_seconds(p) - event_tol;
        let times: Vec<HybridTime> = sol.events.iter().filter(|e| e.channel == c).map(|e| e.time).collect();
        for w in times.windows(2) {
            let gap = w[1].t - w[0].t;
            if gap < min_gap {
                report.violations.push(Violation {
                    time: w[1],
                    quantity: Quantity::DwellSpacing(c),
                    observed: gap,
                    bound: min_gap,
                });
            }
        }
    }
    report
}

/// Number of `beta` firings with nonzero input needed from `beta0`.
pub fn beta_jump_count(beta0: f64, umax: f64) -> u64 {
    ceil(fabs(beta0) / (3.0 * umax)) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelBudget {
    /// All firings, including zero-input ones.
    pub firings: u64,
    /// Firings with `|applied| > floor`.
    pub impulses: u64,
    /// Sum of `|applied|`, m/s.
    pub delta_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ManeuverBudget {
    pub z: ChannelBudget,
    pub beta: ChannelBudget,
    pub alpha: ChannelBudget,
    pub total_delta_v: f64,
    /// Hybrid time of the last impulse above the floor.
    pub last_impulse: Option<HybridTime>,
}

impl ManeuverBudget {
    pub fn channel(&self, c: Channel) -> &ChannelBudget {
        match c {
            Channel::Z => &self.z,
            Channel::Beta => &self.beta,
            Channel::Alpha => &self.alpha,
        }
    }

    fn channel_mut(&mut self, c: Channel) -> &mut ChannelBudget {
        match c {
            Channel::Z => &mut self.z,
            Channel::Beta => &mut self.beta,
            Channel::Alpha => &mut self.alpha,
        }
    }

    pub fn impulses(&self) -> u64 {
        self.z.impulses + self.beta.impulses + self.alpha.impulses
    }

    pub fn record(&mut self, channel: Channel, time: HybridTime, impulse: &Impulse, floor: f64) {
        let magnitude = fabs(impulse.applied);
        self.total_delta_v += magnitude;
        let b = self.channel_mut(channel);
        b.firings += 1;
        b.delta_v += magnitude;
        if magnitude > floor {
            b.impulses += 1;
            self.last_impulse = Some(match self.last_impulse {
                Some(t) if t.t > time.t || (t.t == time.t && t.j > time.j) => t,
                _ => time,
            });
        }
    }
}

impl AddAssign for ManeuverBudget {
    fn add_assign(&mut self, rhs: Self) {
        for c in Channel::ALL {
            let (a, b) = (self.channel_mut(c), rhs.channel(c));
            a.firings += b.firings;
            a.impulses += b.impulses;
            a.delta_v += b.delta_v;
        }
        self.total_delta_v += rhs.total_delta_v;
        self.last_impulse = match (self.last_impulse, rhs.last_impulse) {
            (Some(a), Some(b)) => Some(if (b.t, b.j) > (a.t, a.j) { b } else { a }),
            (a, b) => a.or(b),
        };
    }
}

pub fn budget(sol: &Trajectory, impulse_floor: f64) -> ManeuverBudget {
    let mut b = ManeuverBudget::default();
    for e in &sol.events {
        b.record(e.channel, e.time, &e.record, impulse_floor);
    }
    b
}

/// First sampled hybrid time after which the distance to the attractor
/// stays within `spec.epsilon` for the rest of the solution.
pub fn convergence_time(sol: &Trajectory, p: &OrbitParams, spec: &AttractorSpec) -> Option<HybridTime> {
    let mut first_inside = None;
    for s in sol.samples.iter().rev() {
        let d = distance_to_attractor(&FullState::from_vector(&s.state), p, spec.which);
        if d > spec.epsilon {
            break;
        }
        first_inside = Some(s.time);
    }
    first_inside
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementKind {
    /// Fired within the zero-crossing band of `r_z`.
    ZeroCrossing,
    /// Fired the moment the dwell timer released it.
    DwellDelayed,
    Misplaced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub time: HybridTime,
    pub kind: PlacementKind,
    pub r_z: f64,
    pub timer_margin: f64,
}

/// Classifies every out-of-plane firing. A firing counts as dwell-delayed
/// when its timer margin is within what event localization can resolve,
/// and as a zero crossing when `|r_z| <= band · max|r_z|`.
pub fn classify_z_placement(sol: &Trajectory, p: &OrbitParams, event_tol: f64, band: f64) -> Vec<Placement> {
    let r_max = sol.samples.iter().map(|s| fabs(s.state[2])).fold(0.0, f64::max);
    let timer_resolution = 2.0 * p.timer_rate() * event_tol;
    sol.events
        .iter()
        .filter(|e| e.channel == Channel::Z)
        .map(|e| {
            let r_z = e.pre[2];
            let timer_margin = e.trigger.terms()[2];
            let kind = if timer_margin <= timer_resolution {
                PlacementKind::DwellDelayed
            } else if fabs(r_z) <= band * r_max {
                PlacementKind::ZeroCrossing
            } else {
                PlacementKind::Misplaced
            };
            Placement { time: e.time, kind, r_z, timer_margin }
        })
        .collect()
}

pub fn check_placement(placements: &[Placement]) -> CertificateReport {
    let mut report = CertificateReport::default();
    for pl in placements.iter().filter(|pl| pl.kind == PlacementKind::Misplaced) {
        report.violations.push(Violation {
            time: pl.time,
            quantity: Quantity::Placement,
            observed: pl.r_z,
            bound: 0.0,
        });
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub drift: DriftTolerance,
    pub event_tol: f64,
    pub impulse_floor: f64,
    /// Zero-crossing band for out-of-plane placement, relative to `max|r_z|`.
    pub placement_band: f64,
}

/// All certificates at once.
pub fn certify(sol: &Trajectory, p: &OrbitParams, thresholds: &Thresholds, opts: &CertifyOptions) -> CertificateReport {
    let mut report = check_flow_invariance(sol, opts.drift);
    report.merge(check_jump_decrease(sol, p, opts.impulse_floor));
    report.merge(check_dwell_spacing(sol, p, thresholds, opts.event_tol));
    report.merge(check_placement(&classify_z_placement(sol, p, opts.event_tol, opts.placement_band)));
    report
}
