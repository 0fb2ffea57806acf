//! The plant with all three channel controllers attached.
//!
//! Flat state layout (see [`FullState::to_vector`]):
//!
//! | index | 0..3 | 3..6 | 6     | 7     | 8        | 9         | 10        |
//! |-------|------|------|-------|-------|----------|-----------|-----------|
//! |       | `r`  | `v`  | `τ_z` | `q_z` | `τ_beta` | `τ_alpha` | `q_alpha` |
//!
//! The transformed coordinates `(x, y, alpha, beta)` are always derived
//! from the plant and never stored.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use arrayvec::ArrayVec;
use libm::sqrt;

use crate::controllers::{
    alpha_guard, alpha_input, alpha_lyapunov, beta_guard, beta_input, beta_lyapunov, propagate_timer,
    timer_derivative, z_guard, z_input, z_lyapunov, DwellThreshold, Logic,
};
use crate::hcw::{self, apply_impulse, sat, to_zeta, OrbitParams, RelativeState, ZetaState};
use crate::hybrid::{self, GuardConjunction, HybridSolution, HybridSystem, JumpEvent, SimError, SimulationOptions};

pub const STATE_DIM: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Z,
    Beta,
    Alpha,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Z, Channel::Beta, Channel::Alpha];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Z => "z",
            Channel::Beta => "beta",
            Channel::Alpha => "alpha",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Channel::ALL.into_iter().find(|c| c.name() == s)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which part of the system a scenario exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// Out-of-plane channel only.
    Z,
    /// `beta` and `alpha` channels.
    InPlane,
    Full,
}

impl Subsystem {
    pub fn channels(self) -> &'static [Channel] {
        match self {
            Subsystem::Z => &[Channel::Z],
            Subsystem::InPlane => &[Channel::Beta, Channel::Alpha],
            Subsystem::Full => &Channel::ALL,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subsystem::Z => "z",
            Subsystem::InPlane => "inplane",
            Subsystem::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Subsystem::Z, Subsystem::InPlane, Subsystem::Full].into_iter().find(|c| c.name() == s)
    }
}

/// Controller state of one channel. `q` is absent on the `beta` channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelState {
    pub q: Option<Logic>,
    pub tau: f64,
}

impl ChannelState {
    /// `q = 1`, `tau = tau^M`: the first firing is not delayed by dwell.
    pub fn ready(threshold: DwellThreshold) -> Self {
        Self { q: Some(Logic::Plus), tau: threshold.get() }
    }

    pub fn timer_only(tau: f64) -> Self {
        Self { q: None, tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub z: DwellThreshold,
    pub beta: DwellThreshold,
    pub alpha: DwellThreshold,
}

impl Thresholds {
    pub fn get(&self, channel: Channel) -> DwellThreshold {
        match channel {
            Channel::Z => self.z,
            Channel::Beta => self.beta,
            Channel::Alpha => self.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullState {
    pub plant: RelativeState,
    pub z_ctl: ChannelState,
    pub beta_ctl: ChannelState,
    pub alpha_ctl: ChannelState,
}

impl FullState {
    /// Plant `plant` with every controller ready to fire.
    pub fn ready(plant: RelativeState, thresholds: &Thresholds) -> Self {
        Self {
            plant,
            z_ctl: ChannelState::ready(thresholds.z),
            beta_ctl: ChannelState::timer_only(thresholds.beta.get()),
            alpha_ctl: ChannelState::ready(thresholds.alpha),
        }
    }

    pub fn to_vector(&self) -> [f64; STATE_DIM] {
        let p = self.plant.to_array();
        let q = |c: &ChannelState| c.q.unwrap_or_default().value();
        [
            p[0],
            p[1],
            p[2],
            p[3],
            p[4],
            p[5],
            self.z_ctl.tau,
            q(&self.z_ctl),
            self.beta_ctl.tau,
            self.alpha_ctl.tau,
            q(&self.alpha_ctl),
        ]
    }

    pub fn from_vector(x: &[f64; STATE_DIM]) -> Self {
        Self {
            plant: RelativeState::from_array([x[0], x[1], x[2], x[3], x[4], x[5]]),
            z_ctl: ChannelState { q: Some(Logic::from_value(x[7])), tau: x[6] },
            beta_ctl: ChannelState::timer_only(x[8]),
            alpha_ctl: ChannelState { q: Some(Logic::from_value(x[10])), tau: x[9] },
        }
    }

    pub fn zeta(&self, p: &OrbitParams) -> ZetaState {
        to_zeta(&self.plant.in_plane(), p)
    }

    pub fn channel(&self, channel: Channel) -> &ChannelState {
        match channel {
            Channel::Z => &self.z_ctl,
            Channel::Beta => &self.beta_ctl,
            Channel::Alpha => &self.alpha_ctl,
        }
    }
}

/// Values of the three channel Lyapunov functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Lyapunov {
    /// `n²r_z² + v_z²`
    pub z: f64,
    /// `beta²`
    pub beta: f64,
    /// `n²x² + y² + (n²/4)alpha²`
    pub alpha: f64,
}

impl Lyapunov {
    pub fn of(s: &FullState, p: &OrbitParams) -> Self {
        let zeta = s.zeta(p);
        Self {
            z: z_lyapunov(s.plant.r[2], s.plant.v[2], p.n),
            beta: beta_lyapunov(zeta.beta),
            alpha: alpha_lyapunov(zeta.x, zeta.y, zeta.alpha, p.n),
        }
    }

    pub fn get(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Z => self.z,
            Channel::Beta => self.beta,
            Channel::Alpha => self.alpha,
        }
    }

    pub fn total(&self) -> f64 {
        self.z + self.beta + self.alpha
    }
}

/// Derivative of the full state: plant on HCW, timers on the dead-zone
/// flow, logic variables frozen.
pub fn full_flow(s: &FullState, p: &OrbitParams) -> [f64; STATE_DIM] {
    let d = hcw::hcw_derivative(&s.plant, p);
    [
        d[0],
        d[1],
        d[2],
        d[3],
        d[4],
        d[5],
        timer_derivative(s.z_ctl.tau, p),
        0.0,
        timer_derivative(s.beta_ctl.tau, p),
        timer_derivative(s.alpha_ctl.tau, p),
        0.0,
    ]
}

/// Guard conjunction of one channel evaluated on the full state.
pub fn channel_guard(s: &FullState, channel: Channel, p: &OrbitParams, thresholds: &Thresholds) -> GuardConjunction {
    let q = |c: &ChannelState| c.q.unwrap_or_default();
    match channel {
        Channel::Z => z_guard(s.plant.r[2], s.plant.v[2], q(&s.z_ctl), s.z_ctl.tau, p, thresholds.z),
        Channel::Beta => beta_guard(s.beta_ctl.tau, thresholds.beta),
        Channel::Alpha => {
            let zeta = s.zeta(p);
            alpha_guard(zeta.x, zeta.y, zeta.alpha, q(&s.alpha_ctl), s.alpha_ctl.tau, p, thresholds.alpha)
        }
    }
}

/// Channels whose jump set contains `s`, in `z, beta, alpha` order. Empty
/// means `s` is in the flow set.
pub fn full_jump_sets(s: &FullState, p: &OrbitParams, thresholds: &Thresholds) -> ArrayVec<Channel, 3> {
    Channel::ALL
        .into_iter()
        .filter(|&c| channel_guard(s, c, p, thresholds).is_satisfied())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttractorKind {
    /// `r_z = v_z = 0`
    Z,
    /// `beta = 0`
    Beta,
    /// `x = y = alpha = 0`
    Alpha,
    /// `beta = x = y = alpha = 0`
    InPlane,
    /// All of the above.
    Full,
}

impl AttractorKind {
    fn includes(self, channel: Channel) -> bool {
        match self {
            AttractorKind::Full => true,
            AttractorKind::Z => channel == Channel::Z,
            AttractorKind::Beta => channel == Channel::Beta,
            AttractorKind::Alpha => channel == Channel::Alpha,
            AttractorKind::InPlane => channel != Channel::Z,
        }
    }

    pub fn for_subsystem(subsystem: Subsystem) -> Self {
        match subsystem {
            Subsystem::Z => AttractorKind::Z,
            Subsystem::InPlane => AttractorKind::InPlane,
            Subsystem::Full => AttractorKind::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorSpec {
    pub which: AttractorKind,
    /// Ball radius in the units of [`distance_to_attractor`], m/s.
    pub epsilon: f64,
}

/// Lyapunov-weighted distance: its square is the sum of the Lyapunov
/// functions of the channels in `which`. Timers and logic variables are
/// unconstrained.
pub fn distance_to_attractor(s: &FullState, p: &OrbitParams, which: AttractorKind) -> f64 {
    let v = Lyapunov::of(s, p);
    let sum: f64 = Channel::ALL.into_iter().filter(|&c| which.includes(c)).map(|c| v.get(c)).sum();
    sqrt(sum)
}

/// Unweighted Euclidean distance over the constrained coordinates
/// (`r_z, v_z`, `beta`, `x, y, alpha`), for reporting.
pub fn euclidean_distance(s: &FullState, p: &OrbitParams, which: AttractorKind) -> f64 {
    let z = s.zeta(p);
    let mut sum = 0.0;
    if which.includes(Channel::Z) {
        sum += s.plant.r[2] * s.plant.r[2] + s.plant.v[2] * s.plant.v[2];
    }
    if which.includes(Channel::Beta) {
        sum += z.beta * z.beta;
    }
    if which.includes(Channel::Alpha) {
        sum += z.x * z.x + z.y * z.y + z.alpha * z.alpha;
    }
    sqrt(sum)
}

/// Deliberate corruption of a jump map, used to check that the
/// certificates catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Fire `-u_x` instead of `u_x` on the `alpha` channel.
    FlipAlphaInput,
}

/// Payload of one impulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impulse {
    /// Input the law asked for, m/s, on the channel's axis.
    pub commanded: f64,
    /// Input after saturation, m/s.
    pub applied: f64,
    pub before: Lyapunov,
    pub after: Lyapunov,
}

pub type ImpulseEvent = JumpEvent<Channel, Impulse, STATE_DIM>;
pub type Trajectory = HybridSolution<Channel, Impulse, Lyapunov, STATE_DIM>;

impl JumpEvent<Channel, Impulse, STATE_DIM> {
    pub fn pre_state(&self) -> FullState {
        FullState::from_vector(&self.pre)
    }

    pub fn post_state(&self) -> FullState {
        FullState::from_vector(&self.post)
    }

    /// Change of the jumping channel's Lyapunov function.
    pub fn delta_v(&self) -> f64 {
        self.record.after.get(self.channel) - self.record.before.get(self.channel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub params: OrbitParams,
    pub thresholds: Thresholds,
    channels: ArrayVec<Channel, 3>,
    pub fault: Fault,
}

impl ClosedLoop {
    pub fn new(params: OrbitParams, thresholds: Thresholds, subsystem: Subsystem) -> Self {
        Self::with_channels(params, thresholds, subsystem.channels())
    }

    /// Only `channels` may jump; the others keep flowing.
    pub fn with_channels(params: OrbitParams, thresholds: Thresholds, channels: &[Channel]) -> Self {
        let channels = Channel::ALL.into_iter().filter(|c| channels.contains(c)).collect();
        Self { params, thresholds, channels, fault: Fault::None }
    }

    pub fn enabled(&self) -> &[Channel] {
        &self.channels
    }

    /// Commanded and saturated input of `channel` at `s`.
    pub fn input(&self, s: &FullState, channel: Channel) -> (f64, f64) {
        let p = &self.params;
        let commanded = match channel {
            Channel::Z => -s.plant.v[2],
            Channel::Beta => s.zeta(p).beta / 3.0,
            Channel::Alpha => {
                let z = s.zeta(p);
                let u = alpha_input(z.y, z.alpha, p.n);
                if self.fault == Fault::FlipAlphaInput {
                    -u
                } else {
                    u
                }
            }
        };
        let applied = match channel {
            Channel::Z => z_input(s.plant.v[2], p.umax),
            Channel::Beta => beta_input(s.zeta(p).beta, p.umax),
            Channel::Alpha => sat(commanded, p.umax),
        };
        (commanded, applied)
    }

    pub fn apply_jump(&self, s: &FullState, channel: Channel) -> (FullState, Impulse) {
        let (commanded, applied) = self.input(s, channel);
        let mut post = *s;
        let mut u = [0.0; 3];
        match channel {
            Channel::Z => {
                u[2] = applied;
                post.z_ctl = ChannelState { q: Some(s.z_ctl.q.unwrap_or_default().toggled()), tau: 0.0 };
            }
            Channel::Beta => {
                u[1] = applied;
                post.beta_ctl.tau = 0.0;
            }
            Channel::Alpha => {
                u[0] = applied;
                post.alpha_ctl = ChannelState { q: Some(s.alpha_ctl.q.unwrap_or_default().toggled()), tau: 0.0 };
            }
        }
        post.plant = apply_impulse(&s.plant, u, &self.params);
        let impulse = Impulse {
            commanded,
            applied,
            before: Lyapunov::of(s, &self.params),
            after: Lyapunov::of(&post, &self.params),
        };
        (post, impulse)
    }

    pub fn default_options(&self) -> SimulationOptions<Channel> {
        let period = self.params.period();
        SimulationOptions {
            step_h: period / 1000.0,
            t_max: 20.0 * period,
            j_max: 100_000,
            event_tol: 1e-6,
            jump_priority: vec![Channel::Z, Channel::Beta, Channel::Alpha],
            integrator: hybrid::Integrator::ClosedForm,
            settle_tol: None,
            record_stride: 1,
        }
    }

    pub fn simulate(&self, x0: &FullState, opts: &SimulationOptions<Channel>) -> Result<Trajectory, SimError> {
        hybrid::simulate(self, &x0.to_vector(), opts)
    }
}

impl HybridSystem<STATE_DIM> for ClosedLoop {
    type Channel = Channel;
    type Record = Impulse;
    type Monitor = Lyapunov;

    fn channels(&self) -> &[Channel] {
        &self.channels
    }

    fn flow(&self, x: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        full_flow(&FullState::from_vector(x), &self.params)
    }

    fn propagate(&self, x: &[f64; STATE_DIM], dt: f64) -> Option<[f64; STATE_DIM]> {
        let p = &self.params;
        let mut s = FullState::from_vector(x);
        s.plant = hcw::propagate(&s.plant, p, dt);
        s.z_ctl.tau = propagate_timer(s.z_ctl.tau, p, dt);
        s.beta_ctl.tau = propagate_timer(s.beta_ctl.tau, p, dt);
        s.alpha_ctl.tau = propagate_timer(s.alpha_ctl.tau, p, dt);
        Some(s.to_vector())
    }

    fn guard(&self, channel: Channel, x: &[f64; STATE_DIM]) -> GuardConjunction {
        channel_guard(&FullState::from_vector(x), channel, &self.params, &self.thresholds)
    }

    fn jump(&self, channel: Channel, x: &[f64; STATE_DIM]) -> ([f64; STATE_DIM], Impulse) {
        let (post, impulse) = self.apply_jump(&FullState::from_vector(x), channel);
        (post.to_vector(), impulse)
    }

    fn monitor(&self, x: &[f64; STATE_DIM]) -> Lyapunov {
        Lyapunov::of(&FullState::from_vector(x), &self.params)
    }

    fn settled(&self, x: &[f64; STATE_DIM], tol: f64) -> bool {
        let v = self.monitor(x);
        v.z <= tol && v.beta <= tol && v.alpha <= tol
    }
}

/// Permutations of the three channels, for priority-robustness checks.
pub fn priority_permutations() -> Vec<Vec<Channel>> {
    let [a, b, c] = Channel::ALL;
    vec![
        vec![a, b, c],
        vec![a, c, b],
        vec![b, a, c],
        vec![b, c, a],
        vec![c, a, b],
        vec![c, b, a],
    ]
}
