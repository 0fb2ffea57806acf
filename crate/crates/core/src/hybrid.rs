//! Execution of hybrid automata `(C, D, F, G)` on flat state vectors.
//!
//! Jumps always preempt flow. A state is in the jump set of a channel iff
//! every term of that channel's [`GuardConjunction`] is `>= 0`; the flow set
//! is the closure of the complement. When several channels are active the
//! highest-priority one jumps first and the guards are re-evaluated on the
//! post-jump state at the same continuous time.
//!
//! Between jumps the flow is advanced with fixed steps, either with the
//! classical Runge-Kutta scheme or an exact propagator supplied by the
//! system. Entry into the jump set is localized by bisection on the union
//! guard margin, re-integrating from the left end of the step for every
//! probe.

use alloc::vec::Vec;
use core::fmt::Debug;

use arrayvec::ArrayVec;
use thiserror::Error;

/// Upper bound on the number of scalar conditions in one guard.
pub const MAX_GUARD_TERMS: usize = 4;

/// Hybrid time `(t, j)`: continuous seconds and number of jumps so far.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct HybridTime {
    pub t: f64,
    pub j: u64,
}

impl HybridTime {
    pub const ZERO: Self = Self { t: 0.0, j: 0 };

    pub fn new(t: f64, j: u64) -> Self {
        Self { t, j }
    }
}

/// Evaluated conjunction of scalar guard conditions `g_i(x) >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuardConjunction {
    terms: ArrayVec<f64, MAX_GUARD_TERMS>,
}

impl GuardConjunction {
    /// Panics if more than [`MAX_GUARD_TERMS`] terms are given.
    pub fn new(terms: &[f64]) -> Self {
        assert!(terms.len() <= MAX_GUARD_TERMS, "too many guard terms");
        Self { terms: terms.iter().copied().collect() }
    }

    pub fn terms(&self) -> &[f64] {
        &self.terms
    }

    /// `min_i g_i`, or `-inf` for an empty conjunction (never satisfied).
    pub fn margin(&self) -> f64 {
        if self.terms.is_empty() {
            return f64::NEG_INFINITY;
        }
        self.terms.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_satisfied(&self) -> bool {
        self.margin() >= 0.0
    }
}

/// Anything that yields a scalar membership margin; `>= 0` means inside.
pub trait Guard<const N: usize> {
    fn margin(&self, x: &[f64; N]) -> f64;
}

impl<const N: usize, F: Fn(&[f64; N]) -> f64> Guard<N> for F {
    fn margin(&self, x: &[f64; N]) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exact propagator provided by the system.
    #[default]
    ClosedForm,
    /// Classical fourth-order Runge-Kutta on [`HybridSystem::flow`].
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions<C> {
    /// Flow step, seconds.
    pub step_h: f64,
    pub t_max: f64,
    pub j_max: u64,
    /// Width of the final bisection bracket, seconds.
    pub event_tol: f64,
    /// Channels earlier in the list jump first.
    pub jump_priority: Vec<C>,
    pub integrator: Integrator,
    /// Stop early once [`HybridSystem::settled`] holds for this tolerance.
    pub settle_tol: Option<f64>,
    /// Keep every `record_stride`-th flow sample; jump instants and the
    /// final state are always kept.
    pub record_stride: usize,
}

impl<C: Copy + PartialEq> SimulationOptions<C> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step_h.is_finite() && self.step_h > 0.0) {
            return Err(SimError::InvalidOptions("step_h must be finite and > 0"));
        }
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(SimError::InvalidOptions("t_max must be finite and >= 0"));
        }
        if !(self.event_tol > 0.0 && self.event_tol < self.step_h) {
            return Err(SimError::InvalidOptions("event_tol must lie in (0, step_h)"));
        }
        if self.record_stride == 0 {
            return Err(SimError::InvalidOptions("record_stride must be >= 1"));
        }
        for (i, c) in self.jump_priority.iter().enumerate() {
            if self.jump_priority[..i].contains(c) {
                return Err(SimError::InvalidOptions("jump_priority lists a channel twice"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error("non-finite derivative at state {state:?}")]
    NonFiniteDerivative { state: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LocateError {
    #[error("bracket precondition violated: guard already satisfied at the left end")]
    AlreadyInside,
    #[error("no crossing: guard not satisfied at the right end")]
    NoCrossing,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation options: {0}")]
    InvalidOptions(&'static str),
    #[error("integration failed at t = {t}, j = {j}: non-finite state {state:?}")]
    NonFinite { t: f64, j: u64, state: Vec<f64> },
    #[error("system provides no closed-form propagator")]
    ClosedFormUnavailable,
    #[error("event localization failed: {0}")]
    Locate(#[from] LocateError),
    #[error("jump resolution called with no active channel")]
    NoActiveChannel,
}

/// A hybrid system on `R^N` split into independently guarded jump channels.
pub trait HybridSystem<const N: usize> {
    type Channel: Copy + PartialEq + Debug;
    /// Per-jump payload recorded by [`HybridSystem::jump`].
    type Record: Clone + Debug;
    /// Per-sample observation (Lyapunov values, for instance).
    type Monitor: Copy + Debug;

    /// Channels that may jump.
    fn channels(&self) -> &[Self::Channel];

    fn flow(&self, x: &[f64; N]) -> [f64; N];

    /// Exact flow over `dt >= 0`, if the system has one.
    fn propagate(&self, _x: &[f64; N], _dt: f64) -> Option<[f64; N]> {
        None
    }

    fn guard(&self, channel: Self::Channel, x: &[f64; N]) -> GuardConjunction;

    fn jump(&self, channel: Self::Channel, x: &[f64; N]) -> ([f64; N], Self::Record);

    fn monitor(&self, x: &[f64; N]) -> Self::Monitor;

    fn settled(&self, _x: &[f64; N], _tol: f64) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<M, const N: usize> {
    pub time: HybridTime,
    pub state: [f64; N],
    pub monitor: M,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent<C, R, const N: usize> {
    /// Hybrid time of the pre-jump state; the post-jump state lives at `j + 1`.
    pub time: HybridTime,
    pub channel: C,
    pub pre: [f64; N],
    pub post: [f64; N],
    /// Guard terms of the jumping channel at the pre-jump state.
    pub trigger: GuardConjunction,
    pub record: R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Horizon,
    /// `j_max` reached; possible Zeno behavior.
    JumpBudgetExhausted,
    Settled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSolution<C, R, M, const N: usize> {
    pub samples: Vec<Sample<M, N>>,
    pub events: Vec<JumpEvent<C, R, N>>,
    pub termination: Termination,
}

impl<C, R, M, const N: usize> HybridSolution<C, R, M, N> {
    /// Maximal runs of samples sharing a jump counter.
    pub fn arcs(&self) -> impl Iterator<Item = &[Sample<M, N>]> {
        self.samples.chunk_by(|a, b| a.time.j == b.time.j)
    }

    pub fn final_time(&self) -> Option<HybridTime> {
        self.samples.last().map(|s| s.time)
    }
}

/// One classical Runge-Kutta step of an autonomous vector field.
pub fn rk4_step<const N: usize, F>(x: &[f64; N], f: F, h: f64) -> Result<[f64; N], IntegrationError>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let eval = |s: &[f64; N]| {
        let d = f(s);
        if d.iter().all(|c| c.is_finite()) {
            Ok(d)
        } else {
            Err(IntegrationError::NonFiniteDerivative { state: s.to_vec() })
        }
    };
    let axpy = |a: f64, d: &[f64; N]| {
        let mut out = *x;
        for (o, d) in out.iter_mut().zip(d) {
            *o += a * d;
        }
        out
    };
    let k1 = eval(x)?;
    let k2 = eval(&axpy(h / 2.0, &k1))?;
    let k3 = eval(&axpy(h / 2.0, &k2))?;
    let k4 = eval(&axpy(h, &k3))?;
    let mut out = *x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Bisects the first entry of `guard` along the flow from `state_a` at
/// `t_a`, knowing it lies in `(t_a, t_b]`.
///
/// `advance(x, dt)` must return the flow of `x` after `dt` seconds. Every
/// probe restarts from `state_a`. Returns the right end of the final
/// bracket: a time within `event_tol` after the crossing, and a state with
/// margin `>= 0`.
pub fn locate_event<const N: usize, G, P, E>(
    guard: &G,
    mut advance: P,
    state_a: &[f64; N],
    state_b: &[f64; N],
    t_a: f64,
    t_b: f64,
    event_tol: f64,
) -> Result<Result<(f64, [f64; N]), LocateError>, E>
where
    G: Guard<N> + ?Sized,
    P: FnMut(&[f64; N], f64) -> Result<[f64; N], E>,
{
    if guard.margin(state_a) >= 0.0 {
        return Ok(Err(LocateError::AlreadyInside));
    }
    if guard.margin(state_b) < 0.0 {
        return Ok(Err(LocateError::NoCrossing));
    }
    let (mut lo, mut hi) = (t_a, t_b);
    let mut x_hi = *state_b;
    while hi - lo > event_tol {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let x_mid = advance(state_a, mid - t_a)?;
        if guard.margin(&x_mid) >= 0.0 {
            hi = mid;
            x_hi = x_mid;
        } else {
            lo = mid;
        }
    }
    Ok(Ok((hi, x_hi)))
}

/// Channels whose guard is satisfied at `x`, in priority order. Channels
/// missing from `priority` come after the listed ones, in the system's
/// own order.
pub fn active_channels<S, const N: usize>(
    system: &S,
    x: &[f64; N],
    priority: &[S::Channel],
) -> Vec<S::Channel>
where
    S: HybridSystem<N>,
{
    let listed = priority.iter().copied().filter(|c| system.channels().contains(c));
    let rest = system.channels().iter().copied().filter(|c| !priority.contains(c));
    listed.chain(rest).filter(|&c| system.guard(c, x).is_satisfied()).collect()
}

/// Applies jumps at a fixed continuous time until no guard is active.
///
/// Each round applies only the highest-priority active channel and then
/// re-evaluates every guard on the post-jump state. Stops early when the
/// jump counter reaches `j_max`; the returned flag reports that.
#[allow(clippy::type_complexity)]
pub fn resolve_jumps<S, const N: usize>(
    system: &S,
    x: &[f64; N],
    time: HybridTime,
    active: &[S::Channel],
    priority: &[S::Channel],
    j_max: u64,
) -> Result<([f64; N], Vec<JumpEvent<S::Channel, S::Record, N>>, bool), SimError>
where
    S: HybridSystem<N>,
{
    if active.is_empty() {
        return Err(SimError::NoActiveChannel);
    }
    let mut x = *x;
    let mut j = time.j;
    let mut events = Vec::new();
    let mut active: Vec<S::Channel> = priority
        .iter()
        .copied()
        .filter(|c| active.contains(c))
        .chain(active.iter().copied().filter(|c| !priority.contains(c)))
        .collect();
    while let Some(&channel) = active.first() {
        if j >= j_max {
            return Ok((x, events, true));
        }
        let trigger = system.guard(channel, &x);
        let (post, record) = system.jump(channel, &x);
        if !post.iter().all(|c| c.is_finite()) {
            return Err(SimError::NonFinite { t: time.t, j: j + 1, state: post.to_vec() });
        }
        events.push(JumpEvent {
            time: HybridTime::new(time.t, j),
            channel,
            pre: x,
            post,
            trigger,
            record,
        });
        x = post;
        j += 1;
        active = active_channels(system, &x, priority);
    }
    Ok((x, events, false))
}

fn advance<S, const N: usize>(
    system: &S,
    integrator: Integrator,
    x: &[f64; N],
    dt: f64,
    time: HybridTime,
) -> Result<[f64; N], SimError>
where
    S: HybridSystem<N>,
{
    let out = match integrator {
        Integrator::ClosedForm => system.propagate(x, dt).ok_or(SimError::ClosedFormUnavailable)?,
        Integrator::Rk4 => rk4_step(x, |s| system.flow(s), dt).map_err(|e| match e {
            IntegrationError::NonFiniteDerivative { state } => {
                SimError::NonFinite { t: time.t, j: time.j, state }
            }
        })?,
    };
    if out.iter().all(|c| c.is_finite()) {
        Ok(out)
    } else {
        Err(SimError::NonFinite { t: time.t + dt, j: time.j, state: out.to_vec() })
    }
}

/// Runs `system` from `x0` until the horizon, the jump budget, or the
/// settle criterion stops it.
///
/// A zero horizon yields an empty solution.
#[allow(clippy::type_complexity)]
pub fn simulate<S, const N: usize>(
    system: &S,
    x0: &[f64; N],
    opts: &SimulationOptions<S::Channel>,
) -> Result<HybridSolution<S::Channel, S::Record, S::Monitor, N>, SimError>
where
    S: HybridSystem<N>,
{
    opts.validate()?;
    if !x0.iter().all(|c| c.is_finite()) {
        return Err(SimError::NonFinite { t: 0.0, j: 0, state: x0.to_vec() });
    }
    let mut solution = HybridSolution {
        samples: Vec::new(),
        events: Vec::new(),
        termination: Termination::Horizon,
    };
    if opts.t_max == 0.0 {
        return Ok(solution);
    }

    let sample = |time: HybridTime, x: &[f64; N]| Sample { time, state: *x, monitor: system.monitor(x) };
    let union_margin = |x: &[f64; N]| {
        system
            .channels()
            .iter()
            .map(|&c| system.guard(c, x).margin())
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut x = *x0;
    let mut time = HybridTime::ZERO;
    let mut since_record = 0usize;
    let (mut arc_start, mut arc_start_t) = (x, time.t);
    solution.samples.push(sample(time, &x));

    loop {
        if let Some(tol) = opts.settle_tol {
            if system.settled(&x, tol) {
                solution.termination = Termination::Settled;
                break;
            }
        }

        let active = active_channels(system, &x, &opts.jump_priority);
        if !active.is_empty() {
            let (post, events, exhausted) =
                resolve_jumps(system, &x, time, &active, &opts.jump_priority, opts.j_max)?;
            if !events.is_empty() {
                if since_record != 0 {
                    // The pre-jump state closes the current arc.
                    solution.samples.push(sample(time, &x));
                }
                for event in &events {
                    solution.samples.push(sample(HybridTime::new(time.t, event.time.j + 1), &event.post));
                }
                time.j += events.len() as u64;
                x = post;
                (arc_start, arc_start_t) = (x, time.t);
                since_record = 0;
                solution.events.extend(events);
            }
            if exhausted {
                solution.termination = Termination::JumpBudgetExhausted;
                break;
            }
            continue;
        }

        if time.t >= opts.t_max {
            break;
        }
        let remaining = opts.t_max - time.t;
        let (h, last) = if remaining <= opts.step_h { (remaining, true) } else { (opts.step_h, false) };
        // Exact flows restart from the arc's first state so that rounding
        // does not accumulate step by step.
        let (base, base_t) = match opts.integrator {
            Integrator::ClosedForm => (&arc_start, arc_start_t),
            Integrator::Rk4 => (&x, time.t),
        };
        let from = |xa: &[f64; N], dt: f64| {
            let xa = if opts.integrator == Integrator::ClosedForm { base } else { xa };
            advance(system, opts.integrator, xa, time.t + dt - base_t, time)
        };
        let next = from(&x, h)?;

        if union_margin(&next) >= 0.0 {
            let located = locate_event(
                &union_margin,
                from,
                &x,
                &next,
                time.t,
                time.t + h,
                opts.event_tol,
            )??;
            let (t_event, x_event) = located;
            time.t = if t_event >= time.t + h && last { opts.t_max } else { t_event };
            x = x_event;
            since_record = 1;
            continue;
        }

        time.t = if last { opts.t_max } else { time.t + h };
        x = next;
        since_record += 1;
        if since_record >= opts.record_stride || last {
            solution.samples.push(sample(time, &x));
            since_record = 0;
        }
    }

    if since_record != 0 {
        solution.samples.push(sample(time, &x));
    }
    Ok(solution)
}
