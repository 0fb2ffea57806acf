//! The three impulsive channel controllers.
//!
//! Every channel owns a timer `tau` in `[0, 2]` flowing at `n/2π` until it
//! reaches one revolution, then slowing to a stop at `2` through the dead
//! zone. A channel may only fire once its timer has passed the dwell
//! threshold, and firing resets the timer to zero.
//!
//! - out-of-plane: damps `v_z` when `r_z` crosses zero, alternating the
//!   crossing direction through the logic variable `q_z`.
//! - `beta`: fires periodically with `u_y = sat(beta/3)`, which zeroes the
//!   along-track drift rate `beta` in finitely many impulses.
//! - `alpha`: fires `u_x = n·alpha/4 - y/2` at zero crossings of `x`.
//!
//! The functions here act on the reduced per-channel states; the
//! [`closed_loop`](crate::closed_loop) module applies the same inputs to the
//! full plant.

use core::fmt;

use libm::exp;
use thiserror::Error;

use crate::hcw::{dz, sat, OrbitParams};
use crate::hybrid::GuardConjunction;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("dwell threshold must lie in (0, 2), got {0}")]
pub struct ThresholdError(pub f64);

/// Dwell-time threshold `tau^M` in `(0, 2)`, in revolutions.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DwellThreshold(f64);

impl DwellThreshold {
    pub fn new(value: f64) -> Result<Self, ThresholdError> {
        if value > 0.0 && value < 2.0 {
            Ok(Self(value))
        } else {
            Err(ThresholdError(value))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Minimum spacing in seconds between firings, valid for thresholds up to one revolution.
    pub fn dwell_seconds(self, p: &OrbitParams) -> f64 {
        self.0 * p.period()
    }
}

impl fmt::Display for DwellThreshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Logic variable `q` in `{-1, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Logic {
    Minus,
    #[default]
    Plus,
}

impl Logic {
    pub fn value(self) -> f64 {
        match self {
            Logic::Minus => -1.0,
            Logic::Plus => 1.0,
        }
    }

    pub fn toggled(self) -> Self {
        match self {
            Logic::Minus => Logic::Plus,
            Logic::Plus => Logic::Minus,
        }
    }

    /// Non-negative values map to `Plus`.
    pub fn from_value(v: f64) -> Self {
        if v < 0.0 {
            Logic::Minus
        } else {
            Logic::Plus
        }
    }
}

/// `(n/2π)(1 - dz(tau))`.
pub fn timer_derivative(tau: f64, p: &OrbitParams) -> f64 {
    p.timer_rate() * (1.0 - dz(tau))
}

/// Exact timer flow over `dt >= 0` seconds.
pub fn propagate_timer(tau: f64, p: &OrbitParams, dt: f64) -> f64 {
    let c = p.timer_rate();
    let (mut tau, mut dt) = (tau, dt);
    if tau < -1.0 {
        // tau' = -c·tau until tau = -1.
        let to_edge = libm::log(-tau) / c;
        if dt <= to_edge {
            return tau * exp(-c * dt);
        }
        tau = -1.0;
        dt -= to_edge;
    }
    if tau < 1.0 {
        let to_edge = (1.0 - tau) / c;
        if dt <= to_edge {
            return tau + c * dt;
        }
        tau = 1.0;
        dt -= to_edge;
    }
    // tau' = c·(2 - tau), settling on 2 from either side.
    2.0 - (2.0 - tau) * exp(-c * dt)
}

/// Result of one channel firing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Firing {
    /// Input requested by the control law, m/s.
    pub commanded: f64,
    /// Input after saturation, m/s.
    pub applied: f64,
    /// Change of the channel Lyapunov function across the jump.
    pub delta_v: f64,
}

/// `n²r_z² + v_z²`.
pub fn z_lyapunov(r_z: f64, v_z: f64, n: f64) -> f64 {
    n * n * r_z * r_z + v_z * v_z
}

/// `beta²`.
pub fn beta_lyapunov(beta: f64) -> f64 {
    beta * beta
}

/// `n²x² + y² + (n²/4)alpha²`.
pub fn alpha_lyapunov(x: f64, y: f64, alpha: f64, n: f64) -> f64 {
    n * n * x * x + y * y + 0.25 * n * n * alpha * alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZChannelState {
    pub r_z: f64,
    pub v_z: f64,
    pub q: Logic,
    pub tau: f64,
}

/// Applied out-of-plane impulse, `-sat(v_z)`.
pub fn z_input(v_z: f64, umax: f64) -> f64 {
    -sat(v_z, umax)
}

/// `(r_z(v_z - n r_z), q v_z, tau - tau^M)`.
pub fn z_guard(r_z: f64, v_z: f64, q: Logic, tau: f64, p: &OrbitParams, tau_m: DwellThreshold) -> GuardConjunction {
    GuardConjunction::new(&[r_z * (v_z - p.n * r_z), q.value() * v_z, tau - tau_m.get()])
}

pub fn z_jump(s: ZChannelState, p: &OrbitParams) -> (ZChannelState, Firing) {
    let applied = z_input(s.v_z, p.umax);
    let s_v = -applied;
    let post = ZChannelState { r_z: s.r_z, v_z: s.v_z + applied, q: s.q.toggled(), tau: 0.0 };
    let firing = Firing { commanded: -s.v_z, applied, delta_v: -s_v * (2.0 * s.v_z - s_v) };
    (post, firing)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BetaChannelState {
    pub beta: f64,
    pub tau: f64,
}

/// Along-track impulse `u_y = sat(beta/3)`; with the `-3` gain of `u_y` on
/// `beta` this realizes `beta⁺ = beta - 3 sat(beta/3)`.
pub fn beta_input(beta: f64, umax: f64) -> f64 {
    sat(beta / 3.0, umax)
}

pub fn beta_guard(tau: f64, tau_m: DwellThreshold) -> GuardConjunction {
    GuardConjunction::new(&[tau - tau_m.get()])
}

pub fn beta_jump(s: BetaChannelState, p: &OrbitParams) -> (BetaChannelState, Firing) {
    let applied = beta_input(s.beta, p.umax);
    // Inside the linear zone the update is exactly zero.
    let beta = if applied == s.beta / 3.0 { 0.0 } else { s.beta - 3.0 * applied };
    let post = BetaChannelState { beta, tau: 0.0 };
    let firing = Firing {
        commanded: s.beta / 3.0,
        applied,
        delta_v: beta_lyapunov(beta) - beta_lyapunov(s.beta),
    };
    (post, firing)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaChannelState {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
    pub q: Logic,
    pub tau: f64,
}

/// Radial impulse law `n·alpha/4 - y/2` before saturation.
pub fn alpha_input(y: f64, alpha: f64, n: f64) -> f64 {
    0.25 * n * alpha - 0.5 * y
}

/// `((y - n alpha/2 - n x)x, q (y - n alpha/2), tau - tau^M)`.
pub fn alpha_guard(
    x: f64,
    y: f64,
    alpha: f64,
    q: Logic,
    tau: f64,
    p: &OrbitParams,
    tau_m: DwellThreshold,
) -> GuardConjunction {
    let w = y - 0.5 * p.n * alpha;
    GuardConjunction::new(&[(w - p.n * x) * x, q.value() * w, tau - tau_m.get()])
}

pub fn alpha_jump(s: AlphaChannelState, p: &OrbitParams) -> (AlphaChannelState, Firing) {
    let commanded = alpha_input(s.y, s.alpha, p.n);
    let applied = sat(commanded, p.umax);
    let post = AlphaChannelState {
        x: s.x,
        y: s.y + applied,
        alpha: s.alpha - 2.0 / p.n * applied,
        q: s.q.toggled(),
        tau: 0.0,
    };
    let w = s.y - 0.5 * p.n * s.alpha;
    let firing = Firing { commanded, applied, delta_v: 2.0 * applied * w + 2.0 * applied * applied };
    (post, firing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const N: f64 = 0.0011;

    fn p() -> OrbitParams {
        OrbitParams::new(N, 0.2).unwrap()
    }

    fn th(v: f64) -> DwellThreshold {
        DwellThreshold::new(v).unwrap()
    }

    #[test]
    fn threshold_range() {
        assert!(DwellThreshold::new(0.0).is_err());
        assert!(DwellThreshold::new(2.0).is_err());
        assert!(DwellThreshold::new(f64::NAN).is_err());
        assert!(DwellThreshold::new(1.99).is_ok());
    }

    #[test]
    fn z_input_examples() {
        assert_eq!(z_input(0.1, 0.2), -0.1);
        assert_eq!(z_input(0.5, 0.2), -0.2);
        assert_eq!(z_input(0.0, 0.2), 0.0);
    }

    #[test]
    fn z_guard_examples() {
        let g = z_guard(0.0, 0.1, Logic::Plus, 0.25, &p(), th(0.25));
        assert_eq!(g.terms(), &[0.0, 0.1, 0.0]);
        assert!(g.is_satisfied());
        let g = z_guard(1.0, 0.0, Logic::Plus, 1.5, &p(), th(0.25));
        assert_eq!(g.terms()[0], -N);
        assert!(!g.is_satisfied());
        let g = z_guard(0.0, 0.3, Logic::Plus, 0.0, &p(), th(0.25));
        assert!(g.terms()[2] < 0.0 && !g.is_satisfied());
    }

    #[test]
    fn z_jump_examples() {
        let s = ZChannelState { r_z: 0.0, v_z: 0.5, q: Logic::Plus, tau: 0.3 };
        let (post, f) = z_jump(s, &p());
        assert!((post.v_z - 0.3).abs() < 1e-15);
        assert_eq!(post.q, Logic::Minus);
        assert_eq!(post.tau, 0.0);
        assert!((f.delta_v + 0.16).abs() < 1e-15);

        let s = ZChannelState { r_z: 0.0, v_z: 0.1, q: Logic::Minus, tau: 0.3 };
        let (post, f) = z_jump(s, &p());
        assert_eq!(post.v_z, 0.0);
        assert_eq!(post.q, Logic::Plus);
        assert!((f.delta_v + 0.01).abs() < 1e-15);

        let s = ZChannelState { r_z: 0.0, v_z: 0.0, q: Logic::Plus, tau: 1.0 };
        let (post, f) = z_jump(s, &p());
        assert_eq!((post.r_z, post.v_z), (0.0, 0.0));
        assert_eq!(f.delta_v, 0.0);
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_input(0.396, 0.2), 0.396 / 3.0);
        assert!((beta_input(0.396, 0.2) - 0.132).abs() < 1e-16);
        let (post, _) = beta_jump(BetaChannelState { beta: 0.396, tau: 0.02 }, &p());
        assert_eq!(post.beta, 0.0);
        assert_eq!(beta_input(1.2, 0.2), 0.2);
        let (post, _) = beta_jump(BetaChannelState { beta: 1.2, tau: 0.02 }, &p());
        assert!((post.beta - 0.6).abs() < 1e-15);
        assert_eq!(beta_input(0.0, 0.2), 0.0);
    }

    #[test]
    fn beta_guard_examples() {
        assert_eq!(beta_guard(0.02, th(0.02)).margin(), 0.0);
        assert!(beta_guard(0.0, th(0.02)).margin() < 0.0);
        let period = th(0.02).get() / p().timer_rate();
        assert!((period - 114.24).abs() < 0.01, "{period}");
    }

    #[test]
    fn alpha_input_examples() {
        let u = alpha_input(0.0, 1000.0, N);
        assert!((u - 0.275).abs() < 1e-15);
        assert_eq!(sat(u, 0.2), 0.2);
        assert_eq!(alpha_input(1.0, 0.0, N), -0.5);
        assert_eq!(alpha_input(N * 400.0 / 2.0, 400.0, N), 0.0);
    }

    #[test]
    fn alpha_guard_examples() {
        let g = alpha_guard(0.0, 1.0, 0.0, Logic::Plus, 0.5, &p(), th(0.01));
        assert_eq!(g.terms(), &[0.0, 1.0, 0.49]);
        let g = alpha_guard(1.0, 0.0, 0.0, Logic::Plus, 0.5, &p(), th(0.01));
        assert_eq!(g.terms()[0], -N);
        let g = alpha_guard(0.0, -1.0, 0.0, Logic::Plus, 0.5, &p(), th(0.01));
        assert!(!g.is_satisfied());
    }

    #[test]
    fn alpha_jump_saturated_example() {
        let s = AlphaChannelState { x: 0.0, y: 1.0, alpha: 0.0, q: Logic::Plus, tau: 0.5 };
        let (post, f) = alpha_jump(s, &p());
        assert_eq!(f.commanded, -0.5);
        assert_eq!(f.applied, -0.2);
        assert!((post.y - 0.8).abs() < 1e-15);
        assert!((post.alpha - 0.4 / N).abs() < 1e-9);
        assert!((post.alpha - 363.636_363_6).abs() < 1e-6);
        let v0 = alpha_lyapunov(s.x, s.y, s.alpha, N);
        let v1 = alpha_lyapunov(post.x, post.y, post.alpha, N);
        assert!((v0 - 1.0).abs() < 1e-15);
        assert!((v1 - 0.68).abs() < 1e-12);
        assert!((f.delta_v + 0.32).abs() < 1e-12);
        assert!((f.delta_v - (v1 - v0)).abs() < 1e-12);
        assert_eq!((post.q, post.tau), (Logic::Minus, 0.0));
    }

    #[test]
    fn alpha_jump_null_input() {
        let s = AlphaChannelState { x: 3.0, y: N * 50.0, alpha: 100.0, q: Logic::Minus, tau: 1.0 };
        let (post, f) = alpha_jump(s, &p());
        assert_eq!((post.x, post.y, post.alpha), (s.x, s.y, s.alpha));
        assert_eq!(f.delta_v, 0.0);
    }

    #[test]
    fn timer_flow_closed_form() {
        let p = p();
        let period = p.period();
        assert!((propagate_timer(0.0, &p, 0.3 * period) - 0.3).abs() < 1e-15);
        // Stops at 2.
        assert_eq!(timer_derivative(2.0, &p), 0.0);
        let late = propagate_timer(0.0, &p, 50.0 * period);
        assert!(late <= 2.0 && late > 1.999_999);
        // Composition.
        let a = propagate_timer(propagate_timer(0.7, &p, 0.5 * period), &p, 0.4 * period);
        let b = propagate_timer(0.7, &p, 0.9 * period);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn timer_closed_form_matches_rk4() {
        let p = p();
        let h = p.period() / 1e4;
        let mut tau = [0.4];
        for _ in 0..20_000 {
            tau = crate::hybrid::rk4_step(&tau, |t| [timer_derivative(t[0], &p)], h).unwrap();
        }
        let exact = propagate_timer(0.4, &p, 20_000.0 * h);
        assert!((tau[0] - exact).abs() < 1e-8, "{} vs {exact}", tau[0]);
        assert!(exact > 1.0 && exact < 2.0);
    }

    proptest! {
        #[test]
        fn timer_stays_in_range(tau0 in 0.0..=2.0f64, orbits in 0.0..30.0f64) {
            let p = p();
            let tau = propagate_timer(tau0, &p, orbits * p.period());
            prop_assert!((0.0..=2.0).contains(&tau));
        }

        #[test]
        fn z_jump_decrease_bound(r_z in -1e3..1e3f64, v_z in -2.0..2.0f64, umax in 0.01..1.0f64) {
            let p = OrbitParams::new(N, umax).unwrap();
            let s = ZChannelState { r_z, v_z, q: Logic::Plus, tau: 1.0 };
            let (post, f) = z_jump(s, &p);
            let observed = z_lyapunov(post.r_z, post.v_z, N) - z_lyapunov(r_z, v_z, N);
            prop_assert!((observed - f.delta_v).abs() <= 1e-12 * (1.0 + v_z * v_z));
            prop_assert!(f.delta_v <= -v_z * sat(v_z, umax) + 1e-12);
        }

        #[test]
        fn alpha_delta_identity(x in -1e3..1e3f64, y in -2.0..2.0f64, alpha in -1e4..1e4f64, umax in 0.01..1.0f64) {
            let p = OrbitParams::new(N, umax).unwrap();
            let s = AlphaChannelState { x, y, alpha, q: Logic::Plus, tau: 1.0 };
            let (post, f) = alpha_jump(s, &p);
            let v0 = alpha_lyapunov(x, y, alpha, N);
            let observed = alpha_lyapunov(post.x, post.y, post.alpha, N) - v0;
            prop_assert!((observed - f.delta_v).abs() <= 1e-12 * (1.0 + v0));
            prop_assert!(f.delta_v <= -2.0 * f.applied * f.commanded + 1e-12 * (1.0 + v0));
            if f.commanded.abs() <= umax {
                prop_assert!((f.delta_v + 2.0 * f.commanded * f.commanded).abs() <= 1e-12 * (1.0 + v0));
            }
        }

        #[test]
        fn beta_jump_decrease(beta in -5.0..5.0f64, umax in 0.01..1.0f64) {
            let p = OrbitParams::new(N, umax).unwrap();
            let (_, f) = beta_jump(BetaChannelState { beta, tau: 1.0 }, &p);
            prop_assert!(f.delta_v <= -f.applied * beta / 3.0 + 1e-12);
        }
    }
}
