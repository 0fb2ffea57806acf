//! Hill-Clohessy-Wiltshire relative motion about a circular target orbit.
//!
//! Frame is LVLH: `x` radial (positive away from Earth), `y` along-track,
//! `z` cross-track. Units are meters, seconds and radians throughout.

use core::f64::consts::PI;

use libm::{cos, fabs, sin};
use thiserror::Error;

use crate::matrix::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ParamError {
    #[error("mean motion must be finite and > 0, got {0}")]
    MeanMotion(f64),
    #[error("saturation bound must be finite and > 0, got {0}")]
    Saturation(f64),
}

/// Target orbit rate and the per-axis impulse bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitParams {
    /// Mean orbital angular speed of the target, rad/s.
    pub n: f64,
    /// Largest magnitude a single impulse may take on one axis, m/s.
    pub umax: f64,
}

impl OrbitParams {
    pub fn new(n: f64, umax: f64) -> Result<Self, ParamError> {
        if !(n.is_finite() && n > 0.0) {
            return Err(ParamError::MeanMotion(n));
        }
        if !(umax.is_finite() && umax > 0.0) {
            return Err(ParamError::Saturation(umax));
        }
        Ok(Self { n, umax })
    }

    /// Orbital period `2π/n`, seconds.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.n
    }

    /// Timer speed `n/2π` below the dead zone, 1/s.
    pub fn timer_rate(&self) -> f64 {
        self.n / (2.0 * PI)
    }
}

/// Chaser position and velocity relative to the target.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelativeState {
    pub r: [f64; 3],
    pub v: [f64; 3],
}

impl RelativeState {
    pub const ZERO: Self = Self { r: [0.0; 3], v: [0.0; 3] };

    pub fn new(r: [f64; 3], v: [f64; 3]) -> Self {
        Self { r, v }
    }

    /// `(r_x, r_y, r_z, v_x, v_y, v_z)`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.r[0], self.r[1], self.r[2], self.v[0], self.v[1], self.v[2]]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self { r: [a[0], a[1], a[2]], v: [a[3], a[4], a[5]] }
    }

    pub fn is_finite(&self) -> bool {
        self.r.iter().chain(self.v.iter()).all(|c| c.is_finite())
    }

    pub fn in_plane(&self) -> InPlaneState {
        InPlaneState { r_x: self.r[0], v_x: self.v[0], r_y: self.r[1], v_y: self.v[1] }
    }

    pub fn with_in_plane(mut self, s: InPlaneState) -> Self {
        self.r[0] = s.r_x;
        self.v[0] = s.v_x;
        self.r[1] = s.r_y;
        self.v[1] = s.v_y;
        self
    }
}

/// In-plane part of the plant in the ordering used by the transformation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InPlaneState {
    pub r_x: f64,
    pub v_x: f64,
    pub r_y: f64,
    pub v_y: f64,
}

impl InPlaneState {
    pub fn to_array(&self) -> [f64; 4] {
        [self.r_x, self.v_x, self.r_y, self.v_y]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { r_x: a[0], v_x: a[1], r_y: a[2], v_y: a[3] }
    }
}

/// Transformed in-plane coordinates.
///
/// `(x, y)` is a harmonic oscillator at rate `n` and `(alpha, beta)` is a
/// double integrator; the two only couple through impulses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZetaState {
    /// m
    pub x: f64,
    /// m/s
    pub y: f64,
    /// m
    pub alpha: f64,
    /// m/s
    pub beta: f64,
}

impl ZetaState {
    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.alpha, self.beta]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self { x: a[0], y: a[1], alpha: a[2], beta: a[3] }
    }
}

/// Time derivative of the unforced plant, `(ṙ, v̇)`.
pub fn hcw_derivative(s: &RelativeState, p: &OrbitParams) -> [f64; 6] {
    let n = p.n;
    let [rx, _, rz] = s.r;
    let [vx, vy, vz] = s.v;
    [
        vx,
        vy,
        vz,
        3.0 * n * n * rx + 2.0 * n * vy,
        -2.0 * n * vx,
        -n * n * rz,
    ]
}

/// Closed-form state transition matrix of the unforced plant over `dt`
/// seconds, acting on `(r_x, r_y, r_z, v_x, v_y, v_z)`.
///
/// Negative `dt` propagates backwards.
pub fn hcw_stm(p: &OrbitParams, dt: f64) -> Matrix<6, 6> {
    let n = p.n;
    let nt = n * dt;
    let (s, c) = (sin(nt), cos(nt));
    [
        [4.0 - 3.0 * c, 0.0, 0.0, s / n, 2.0 * (1.0 - c) / n, 0.0],
        [6.0 * (s - nt), 1.0, 0.0, -2.0 * (1.0 - c) / n, (4.0 * s - 3.0 * nt) / n, 0.0],
        [0.0, 0.0, c, 0.0, 0.0, s / n],
        [3.0 * n * s, 0.0, 0.0, c, 2.0 * s, 0.0],
        [-6.0 * n * (1.0 - c), 0.0, 0.0, -2.0 * s, 4.0 * c - 3.0, 0.0],
        [0.0, 0.0, -n * s, 0.0, 0.0, c],
    ]
}

pub fn propagate(s: &RelativeState, p: &OrbitParams, dt: f64) -> RelativeState {
    RelativeState::from_array(matrix::mul_vec(&hcw_stm(p, dt), &s.to_array()))
}

/// Symmetric saturation to `[-umax, umax]`.
pub fn sat(u: f64, umax: f64) -> f64 {
    if fabs(u) > umax {
        umax.copysign(u)
    } else {
        u
    }
}

/// Dead zone of unit width: `u - sat(u, 1)`.
pub fn dz(u: f64) -> f64 {
    u - sat(u, 1.0)
}

/// Impulsive velocity change with per-axis saturation; position is kept.
pub fn apply_impulse(s: &RelativeState, u: [f64; 3], p: &OrbitParams) -> RelativeState {
    let mut out = *s;
    for (v, u) in out.v.iter_mut().zip(u) {
        *v += sat(u, p.umax);
    }
    out
}

/// `T`, mapping `(r_x, v_x, r_y, v_y)` to `(x, y, alpha, beta)`.
pub fn transform_matrix(n: f64) -> Matrix<4, 4> {
    [
        [-3.0, 0.0, 0.0, -2.0 / n],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, -2.0 / n, 1.0, 0.0],
        [-6.0 * n, 0.0, 0.0, -3.0],
    ]
}

/// Analytic inverse of [`transform_matrix`].
pub fn inverse_transform_matrix(n: f64) -> Matrix<4, 4> {
    [
        [1.0, 0.0, 0.0, -2.0 / (3.0 * n)],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 2.0 / n, 1.0, 0.0],
        [-2.0 * n, 0.0, 0.0, 1.0],
    ]
}

/// In-plane dynamics in the original coordinates.
pub fn in_plane_dynamics(n: f64) -> Matrix<4, 4> {
    [
        [0.0, 1.0, 0.0, 0.0],
        [3.0 * n * n, 0.0, 0.0, 2.0 * n],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, -2.0 * n, 0.0, 0.0],
    ]
}

/// Impulse input matrix in the original coordinates, columns `(u_x, u_y)`.
pub fn in_plane_input() -> Matrix<4, 2> {
    [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
}

/// Oscillator plus double integrator.
pub fn zeta_dynamics(n: f64) -> Matrix<4, 4> {
    [
        [0.0, 1.0, 0.0, 0.0],
        [-n * n, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ]
}

/// Impulse coupling in transformed coordinates: `u_x` drives `(y, alpha)`,
/// `u_y` drives `(x, beta)`.
pub fn zeta_input(n: f64) -> Matrix<4, 2> {
    [[0.0, -2.0 / n], [1.0, 0.0], [-2.0 / n, 0.0], [0.0, -3.0]]
}

pub fn to_zeta(s: &InPlaneState, p: &OrbitParams) -> ZetaState {
    let n = p.n;
    ZetaState {
        x: -3.0 * s.r_x - 2.0 / n * s.v_y,
        y: s.v_x,
        alpha: -2.0 / n * s.v_x + s.r_y,
        beta: -6.0 * n * s.r_x - 3.0 * s.v_y,
    }
}

pub fn from_zeta(z: &ZetaState, p: &OrbitParams) -> InPlaneState {
    let n = p.n;
    InPlaneState {
        r_x: z.x - 2.0 / (3.0 * n) * z.beta,
        v_x: z.y,
        r_y: z.alpha + 2.0 / n * z.y,
        v_y: -2.0 * n * z.x + z.beta,
    }
}
