//! Scenario files: flat TOML key-value documents.

use std::path::{Path, PathBuf};

use rendezvous_core::closed_loop::{Channel, ChannelState, Fault, FullState, Subsystem, Thresholds};
use rendezvous_core::controllers::{DwellThreshold, Logic};
use rendezvous_core::hcw::{OrbitParams, RelativeState};
use rendezvous_core::hybrid::{Integrator, SimulationOptions};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Every key is optional; missing ones take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Mean motion, rad/s.
    pub n: f64,
    /// Per-axis impulse saturation, m/s.
    pub umax: f64,
    pub tau_z_m: f64,
    pub tau_beta_m: f64,
    pub tau_alpha_m: f64,

    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
    pub v_x: f64,
    pub v_y: f64,
    pub v_z: f64,

    /// Initial logic and timer values; timers default to their thresholds.
    pub q_z: i8,
    pub tau_z: Option<f64>,
    pub tau_beta: Option<f64>,
    pub q_alpha: i8,
    pub tau_alpha: Option<f64>,

    /// `z`, `inplane` or `full`; `simulate --subsystem` overrides it.
    pub subsystem: String,
    /// `closed-form` or `rk4`.
    pub integrator: String,
    /// Flow step in seconds; defaults to a thousandth of an orbit.
    pub step_h: Option<f64>,
    /// Horizon in seconds. Takes precedence over `orbits`.
    pub t_max: Option<f64>,
    /// Horizon in orbital periods.
    pub orbits: f64,
    pub j_max: u64,
    pub event_tol: f64,
    pub record_stride: usize,
    /// Jump order for simultaneously active channels.
    pub priority: Vec<String>,
    /// Convergence ball radius in m/s. Defaults to `epsilon_rel` times the
    /// initial distance.
    pub epsilon: Option<f64>,
    pub epsilon_rel: f64,
    pub output_dir: PathBuf,
    /// Corrupts a jump map on purpose; `none` or `flip-alpha-input`.
    pub fault: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n: 0.0011,
            umax: 0.2,
            tau_z_m: 0.25,
            tau_beta_m: 0.02,
            tau_alpha_m: 0.01,
            r_x: 0.0,
            r_y: 0.0,
            r_z: 10.0,
            v_x: 0.0,
            v_y: 0.0,
            v_z: 0.0,
            q_z: 1,
            tau_z: None,
            tau_beta: None,
            q_alpha: 1,
            tau_alpha: None,
            subsystem: "full".into(),
            integrator: "closed-form".into(),
            step_h: None,
            t_max: None,
            orbits: 20.0,
            j_max: 100_000,
            event_tol: 1e-6,
            record_stride: 1,
            priority: vec!["z".into(), "beta".into(), "alpha".into()],
            epsilon: None,
            epsilon_rel: 1e-3,
            output_dir: PathBuf::from("out"),
            fault: "none".into(),
        }
    }
}

/// A validated scenario, ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: OrbitParams,
    pub thresholds: Thresholds,
    pub initial: FullState,
    pub subsystem: Subsystem,
    pub options: SimulationOptions<Channel>,
    pub epsilon: Option<f64>,
    pub epsilon_rel: f64,
    pub output_dir: PathBuf,
    pub fault: Fault,
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

fn threshold(field: &'static str, value: f64) -> Result<DwellThreshold, ConfigError> {
    DwellThreshold::new(value).map_err(|e| invalid(field, e.to_string()))
}

fn logic(field: &'static str, value: i8) -> Result<Logic, ConfigError> {
    match value {
        1 => Ok(Logic::Plus),
        -1 => Ok(Logic::Minus),
        _ => Err(invalid(field, format!("must be 1 or -1, got {value}"))),
    }
}

fn timer(field: &'static str, value: Option<f64>, default: DwellThreshold) -> Result<f64, ConfigError> {
    match value {
        None => Ok(default.get()),
        Some(t) if (0.0..=2.0).contains(&t) => Ok(t),
        Some(t) => Err(invalid(field, format!("must lie in [0, 2], got {t}"))),
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn validate(&self) -> Result<Scenario, ConfigError> {
        let params = OrbitParams::new(self.n, self.umax).map_err(|e| invalid("n/umax", e.to_string()))?;
        let thresholds = Thresholds {
            z: threshold("tau_z_m", self.tau_z_m)?,
            beta: threshold("tau_beta_m", self.tau_beta_m)?,
            alpha: threshold("tau_alpha_m", self.tau_alpha_m)?,
        };
        let plant = RelativeState::new([self.r_x, self.r_y, self.r_z], [self.v_x, self.v_y, self.v_z]);
        if !plant.is_finite() {
            return Err(invalid("r_*/v_*", "initial state must be finite"));
        }
        let initial = FullState {
            plant,
            z_ctl: ChannelState { q: Some(logic("q_z", self.q_z)?), tau: timer("tau_z", self.tau_z, thresholds.z)? },
            beta_ctl: ChannelState::timer_only(timer("tau_beta", self.tau_beta, thresholds.beta)?),
            alpha_ctl: ChannelState {
                q: Some(logic("q_alpha", self.q_alpha)?),
                tau: timer("tau_alpha", self.tau_alpha, thresholds.alpha)?,
            },
        };
        let subsystem = Subsystem::from_name(&self.subsystem)
            .ok_or_else(|| invalid("subsystem", format!("expected z, inplane or full, got {:?}", self.subsystem)))?;
        let integrator = match self.integrator.as_str() {
            "closed-form" => Integrator::ClosedForm,
            "rk4" => Integrator::Rk4,
            other => return Err(invalid("integrator", format!("expected closed-form or rk4, got {other:?}"))),
        };
        let period = params.period();
        let step_h = self.step_h.unwrap_or(period / 1000.0);
        if !(step_h.is_finite() && step_h > 0.0) {
            return Err(invalid("step_h", "must be finite and > 0"));
        }
        let t_max = self.t_max.unwrap_or(self.orbits * period);
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(invalid("t_max/orbits", "horizon must be finite and >= 0"));
        }
        if !(self.event_tol > 0.0 && self.event_tol < step_h) {
            return Err(invalid("event_tol", format!("must lie in (0, step_h = {step_h})")));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be >= 1"));
        }
        let mut jump_priority = Vec::new();
        for name in &self.priority {
            let c = Channel::from_name(name)
                .ok_or_else(|| invalid("priority", format!("unknown channel {name:?}; expected z, beta or alpha")))?;
            if jump_priority.contains(&c) {
                return Err(invalid("priority", format!("channel {name:?} listed twice")));
            }
            jump_priority.push(c);
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(invalid("epsilon", "must be finite and > 0"));
            }
        }
        if !(self.epsilon_rel.is_finite() && self.epsilon_rel > 0.0) {
            return Err(invalid("epsilon_rel", "must be finite and > 0"));
        }
        let fault = match self.fault.as_str() {
            "none" => Fault::None,
            "flip-alpha-input" => Fault::FlipAlphaInput,
            other => return Err(invalid("fault", format!("expected none or flip-alpha-input, got {other:?}"))),
        };
        Ok(Scenario {
            params,
            thresholds,
            initial,
            subsystem,
            options: SimulationOptions {
                step_h,
                t_max,
                j_max: self.j_max,
                event_tol: self.event_tol,
                jump_priority,
                integrator,
                settle_tol: None,
                record_stride: self.record_stride,
            },
            epsilon: self.epsilon,
            epsilon_rel: self.epsilon_rel,
            output_dir: self.output_dir.clone(),
            fault,
        })
    }

    /// Sets one of the sweepable parameters.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        match name {
            "tau_z_m" => self.tau_z_m = value,
            "tau_beta_m" => self.tau_beta_m = value,
            "tau_alpha_m" => self.tau_alpha_m = value,
            "umax" => self.umax = value,
            _ => {
                return Err(invalid("param", format!("expected tau_z_m, tau_beta_m, tau_alpha_m or umax, got {name:?}")))
            }
        }
        Ok(())
    }
}

/// Scenario files shipped with the crate.
pub mod bundled {
    pub const Z_FAST: &str = include_str!("../scenarios/z_fast.toml");
    pub const Z_SLOW: &str = include_str!("../scenarios/z_slow.toml");
    pub const INPLANE_REF: &str = include_str!("../scenarios/inplane_ref.toml");
    pub const INPLANE_LIVE: &str = include_str!("../scenarios/inplane_live.toml");
    pub const FULL_REF: &str = include_str!("../scenarios/full_ref.toml");

    pub const ALL: [(&str, &str); 5] = [
        ("z_fast", Z_FAST),
        ("z_slow", Z_SLOW),
        ("inplane_ref", INPLANE_REF),
        ("inplane_live", INPLANE_LIVE),
        ("full_ref", FULL_REF),
    ];
}
