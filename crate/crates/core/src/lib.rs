//! Hybrid impulsive stabilizers for spacecraft rendezvous.
//!
//! The crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation:
//!
//! - [`hcw`]: Hill-Clohessy-Wiltshire relative dynamics, the exact state
//!   transition matrix, impulse saturation and the in-plane coordinate
//!   change to the oscillator / double-integrator split.
//! - [`hybrid`]: a small hybrid-automaton engine (flow integration, guard
//!   event localization, prioritized jump resolution, hybrid time).
//! - [`controllers`]: the out-of-plane, `beta` and `alpha` channel laws with
//!   their guard conjunctions and timer dynamics.
//! - [`closed_loop`]: the three channels composed with the plant.
//! - [`analysis`]: Lyapunov certificates, delta-v budgets and convergence
//!   metrics over finished solutions.
//!
//! File formats and the command line front end live in the `rendezvous`
//! crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod closed_loop;
pub mod controllers;
pub mod hcw;
pub mod hybrid;
pub mod matrix;

pub use closed_loop::{Channel, ClosedLoop, FullState, Subsystem, Trajectory};
pub use hcw::{OrbitParams, RelativeState, ZetaState};
pub use hybrid::{HybridTime, Integrator, SimulationOptions};
