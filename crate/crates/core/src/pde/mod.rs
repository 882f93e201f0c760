//! Pseudo-spectral simulation of the diffuse-interface system
//!
//! ```text
//! u_t = Lap w,   w = -eps Lap u + f(u) / eps + theta v,   tau v_t = Lap(v + u / tau)
//! ```
//!
//! on `[0, 1] x [0, rho]` with periodic boundaries, `f(u) = u^3 - u`.

mod config;
mod diagnostics;
mod run;
mod solver;
pub mod spectral;

pub use config::{InitKind, Perturbation, SimConfig};
pub use diagnostics::{measure_speed, unwrap_track, zero_crossings, Diagnostics, Record, SpeedEstimate};
pub use run::{read_field, run, RunOutput, SnapshotMeta};
pub use solver::{init_random, init_wavetrain, step, FieldState, Solver};

/// Divergence threshold on `max |u|`.
pub const BLOWUP: f64 = 10.0;
