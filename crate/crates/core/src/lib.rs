//! Sharp-interface analysis of the non-reciprocal Cahn-Hilliard system.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: periodic Green's-type functions on the unit interval and the
//!   spectra of the circulant matrices they generate.
//! * [`wavetrain`]: stationary and traveling periodic wave-trains of the
//!   reduced free-boundary problem, their speeds and profiles, and the diffuse
//!   composite fields used to initialise simulations.
//! * [`stability`]: dispersion functions, winding-number counts of unstable
//!   eigenvalues and Hopf-threshold continuation.
//! * [`pde`]: a pseudo-spectral IMEX solver for the full diffuse-interface
//!   system with conservation and energy diagnostics.
//!
//! Data-parallel loops (threshold scans, 2D transforms, batch sweeps) run on
//! rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise.

// `!(x < y)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernels;
pub mod numeric;
pub mod par;
pub mod pde;
pub mod stability;
pub mod wavetrain;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Format a float with 17 significant digits so that text output round-trips.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:.16e}", x)
    }
}
