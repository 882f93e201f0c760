//! Linear stability of periodic wave-trains.
//!
//! A perturbation of the `2N` fronts with transverse wavenumber `omega` and
//! circulant index `k` is unstable iff its dispersion function `F(lambda)` has
//! a zero with `Re lambda > 0`. Zeros are counted with the argument principle
//! along the imaginary axis ([`contour`]) and Hopf thresholds are located by
//! Newton iteration on `F(i lambda_I) = 0` ([`threshold`]).

pub mod contour;
pub mod threshold;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::kernels::{spectrum_from_b2, KernelSpectrum, POLE_BOUND};
use crate::numeric::tanhc;
use crate::wavetrain::{speed, ModelParams, GAMMA};
use crate::{Error, Result};

pub use contour::{count_unstable, ContourOptions, DispersionTrace};
pub use threshold::{find_threshold, threshold_scan, ScanRow, ThresholdOptions, ThresholdResult};

/// A perturbation mode: transverse wavenumber `omega = 2 pi q / rho` and
/// circulant index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub q: u32,
    pub rho: f64,
    pub omega: f64,
    pub k: usize,
}

/// Alternating sum `sum_j (-1)^j (g_k)_j` of the circulant eigenvector.
///
/// Flat (`omega = 0`) perturbations must leave the enclosed area unchanged,
/// which requires this to vanish. It does for every `k` except `k = N`.
pub fn volume_defect(k: usize, n: usize) -> Complex64 {
    (0..2 * n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * Complex64::from_polar(1.0, PI * (k * j) as f64 / n as f64)
        })
        .sum()
}

impl Mode {
    pub fn new(q: u32, rho: f64, k: usize, n: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        let omega = 2.0 * PI * q as f64 / rho;
        Self::check(omega, k, n)?;
        Ok(Self { q, rho, omega, k })
    }

    /// Mode with a prescribed wavenumber, taken as the first harmonic of a
    /// domain of height `2 pi / omega`.
    pub fn from_omega(omega: f64, k: usize, n: usize) -> Result<Self> {
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "omega must be nonnegative, got {omega}"
            )));
        }
        Self::check(omega, k, n)?;
        if omega == 0.0 {
            Ok(Self {
                q: 0,
                rho: 1.0,
                omega,
                k,
            })
        } else {
            Ok(Self {
                q: 1,
                rho: 2.0 * PI / omega,
                omega,
                k,
            })
        }
    }

    fn check(omega: f64, k: usize, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidParameter("front-pair count N must be positive".into()));
        }
        if k >= 2 * n {
            return Err(Error::InvalidParameter(format!(
                "circulant index k = {k} must be below 2N = {}",
                2 * n
            )));
        }
        if omega == 0.0 && k == n {
            return Err(Error::InvalidParameter(format!(
                "mode (omega = 0, k = N = {n}) changes the enclosed area and is excluded"
            )));
        }
        Ok(())
    }

    pub fn is_flat(&self) -> bool {
        self.omega == 0.0
    }
}

/// `mu = sqrt(omega^2 + tau lambda)`, principal branch.
pub fn mu(lambda: Complex64, omega: f64, tau: f64) -> Complex64 {
    (omega * omega + tau * lambda).sqrt()
}

fn spectrum(k: usize, a: f64, b2: Complex64, n: usize) -> Result<KernelSpectrum> {
    let s = spectrum_from_b2(k, a, b2, n);
    if !(s.denominator >= POLE_BOUND) {
        return Err(Error::NearPole {
            magnitude: s.denominator,
        });
    }
    Ok(s)
}

/// Dispersion function of the flat (`omega = 0`, `k = 0`) stationary mode,
/// `(lambda / 4N) (1 + theta tanh(z) / z)` with `z = sqrt(tau lambda) / 4N`.
pub fn zero_mode_stationary(lambda: Complex64, theta: f64, tau: f64, n: usize) -> Complex64 {
    let four_n = 4.0 * n as f64;
    let z = (tau * lambda).sqrt() / four_n;
    lambda / four_n * (1.0 + theta * tanhc(z))
}

/// Stationary dispersion function
/// `F = gamma omega^2 / 2 - lambda zeta_k(0, omega) - lambda theta zeta_k(0, mu)`.
///
/// Flat modes other than `k = 0` are evaluated from the same formula with
/// `omega = 0`; the `k = 0` flat mode should go through
/// [`zero_mode_stationary`].
pub fn f_stationary(lambda: Complex64, mode: &Mode, params: &ModelParams, n: usize) -> Result<Complex64> {
    let w2 = Complex64::new(mode.omega * mode.omega, 0.0);
    let z_w = spectrum(mode.k, 0.0, w2, n)?.zeta1;
    let z_mu = spectrum(mode.k, 0.0, w2 + params.tau * lambda, n)?.zeta1;
    Ok(0.5 * GAMMA * w2 - lambda * z_w - lambda * params.theta * z_mu)
}

/// Dispersion function of a wave-train traveling with speed `c0`.
pub fn f_traveling(lambda: Complex64, mode: &Mode, params: &ModelParams, n: usize, c0: f64) -> Result<Complex64> {
    let (tau, theta) = (params.tau, params.theta);
    let w2 = Complex64::new(mode.omega * mode.omega, 0.0);
    let b2_mu = w2 + tau * lambda;
    let at_rest = spectrum(mode.k, 0.0, w2, n)?;
    let drifting = spectrum(mode.k, tau * c0, b2_mu, n)?;
    // (1 + (1 + 2 theta) E) / (1 + E) with E = e^{tau c0 / 2N}, via e^{-tau c0 / 2N}
    let e_inv = (-tau * c0 / (2.0 * n as f64)).exp();
    let ratio = (e_inv + 1.0 + 2.0 * theta) / (e_inv + 1.0);
    Ok(
        -lambda * at_rest.zeta1 - theta * (lambda + tau * c0 * c0) * drifting.zeta1
            + c0 * at_rest.zeta2
            + theta * c0 * drifting.zeta2
            + 0.5 * GAMMA * w2
            - 0.5 * c0 * ratio,
    )
}

/// Whether the dispersion function describes a stationary or traveling train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Stationary,
    Traveling,
}

/// A dispersion function bound to its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dispersion {
    pub mode: Mode,
    pub params: ModelParams,
    pub n: usize,
    pub regime: Regime,
    pub c0: f64,
}

impl Dispersion {
    pub fn stationary(mode: Mode, tau: f64, theta: f64, n: usize) -> Result<Self> {
        let params = ModelParams::new(1.0, tau, theta, mode.rho)?;
        Mode::check(mode.omega, mode.k, n)?;
        Ok(Self {
            mode,
            params,
            n,
            regime: Regime::Stationary,
            c0: 0.0,
        })
    }

    /// Traveling train; `c0` is solved from `theta`, which must lie below -1.
    pub fn traveling(mode: Mode, tau: f64, theta: f64, n: usize) -> Result<Self> {
        let params = ModelParams::new(1.0, tau, theta, mode.rho)?;
        Mode::check(mode.omega, mode.k, n)?;
        let c0 = speed(theta, tau, n)?;
        if !(c0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "traveling trains need theta < -1, got theta = {theta}"
            )));
        }
        Ok(Self {
            mode,
            params,
            n,
            regime: Regime::Traveling,
            c0,
        })
    }

    pub fn new(regime: Regime, mode: Mode, tau: f64, theta: f64, n: usize) -> Result<Self> {
        match regime {
            Regime::Stationary => Self::stationary(mode, tau, theta, n),
            Regime::Traveling => Self::traveling(mode, tau, theta, n),
        }
    }

    fn uses_zero_mode_formula(&self) -> bool {
        self.regime == Regime::Stationary && self.mode.is_flat() && self.mode.k == 0
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        match self.regime {
            Regime::Stationary if self.uses_zero_mode_formula() => {
                Ok(zero_mode_stationary(lambda, self.params.theta, self.params.tau, self.n))
            }
            Regime::Stationary => f_stationary(lambda, &self.mode, &self.params, self.n),
            Regime::Traveling => f_traveling(lambda, &self.mode, &self.params, self.n, self.c0),
        }
    }

    /// Coefficient `C` of the large-`|lambda|` asymptote `F ~ C lambda`.
    pub fn tail_coefficient(&self) -> Result<Complex64> {
        if self.uses_zero_mode_formula() {
            return Ok(Complex64::new(1.0 / (4.0 * self.n as f64), 0.0));
        }
        let w2 = Complex64::new(self.mode.omega * self.mode.omega, 0.0);
        Ok(-spectrum(self.mode.k, 0.0, w2, self.n)?.zeta1)
    }

    /// Flat modes carry a neutral eigenvalue at the origin, which the contour
    /// must step around.
    pub fn has_origin_root(&self) -> bool {
        self.mode.is_flat()
    }

    pub fn count_unstable(&self, opts: &ContourOptions) -> Result<DispersionTrace> {
        let mut opts = opts.clone();
        if self.has_origin_root() && opts.indent.is_none() {
            opts.indent = Some(contour::DEFAULT_INDENT);
        }
        count_unstable(&|l| self.eval(l), self.tail_coefficient()?, &opts)
    }
}
