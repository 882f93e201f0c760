//! Periodic kernels on the unit interval.
//!
//! `G_I(x; a, b)` and `G_II(x; a, b)` are the 1-periodic solutions of
//! `G'' + a G' - b^2 G = 0` on `(0, 1)` carrying, respectively, a unit jump in
//! the derivative and a unit jump in the value at `x = 0`. Sampling them at the
//! uniformly spaced fronts `x_n = n / 2N` with alternating signs produces
//! circulant matrices whose eigenvalues have closed forms; those eigenvalues
//! are what the dispersion functions consume.
//!
//! All closed forms are written in terms of `e^{-s}` with `Re s >= 0`, so they
//! stay finite for the large transverse wavenumbers and growth rates met along
//! the stability contours.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::numeric::{expm1, expm1_over_z};
use crate::{Error, Result};

/// Smallest admissible magnitude of the scaled circulant denominator.
pub const POLE_BOUND: f64 = 1e-8;

/// Roots of `r^2 + a r - b^2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpRates {
    pub beta_plus: Complex64,
    pub beta_minus: Complex64,
}

/// Validated `(a, b, N)` triple for evaluating kernel spectra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub a: f64,
    pub b: Complex64,
    pub n: usize,
}

/// Eigenvalues of the two circulant matrices for one index `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpectrum {
    pub zeta1: Complex64,
    pub zeta2: Complex64,
    /// Magnitude of the shared denominator after scaling by `2 e^{-s}`.
    pub denominator: f64,
}

/// Which one-sided limit of `G_II` to take at its jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x -> 0+`
    RightOfZero,
    /// `x -> 1-`
    LeftOfOne,
}

fn check_b(b: Complex64) -> Result<()> {
    if b == Complex64::new(0.0, 0.0) || !b.re.is_finite() || !b.im.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "kernel decay b must be nonzero and finite, got {b}"
        )));
    }
    Ok(())
}

impl KernelParams {
    /// Only `b^2` enters the kernels, so the sector condition `|arg b| < pi/4`
    /// is checked as `Re(b^2) > 0`, which accepts `b` and `-b` alike.
    pub fn new(a: f64, b: Complex64, n: usize) -> Result<Self> {
        check_b(b)?;
        if !a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel drift a must be finite, got {a}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("front-pair count N must be positive".into()));
        }
        if (b * b).re <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kernel decay b = {b} is outside the sector |arg b| < pi/4"
            )));
        }
        Ok(Self { a, b, n })
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k >= 2 * self.n {
            return Err(Error::InvalidParameter(format!(
                "circulant index k = {k} must be below 2N = {}",
                2 * self.n
            )));
        }
        Ok(())
    }

    pub fn spectrum(&self, k: usize) -> Result<KernelSpectrum> {
        self.check_k(k)?;
        let spec = spectrum_from_b2(k, self.a, self.b * self.b, self.n);
        if spec.denominator < POLE_BOUND {
            return Err(Error::NearPole {
                magnitude: spec.denominator,
            });
        }
        Ok(spec)
    }

    pub fn zeta1(&self, k: usize) -> Result<Complex64> {
        Ok(self.spectrum(k)?.zeta1)
    }

    pub fn zeta2(&self, k: usize) -> Result<Complex64> {
        Ok(self.spectrum(k)?.zeta2)
    }
}

/// Closed-form circulant eigenvalues, parametrised by `b^2` and without
/// validation.
///
/// Callers inside the crate use this on the boundary of the admissible sector
/// (`b^2` purely imaginary, or `b = 0` with `a != 0`) where the formulas remain
/// finite even though the kernels themselves are not defined.
pub(crate) fn spectrum_from_b2(k: usize, a: f64, b2: Complex64, n: usize) -> KernelSpectrum {
    let nf = n as f64;
    let root = (Complex64::new(a * a, 0.0) + 4.0 * b2).sqrt();
    let s = root / (4.0 * nf);
    let c = Complex64::new(a / (4.0 * nf), std::f64::consts::PI * k as f64 / nf);
    let e_m2s = (-2.0 * s).exp();
    let e_cms = (c - s).exp();
    let e_mcms = (-c - s).exp();
    let den = 1.0 + e_m2s + e_cms + e_mcms;
    let zeta1 = -expm1_over_z(-2.0 * s) / (2.0 * nf * den);
    let zeta2 = 0.5 * a * zeta1 + (1.0 + e_m2s + 2.0 * e_cms) / (2.0 * den);
    KernelSpectrum {
        zeta1,
        zeta2,
        denominator: den.norm(),
    }
}

pub fn exp_rates(a: f64, b: Complex64) -> Result<ExpRates> {
    check_b(b)?;
    let root = (Complex64::new(a * a, 0.0) + 4.0 * b * b).sqrt();
    Ok(ExpRates {
        beta_plus: 0.5 * (-a + root),
        beta_minus: 0.5 * (-a - root),
    })
}

/// `e^{beta x} / (1 - e^{beta})`, rearranged so no exponential overflows.
fn periodic_term(beta: Complex64, x: f64) -> Complex64 {
    if beta.re > 0.0 {
        (beta * (x - 1.0)).exp() / expm1(-beta)
    } else {
        -(beta * x).exp() / expm1(beta)
    }
}

fn check_unit(x: f64, open_left: bool) -> Result<()> {
    let ok = if open_left {
        x > 0.0 && x < 1.0
    } else {
        (0.0..1.0).contains(&x)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            value: x,
            domain: if open_left { "(0, 1)" } else { "[0, 1)" },
        })
    }
}

fn g1_raw(x: f64, rates: &ExpRates) -> Complex64 {
    let (bp, bm) = (rates.beta_plus, rates.beta_minus);
    (periodic_term(bp, x) - periodic_term(bm, x)) / (bp - bm)
}

fn g2_raw(x: f64, rates: &ExpRates) -> Complex64 {
    let (bp, bm) = (rates.beta_plus, rates.beta_minus);
    -(bm * periodic_term(bp, x) - bp * periodic_term(bm, x)) / (bp - bm)
}

/// `G_I(x; a, b)` for `x` in `[0, 1)`. Reduce arguments modulo 1 before calling.
pub fn g1(x: f64, a: f64, b: Complex64) -> Result<Complex64> {
    check_unit(x, false)?;
    Ok(g1_raw(x, &exp_rates(a, b)?))
}

/// `G_I'(x; a, b)` for `x` in `(0, 1)`.
pub fn g1_derivative(x: f64, a: f64, b: Complex64) -> Result<Complex64> {
    check_unit(x, true)?;
    let r = exp_rates(a, b)?;
    let (bp, bm) = (r.beta_plus, r.beta_minus);
    Ok((bp * periodic_term(bp, x) - bm * periodic_term(bm, x)) / (bp - bm))
}

/// `G_II(x; a, b)` for `x` strictly inside `(0, 1)`; the value jumps at 0.
pub fn g2(x: f64, a: f64, b: Complex64) -> Result<Complex64> {
    check_unit(x, true)?;
    Ok(g2_raw(x, &exp_rates(a, b)?))
}

/// One-sided limit of `G_II` at its jump.
pub fn g2_limit(side: Side, a: f64, b: Complex64) -> Result<Complex64> {
    let r = exp_rates(a, b)?;
    Ok(match side {
        Side::RightOfZero => g2_raw(0.0, &r),
        Side::LeftOfOne => g2_raw(1.0, &r),
    })
}

/// `G_II'(x; a, b)` for `x` in `(0, 1)`.
pub fn g2_derivative(x: f64, a: f64, b: Complex64) -> Result<Complex64> {
    check_unit(x, true)?;
    let r = exp_rates(a, b)?;
    let (bp, bm) = (r.beta_plus, r.beta_minus);
    Ok(-bp * bm * (periodic_term(bp, x) - periodic_term(bm, x)) / (bp - bm))
}

/// Eigenvalue of `G_I(a, b)` for the circulant eigenvector `g_k`.
pub fn zeta1(k: usize, a: f64, b: Complex64, n: usize) -> Result<Complex64> {
    KernelParams::new(a, b, n)?.zeta1(k)
}

/// Eigenvalue of `G_II(a, b)` for the circulant eigenvector `g_k`.
pub fn zeta2(k: usize, a: f64, b: Complex64, n: usize) -> Result<Complex64> {
    KernelParams::new(a, b, n)?.zeta2(k)
}

/// Circulant eigenvector `g_k = (e^{i pi k j / N})_{j=0}^{2N-1}`.
pub fn circulant_eigenvector(k: usize, n: usize) -> Vec<Complex64> {
    (0..2 * n)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * (k * j) as f64 / n as f64))
        .collect()
}

/// Dense `2N x 2N` matrices `G_I(a, b)` and `G_II(a, b)` sampled at the fronts.
///
/// Entry `(m, n)` is `(-1)^{m+n} G(x_m - x_n)` with the difference reduced to
/// `[0, 1)`. On the diagonal `G_II` takes the `x -> 0+` limit, which already
/// contains the unit jump. These matrices are an oracle for the closed-form
/// spectra, not something the analysis needs at run time.
pub fn dense_matrices(a: f64, b: Complex64, n: usize) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    KernelParams::new(a, b, n)?;
    let rates = exp_rates(a, b)?;
    let size = 2 * n;
    let mut m1 = DMatrix::zeros(size, size);
    let mut m2 = DMatrix::zeros(size, size);
    for row in 0..size {
        for col in 0..size {
            let steps = (row + size - col) % size;
            let d = steps as f64 / size as f64;
            let sign = if (row + col) % 2 == 0 { 1.0 } else { -1.0 };
            m1[(row, col)] = sign * g1_raw(d, &rates);
            m2[(row, col)] = sign * g2_raw(d, &rates);
        }
    }
    Ok((m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exp_rates_examples() {
        let r = exp_rates(0.0, c(1.0, 0.0)).unwrap();
        assert!((r.beta_plus - 1.0).norm() < 1e-15);
        assert!((r.beta_minus + 1.0).norm() < 1e-15);

        let r = exp_rates(1.0, c(2.0, 0.0)).unwrap();
        let s17 = 17f64.sqrt();
        assert!((r.beta_plus - (-1.0 + s17) / 2.0).norm() < 1e-14);
        assert!((r.beta_minus - (-1.0 - s17) / 2.0).norm() < 1e-14);

        assert!(exp_rates(2.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn exp_rates_satisfy_vieta() {
        let (a, b) = (0.7, c(1.3, -0.4));
        let r = exp_rates(a, b).unwrap();
        assert!((r.beta_plus + r.beta_minus + a).norm() < 1e-14);
        assert!((r.beta_plus * r.beta_minus + b * b).norm() < 1e-14);
    }

    fn second_difference_residual(g: impl Fn(f64) -> Complex64, x: f64, a: f64, b: Complex64) -> f64 {
        let h = 1e-4;
        let (gm, g0, gp) = (g(x - h), g(x), g(x + h));
        let d2 = (gp - 2.0 * g0 + gm) / (h * h);
        let d1 = (gp - gm) / (2.0 * h);
        (d2 + a * d1 - b * b * g0).norm()
    }

    #[test]
    fn g1_solves_the_ode() {
        let b = c(5.0, 0.0);
        for &x in &[0.1, 0.37, 0.5, 0.8] {
            let r = second_difference_residual(|t| g1(t, 0.0, b).unwrap(), x, 0.0, b);
            assert!(r < 1e-6, "x = {x}: residual {r}");
        }
    }

    #[test]
    fn g2_solves_the_ode_for_complex_decay() {
        let (a, b) = (2.0, c(1.0, 0.2));
        let r = second_difference_residual(|t| g2(t, a, b).unwrap(), 0.37, a, b);
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn g1_jump_conditions() {
        let (a, b) = (1.0, c(3.0, 0.0));
        let h = 1e-9;
        let dv = g1(h, a, b).unwrap() - g1(1.0 - h, a, b).unwrap();
        assert!(dv.norm() < 1e-7);
        let dd = g1_derivative(h, a, b).unwrap() - g1_derivative(1.0 - h, a, b).unwrap();
        assert!((dd - 1.0).norm() < 1e-7);
    }

    #[test]
    fn g2_jump_conditions() {
        let b = c(2.0, 0.0);
        let jump = g2_limit(Side::RightOfZero, 0.0, b).unwrap() - g2_limit(Side::LeftOfOne, 0.0, b).unwrap();
        assert!((jump - 1.0).norm() < 1e-13);
        let h = 1e-9;
        let dd = g2_derivative(h, 1.0, b).unwrap() - g2_derivative(1.0 - h, 1.0, b).unwrap();
        assert!(dd.norm() < 1e-7);
    }

    #[test]
    fn g1_symmetric_case_matches_cosh_form() {
        let b = c(2.5, 0.0);
        for &x in &[0.0, 0.2, 0.5, 0.9] {
            let expected = -(b * (x - 0.5)).cosh() / (2.0 * b * (b / 2.0).sinh());
            assert!((g1(x, 0.0, b).unwrap() - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn g2_rejects_the_jump_point() {
        assert!(matches!(g2(0.0, 0.0, c(1.0, 0.0)), Err(Error::Domain { .. })));
        assert!(g1(1.0, 0.0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn zeta1_symmetric_case_is_even_in_k() {
        let b = c(3.0, 0.5);
        for n in 1..=3 {
            for k in 1..2 * n {
                let lhs = zeta1(k, 0.0, b, n).unwrap();
                let rhs = zeta1(2 * n - k, 0.0, b, n).unwrap();
                assert!((lhs - rhs).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zeta1_hand_simplified_value() {
        let w = 2.0 * PI;
        let expected = -(w / 2.0).sinh() / (2.0 * w * ((w / 2.0).cosh() + 1.0));
        let got = zeta1(0, 0.0, c(w, 0.0), 1).unwrap();
        assert!((got - expected).norm() < 1e-15);
    }

    #[test]
    fn zeta2_at_zero_drift_is_the_second_term() {
        let (b, n) = (c(1.7, 0.3), 2);
        let root = 2.0 * b;
        for k in 0..2 * n {
            let ck = Complex64::new(0.0, PI * k as f64 / n as f64);
            let ch = (root / (4.0 * n as f64)).cosh();
            let term = 0.5 * (ch + ck.exp()) / (ch + ck.cosh());
            assert!((zeta2(k, 0.0, b, n).unwrap() - term).norm() < 1e-13);
        }
    }

    #[test]
    fn spectra_stay_finite_for_large_decay() {
        let s = KernelParams::new(30.0, c(4000.0, 3000.0), 2)
            .unwrap()
            .spectrum(1)
            .unwrap();
        assert!(s.zeta1.norm().is_finite() && s.zeta2.norm().is_finite());
        // zeta1 ~ -1/(2b) for large b
        assert!((s.zeta1 * 2.0 * c(4000.0, 3000.0) + 1.0).norm() < 1e-2);
    }

    #[test]
    fn params_reject_bad_inputs() {
        assert!(KernelParams::new(0.0, c(0.0, 0.0), 1).is_err());
        assert!(KernelParams::new(0.0, c(1.0, 1.5), 1).is_err());
        assert!(KernelParams::new(0.0, c(1.0, 0.0), 0).is_err());
        assert!(KernelParams::new(0.0, c(1.0, 0.0), 1).unwrap().zeta1(2).is_err());
        // sign of b does not matter
        assert!(KernelParams::new(0.0, c(-1.0, 0.0), 1).is_ok());
    }

    #[test]
    fn dense_matrices_are_circulant() {
        let (m1, m2) = dense_matrices(0.8, c(1.4, 0.3), 2).unwrap();
        let size = 4;
        for m in [&m1, &m2] {
            for r in 0..size - 1 {
                for col in 0..size {
                    let shifted = m[(r, (col + size - 1) % size)];
                    assert!((m[(r + 1, col)] - shifted).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn dense_g1_is_symmetric_without_drift() {
        let (m1, _) = dense_matrices(0.0, c(2.0, 0.4), 3).unwrap();
        assert!((&m1 - m1.transpose()).norm() < 1e-13);
    }
}
