//! Periodic wave-trains of the reduced free-boundary problem.
//!
//! A symmetric wave-train has `2N` flat fronts at `x_n = n / 2N`; the phase
//! `u = +1` occupies `[x_{2n}, x_{2n+1}]`. In the co-moving frame the chemical
//! potential `w0` is piecewise linear and the inhibitor `v0` piecewise
//! exponential, and the speed follows from the scalar equation
//! `xi + theta tanh(xi) = 0` with `xi = tau c0 / 4N`.
//!
//! Only the positive-speed branch is returned; the mirror solution is obtained
//! with `x -> -x`.

use std::f64::consts::SQRT_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{fmt_f64, Error, Result};

/// Nondimensional model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub tau: f64,
    pub theta: f64,
    pub rho: f64,
}

impl ModelParams {
    pub fn new(epsilon: f64, tau: f64, theta: f64, rho: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            tau,
            theta,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon", self.epsilon), ("tau", self.tau), ("rho", self.rho)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "theta must be finite, got {}",
                self.theta
            )));
        }
        Ok(())
    }
}

/// Dimensional parameters of the original cross-diffusion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalParams {
    pub kappa: f64,
    pub beta: f64,
    pub length: f64,
    pub height: f64,
    pub d12: f64,
    pub d21: f64,
    pub d22: f64,
}

impl DimensionalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("beta", self.beta),
            ("L", self.length),
            ("H", self.height),
            ("D22", self.d22),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.d12 * self.d21 / (self.d22 * self.d22)
    }

    pub fn to_model(&self) -> Result<ModelParams> {
        self.validate()?;
        ModelParams::new(
            (self.kappa / self.beta).sqrt() / self.length,
            (self.kappa * self.beta).sqrt() / (self.d22 * self.length),
            self.theta(),
            self.height / self.length,
        )
    }
}

/// Dimensional wave-train speeds: the sharp-interface value and the
/// small-amplitude estimate from linear analysis of the uniform state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalSpeeds {
    pub c_sharp: f64,
    /// `None` when `|D12 D21| < D22^2` and the estimate is not real.
    pub c_bm: Option<f64>,
}

/// Cubic-potential heteroclinic `Q(eta) = tanh(eta / sqrt 2)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Heteroclinic;

impl Heteroclinic {
    /// Surface tension `(1/2) int |Q'|^2 = sqrt(2) / 3`.
    pub const GAMMA: f64 = SQRT_2 / 3.0;

    pub fn q(&self, eta: f64) -> f64 {
        (eta / SQRT_2).tanh()
    }

    pub fn q_prime(&self, eta: f64) -> f64 {
        let s = 1.0 / (eta / SQRT_2).cosh();
        s * s / SQRT_2
    }

    pub fn gamma(&self) -> f64 {
        Self::GAMMA
    }
}

pub const GAMMA: f64 = Heteroclinic::GAMMA;

fn speed_residual(xi: f64, theta: f64) -> f64 {
    xi + theta * xi.tanh()
}

/// Nonnegative root of `xi + theta tanh(xi) = 0`.
///
/// Zero for `theta >= -1`. Otherwise bisection on `(0, -theta]` (`tanh < 1`
/// makes `-theta` an upper bound) followed by a Newton polish.
pub fn solve_xi(theta: f64) -> f64 {
    if theta >= -1.0 || !theta.is_finite() {
        return 0.0;
    }
    // residual is negative on (0, xi*) and positive beyond
    let (mut lo, mut hi) = (0.0_f64, -theta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if speed_residual(mid, theta) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut xi = 0.5 * (lo + hi);
    for _ in 0..4 {
        let sech2 = 1.0 / xi.cosh().powi(2);
        let step = speed_residual(xi, theta) / (1.0 + theta * sech2);
        let next = xi - step;
        if !(next > lo && next < hi) || step.abs() < 1e-300 {
            break;
        }
        xi = next;
    }
    xi
}

/// Wave-train speed `c0 = 4 N xi(theta) / tau`.
pub fn speed(theta: f64, tau: f64, n: usize) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("front-pair count N must be positive".into()));
    }
    Ok(4.0 * n as f64 * solve_xi(theta) / tau)
}

pub fn dimensional_speeds(dp: &DimensionalParams) -> Result<DimensionalSpeeds> {
    dp.validate()?;
    let theta = dp.theta();
    let c_sharp = 4.0 * dp.d22 / dp.length * solve_xi(theta);
    let prod = (dp.d12 * dp.d21).abs();
    let radicand = 1.0 - dp.d22 * dp.d22 / prod;
    let c_bm = if prod > 0.0 && radicand >= 0.0 {
        Some(2.0 * std::f64::consts::PI * prod.sqrt() / dp.length * radicand.sqrt())
    } else {
        None
    };
    Ok(DimensionalSpeeds { c_sharp, c_bm })
}

/// A symmetric periodic wave-train in its co-moving frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrainProfile {
    pub n: usize,
    /// `x_n = n / 2N` for `n = 1..=2N`.
    pub fronts: Vec<f64>,
    pub c0: f64,
    pub xi: f64,
    pub theta: f64,
    pub tau: f64,
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Reduce to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn build_profile(params: &ModelParams, n: usize) -> Result<WaveTrainProfile> {
    params.validate()?;
    let c0 = speed(params.theta, params.tau, n)?;
    let xi = solve_xi(params.theta);
    let fronts = (1..=2 * n).map(|j| j as f64 / (2 * n) as f64).collect();
    Ok(WaveTrainProfile {
        n,
        fronts,
        c0,
        xi,
        theta: params.theta,
        tau: params.tau,
    })
}

/// The stationary train `c0 = 0, v0 = w0 = 0`, which solves the
/// sharp-interface system for every `theta`.
pub fn stationary_profile(params: &ModelParams, n: usize) -> Result<WaveTrainProfile> {
    let mut p = build_profile(params, n)?;
    p.c0 = 0.0;
    p.xi = 0.0;
    Ok(p)
}

impl WaveTrainProfile {
    fn spacing(&self) -> f64 {
        1.0 / (2 * self.n) as f64
    }

    /// 1-based index `j` of the interval `[x_{j-1}, x_j)` containing `x`.
    fn interval(&self, x: f64) -> (usize, f64) {
        let x = wrap_unit(x);
        let j = ((x * (2 * self.n) as f64).floor() as usize).min(2 * self.n - 1) + 1;
        (j, x)
    }

    fn right_end(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// `e^{-tau c0 (x - x_j)} / (1 + e^{tau c0 / 2N})`, written with
    /// non-positive exponents.
    fn v_exponential(&self, x: f64, j: usize) -> f64 {
        let a = self.tau * self.c0;
        let two_xi = a * self.spacing();
        (-a * (x - self.right_end(j)) - two_xi).exp() / (1.0 + (-two_xi).exp())
    }

    pub fn v0(&self, x: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        let (j, x) = self.interval(x);
        (2.0 / self.tau) * sign(j + 1) * (0.5 - self.v_exponential(x, j))
    }

    pub fn v0_derivative(&self, x: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        let (j, x) = self.interval(x);
        2.0 * sign(j + 1) * self.c0 * self.v_exponential(x, j)
    }

    pub fn v0_second_derivative(&self, x: f64) -> f64 {
        -self.tau * self.c0 * self.v0_derivative(x)
    }

    /// `v0(x_n) = ((-1)^n / tau) (1 - E) / (1 + E)` with `E = e^{tau c0 / 2N}`.
    pub fn v0_at_front(&self, n: usize) -> f64 {
        -sign(n) / self.tau * self.xi.tanh()
    }

    /// Slope of `w0` on `(x_{n-1}, x_n)`.
    pub fn w0_slope(&self, n: usize) -> f64 {
        -sign(n) * 4.0 * self.n as f64 * self.theta / self.tau * self.xi.tanh()
    }

    pub fn w0(&self, x: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        let (j, x) = self.interval(x);
        let left = (j - 1) as f64 * self.spacing();
        self.theta * self.v0_at_front(j - 1) + self.w0_slope(j) * (x - left)
    }

    pub fn w0_derivative(&self, x: f64) -> f64 {
        if self.c0 == 0.0 {
            return 0.0;
        }
        let (j, _) = self.interval(x);
        self.w0_slope(j)
    }

    /// Whether the phase `u = +1` occupies the point.
    pub fn inside(&self, x: f64) -> bool {
        let (j, _) = self.interval(x);
        j % 2 == 1
    }
}

/// Periodic signed distance to a set of fronts on the unit circle.
///
/// `fronts` must be sorted with `fronts[2n]..fronts[2n+1]` bounding the
/// interior of the phase `u = +1`, where `fronts[0]` plays the role of
/// `x_0 = x_{2N}`. Distance is positive inside.
pub fn signed_distance(x: f64, fronts: &[f64]) -> f64 {
    let m = fronts.len();
    debug_assert!(m >= 2 && m.is_multiple_of(2));
    let mut best = f64::INFINITY;
    let mut nearest = 0;
    for (i, &f) in fronts.iter().enumerate() {
        let d = (x - f + 0.5).rem_euclid(1.0) - 0.5;
        if d.abs() < best {
            best = d.abs();
            nearest = i;
        }
    }
    // the nearest front with the side of x decides membership
    let d = (x - fronts[nearest] + 0.5).rem_euclid(1.0) - 0.5;
    // front index i (0-based) is x_{i} in the convention above; the interior
    // lies to the right of even-indexed fronts
    let right_is_inside = nearest % 2 == 0;
    let inside = (d >= 0.0) == right_is_inside;
    if inside {
        best
    } else {
        -best
    }
}

/// Diffuse composite fields built from a sharp-interface profile.
#[derive(Debug, Clone)]
pub struct CompositeFields {
    pub profile: WaveTrainProfile,
    pub epsilon: f64,
    pub tau: f64,
    /// Set when the tanh tails of neighbouring interfaces overlap.
    pub overlap_warning: bool,
    interior_fronts: Vec<f64>,
}

/// Tail level below which neighbouring interfaces are treated as separated.
const OVERLAP_TOL: f64 = 1e-8;

pub fn composite_fields(profile: &WaveTrainProfile, params: &ModelParams) -> Result<CompositeFields> {
    params.validate()?;
    let half_gap = 1.0 / (4 * profile.n) as f64;
    let overlap_warning = params.epsilon * OVERLAP_TOL.ln().abs() > half_gap;
    if overlap_warning {
        log::warn!(
            "interfaces overlap: epsilon = {} is wide compared with the front spacing {}",
            params.epsilon,
            2.0 * half_gap
        );
    }
    let mut interior_fronts = vec![0.0];
    interior_fronts.extend_from_slice(&profile.fronts[..profile.fronts.len() - 1]);
    Ok(CompositeFields {
        profile: profile.clone(),
        epsilon: params.epsilon,
        tau: params.tau,
        overlap_warning,
        interior_fronts,
    })
}

impl CompositeFields {
    /// Front positions `x_0, ..., x_{2N-1}` in the order expected by
    /// [`signed_distance`].
    pub fn front_set(&self) -> &[f64] {
        &self.interior_fronts
    }

    pub fn distance(&self, x: f64) -> f64 {
        signed_distance(x, &self.interior_fronts)
    }

    pub fn u(&self, x: f64) -> f64 {
        Heteroclinic.q(self.distance(x) / self.epsilon)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.profile.v0(x) - self.u(x) / self.tau
    }
}

/// Write `x, v0, w0, u_eps, v_eps` on a uniform grid of `samples` points in
/// `[0, 1)`, preceded by `# key=value` header comments.
pub fn write_profile_csv<W: Write>(
    out: &mut W,
    fields: &CompositeFields,
    params: &ModelParams,
    samples: usize,
) -> Result<()> {
    let p = &fields.profile;
    writeln!(out, "# theta={}", fmt_f64(params.theta))?;
    writeln!(out, "# tau={}", fmt_f64(params.tau))?;
    writeln!(out, "# N={}", p.n)?;
    writeln!(out, "# epsilon={}", fmt_f64(params.epsilon))?;
    writeln!(out, "# c0={}", fmt_f64(p.c0))?;
    writeln!(out, "# xi={}", fmt_f64(p.xi))?;
    writeln!(out, "x,v0,w0,u_eps,v_eps")?;
    for i in 0..samples {
        let x = i as f64 / samples as f64;
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(p.v0(x)),
            fmt_f64(p.w0(x)),
            fmt_f64(fields.u(x)),
            fmt_f64(fields.v(x))
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect_xi(theta: f64) -> f64 {
        let (mut lo, mut hi) = (1e-12, -theta);
        while hi - lo > 1e-15 {
            let m = 0.5 * (lo + hi);
            if m + theta * m.tanh() < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn xi_examples() {
        assert_eq!(solve_xi(-1.0), 0.0);
        assert_eq!(solve_xi(-0.5), 0.0);
        let xi = solve_xi(-2.25);
        assert!((xi - bisect_xi(-2.25)).abs() < 1e-12);
        assert!((xi - 2.195).abs() < 5e-4);
        assert!(speed_residual(xi, -2.25).abs() < 1e-13);
    }

    #[test]
    fn stationary_branch_exists_below_onset() {
        let p = stationary_profile(&ModelParams::new(0.01, 1.0, -3.0, 1.0).unwrap(), 2).unwrap();
        assert_eq!((p.c0, p.xi), (0.0, 0.0));
        for x in [0.1, 0.3, 0.8] {
            assert_eq!((p.v0(x), p.w0(x)), (0.0, 0.0));
        }
        assert_eq!(p.fronts.len(), 4);
    }

    #[test]
    fn xi_just_below_threshold() {
        let xi = solve_xi(-1.0 - 1e-8);
        assert!(xi > 0.0);
        assert!(speed_residual(xi, -1.0 - 1e-8).abs() < 1e-13);
        // xi^2 ~ 3 (-1 - theta) near the threshold
        assert!((xi * xi / 3e-8 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn speed_examples() {
        assert_eq!(speed(-0.9, 1.0, 1).unwrap(), 0.0);
        let xi = bisect_xi(-2.25);
        assert!((speed(-2.25, 2.0, 1).unwrap() - 2.0 * xi).abs() < 1e-12);
        assert!((speed(-2.25, 2.0, 1).unwrap() - 4.39).abs() < 1e-2);
        assert!((speed(-2.25, 1.0, 2).unwrap() - 8.0 * solve_xi(-2.25)).abs() < 1e-14);
        assert!(speed(-2.0, 0.0, 1).is_err());
        assert!(speed(-2.0, 1.0, 0).is_err());
    }

    #[test]
    fn dimensional_examples() {
        let dp = DimensionalParams {
            kappa: 1.0,
            beta: 1.0,
            length: 3.0,
            height: 3.0,
            d12: -1.0,
            d21: 1.0,
            d22: 1.0,
        };
        let s = dimensional_speeds(&dp).unwrap();
        assert_eq!(s.c_sharp, 0.0);
        assert_eq!(s.c_bm, Some(0.0));

        let dp = DimensionalParams {
            kappa: 1.0,
            beta: 1.0,
            length: 2.0,
            height: 2.0,
            d12: -2.0,
            d21: 2.0,
            d22: 1.0,
        };
        let s = dimensional_speeds(&dp).unwrap();
        assert!((s.c_sharp - 2.0 * bisect_xi(-4.0)).abs() < 1e-12);

        let dp = DimensionalParams {
            kappa: 1.0,
            beta: 1.0,
            length: 1.0,
            height: 1.0,
            d12: -0.5,
            d21: 0.5,
            d22: 1.0,
        };
        assert_eq!(dimensional_speeds(&dp).unwrap().c_bm, None);
    }

    #[test]
    fn dimensional_to_model() {
        let dp = DimensionalParams {
            kappa: 4.0,
            beta: 1.0,
            length: 10.0,
            height: 5.0,
            d12: -3.0,
            d21: 2.0,
            d22: 2.0,
        };
        let m = dp.to_model().unwrap();
        assert!((m.epsilon - 0.2).abs() < 1e-15);
        assert!((m.tau - 2.0 / 20.0).abs() < 1e-15);
        assert!((m.theta + 1.5).abs() < 1e-15);
        assert!((m.rho - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_profile_is_zero() {
        let p = build_profile(&ModelParams::new(0.01, 1.0, -0.5, 1.0).unwrap(), 2).unwrap();
        for i in 0..50 {
            let x = i as f64 / 50.0;
            assert_eq!(p.v0(x), 0.0);
            assert_eq!(p.w0(x), 0.0);
        }
    }

    #[test]
    fn v0_front_values_match_closed_form() {
        let params = ModelParams::new(0.01, 1.0, -2.0, 1.0).unwrap();
        let p = build_profile(&params, 1).unwrap();
        let e = (params.tau * p.c0 / 2.0).exp();
        for n in 1..=2 {
            let expected = sign(n) / params.tau * (1.0 - e) / (1.0 + e);
            let x = p.fronts[n - 1];
            // left limit and the value at the front agree by continuity
            assert!((p.v0(x - 1e-14) - expected).abs() < 1e-10);
            assert!((p.v0(x) - expected).abs() < 1e-10);
            assert!((p.v0_at_front(n) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn v0_has_zero_mean() {
        let params = ModelParams::new(0.01, 0.5, -3.0, 1.0).unwrap();
        let p = build_profile(&params, 2).unwrap();
        // composite Simpson per smooth piece
        let m = 2000;
        let mut total = 0.0;
        for j in 0..4 {
            let (a, b) = (j as f64 / 4.0, (j + 1) as f64 / 4.0);
            let h = (b - a) / m as f64;
            let f = |x: f64| p.v0(x.min(b - 1e-15));
            let mut s = f(a) + f(b);
            for i in 1..m {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
            }
            total += s * h / 3.0;
        }
        assert!(total.abs() < 1e-10, "mean {total}");
    }

    #[test]
    fn heteroclinic_basics() {
        let q = Heteroclinic;
        assert_eq!(q.q(0.0), 0.0);
        assert!((q.q(3.0) + q.q(-3.0)).abs() < 1e-16);
        assert!((q.q(60.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn signed_distance_conventions() {
        let fronts = [0.0, 0.5];
        assert!((signed_distance(0.25, &fronts) - 0.25).abs() < 1e-15);
        assert!((signed_distance(0.75, &fronts) + 0.25).abs() < 1e-15);
        assert!((signed_distance(0.95, &fronts) + 0.05).abs() < 1e-15);
        assert!((signed_distance(0.05, &fronts) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn composite_vanishes_on_fronts_and_saturates_away() {
        let params = ModelParams::new(0.01, 1.0, -2.0, 1.0).unwrap();
        let p = build_profile(&params, 2).unwrap();
        let f = composite_fields(&p, &params).unwrap();
        for &x in &p.fronts {
            assert!(f.u(wrap_unit(x)).abs() < 1e-12);
        }
        let x = 0.125;
        let d = f.distance(x).abs();
        assert!((f.u(x) - 1.0).abs() < 2.0 * (-SQRT_2 * d / params.epsilon).exp());
        assert!((f.u(0.375) + 1.0).abs() < 2.0 * (-SQRT_2 * d / params.epsilon).exp());
    }

    #[test]
    fn overlap_warning_triggers_for_wide_interfaces() {
        let params = ModelParams::new(0.05, 1.0, -2.0, 1.0).unwrap();
        let p = build_profile(&params, 2).unwrap();
        assert!(composite_fields(&p, &params).unwrap().overlap_warning);
        let params = ModelParams::new(0.005, 1.0, -2.0, 1.0).unwrap();
        let p = build_profile(&params, 1).unwrap();
        assert!(!composite_fields(&p, &params).unwrap().overlap_warning);
    }

    #[test]
    fn csv_header_and_rows() {
        let params = ModelParams::new(0.02, 1.0, -0.5, 1.0).unwrap();
        let p = build_profile(&params, 1).unwrap();
        let f = composite_fields(&p, &params).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &f, &params, 8).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# c0=0.0000000000000000e0"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 9);
    }
}
