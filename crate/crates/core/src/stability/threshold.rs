//! Hopf thresholds `theta*(omega, k)`.
//!
//! A threshold is a pair `(theta*, lambda*)` with `F(i lambda*) = 0` at
//! `theta = theta*`. A coarse sweep in `theta` locates the first value at
//! which the unstable-zero count jumps, bisection on the count narrows the
//! bracket, and damped Newton on `(Re F, Im F)` polishes the pair.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::contour::ContourOptions;
use super::{Dispersion, Mode, Regime};
use crate::{fmt_f64, par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOptions {
    /// Upper end of the sweep; the mode is expected to be stable here.
    pub theta_max: f64,
    pub theta_min: f64,
    /// Number of sweep points, spaced geometrically in `-theta`.
    pub sweep_points: usize,
    /// Bisection steps on the zero count after a bracket is found.
    pub bisect_steps: usize,
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Offset used to confirm that a converged pair really is a crossing.
    pub confirm_offset: f64,
    pub contour: ContourOptions,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            theta_max: -1.0001,
            theta_min: -60.0,
            sweep_points: 48,
            bisect_steps: 20,
            residual_tol: 1e-10,
            max_iter: 60,
            confirm_offset: 0.01,
            contour: ContourOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub theta_star: f64,
    pub lambda_star: f64,
    pub residual: f64,
    pub mode: Mode,
    pub iterations: usize,
}

struct Problem<'a> {
    mode: Mode,
    tau: f64,
    n: usize,
    regime: Regime,
    opts: &'a ThresholdOptions,
}

impl Problem<'_> {
    fn dispersion(&self, theta: f64) -> Result<Dispersion> {
        Dispersion::new(self.regime, self.mode, self.tau, theta, self.n)
    }

    fn count(&self, theta: f64) -> Result<u32> {
        let opts = ContourOptions {
            half: true,
            ..self.opts.contour.clone()
        };
        Ok(self.dispersion(theta)?.count_unstable(&opts)?.z)
    }

    fn residual(&self, theta: f64, y: f64) -> Result<Complex64> {
        self.dispersion(theta)?.eval(Complex64::new(0.0, y))
    }

    /// `lambda_I > 0` where `|F(i lambda_I)|` is smallest along the trace.
    fn seed_lambda(&self, theta: f64) -> Result<f64> {
        let opts = ContourOptions {
            half: true,
            ..self.opts.contour.clone()
        };
        let trace = self.dispersion(theta)?.count_unstable(&opts)?;
        trace
            .samples
            .iter()
            .filter(|s| s.lambda.re == 0.0 && s.lambda.im > 0.0)
            .min_by(|a, b| a.f.norm().total_cmp(&b.f.norm()))
            .map(|s| s.lambda.im)
            .ok_or(Error::NoCrossing { lo: theta, hi: theta })
    }

    fn newton(&self, theta0: f64, y0: f64) -> Result<ThresholdResult> {
        let tol = self.opts.residual_tol;
        let (mut th, mut y) = (theta0, y0);
        let mut f = self.residual(th, y)?;
        let mut iterations = 0;
        while iterations < self.opts.max_iter && f.norm() >= 0.01 * tol {
            iterations += 1;
            let ht = 1e-6 * (1.0 + th.abs());
            let hy = 1e-6 * (1.0 + y.abs());
            let dth = (self.residual(th + ht, y)? - self.residual(th - ht, y)?) / (2.0 * ht);
            let dy = (self.residual(th, y + hy)? - self.residual(th, y - hy)?) / (2.0 * hy);
            let det = dth.re * dy.im - dy.re * dth.im;
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let step_th = -(dy.im * f.re - dy.re * f.im) / det;
            let step_y = -(-dth.im * f.re + dth.re * f.im) / det;
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..=30 {
                let (nt, ny) = (th + scale * step_th, y + scale * step_y);
                if let Ok(nf) = self.residual(nt, ny) {
                    if nf.norm() < f.norm() {
                        th = nt;
                        y = ny;
                        f = nf;
                        accepted = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let residual = f.norm();
        if !(residual < tol) || y.abs() < 1e-8 {
            return Err(Error::NoConvergence {
                theta: th,
                lambda: y,
                residual,
            });
        }
        Ok(ThresholdResult {
            theta_star: th,
            lambda_star: y.abs(),
            residual,
            mode: self.mode,
            iterations,
        })
    }

    /// Accept a candidate only if the count rises by at least two across it
    /// and the mode is stable just above.
    fn confirm(&self, r: &ThresholdResult) -> bool {
        let d = self.opts.confirm_offset;
        let above = (r.theta_star + d).min(self.opts.theta_max);
        matches!(
            (self.count(above), self.count(r.theta_star - d)),
            (Ok(0), Ok(z)) if z >= 2
        )
    }

    fn sweep(&self) -> Result<ThresholdResult> {
        let opts = self.opts;
        let (a, b) = ((-opts.theta_max).ln(), (-opts.theta_min).ln());
        let m = opts.sweep_points.max(2);
        let base = self.count(opts.theta_max)?;
        let mut hi = opts.theta_max;
        let mut bracket = None;
        for i in 1..m {
            let theta = -(a + (b - a) * i as f64 / (m - 1) as f64).exp();
            match self.count(theta) {
                Ok(z) if z > base => {
                    bracket = Some((theta, hi));
                    break;
                }
                Ok(_) => hi = theta,
                Err(e) => log::debug!("sweep point theta = {theta} skipped: {e}"),
            }
        }
        let (mut lo, mut hi) = bracket.ok_or(Error::NoCrossing {
            lo: opts.theta_min,
            hi: opts.theta_max,
        })?;
        for _ in 0..opts.bisect_steps {
            let mid = 0.5 * (lo + hi);
            match self.count(mid) {
                Ok(z) if z > base => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => break,
            }
        }
        let y0 = self.seed_lambda(lo)?;
        self.newton(0.5 * (lo + hi), y0)
    }
}

fn check_mode(mode: &Mode) -> Result<()> {
    if !(mode.omega > 0.0) {
        return Err(Error::InvalidParameter(
            "Hopf thresholds are defined for transverse modes with omega > 0".into(),
        ));
    }
    Ok(())
}

/// Locate the first Hopf threshold below `opts.theta_max`.
pub fn find_threshold(
    mode: Mode,
    tau: f64,
    n: usize,
    regime: Regime,
    opts: &ThresholdOptions,
) -> Result<ThresholdResult> {
    check_mode(&mode)?;
    Problem {
        mode,
        tau,
        n,
        regime,
        opts,
    }
    .sweep()
}

/// Newton from a nearby solution, falling back to a full sweep when the
/// result does not pass the crossing check.
pub fn continue_threshold(
    mode: Mode,
    tau: f64,
    n: usize,
    regime: Regime,
    seed: (f64, f64),
    opts: &ThresholdOptions,
) -> Result<ThresholdResult> {
    check_mode(&mode)?;
    let p = Problem {
        mode,
        tau,
        n,
        regime,
        opts,
    };
    if let Ok(r) = p.newton(seed.0, seed.1) {
        if p.confirm(&r) {
            return Ok(r);
        }
    }
    p.sweep()
}

/// One row of a threshold table; failed cells keep `NaN` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub tau: f64,
    pub omega: f64,
    pub k: usize,
    pub n: usize,
    pub theta_star: f64,
    pub lambda_star: f64,
    pub residual: f64,
    pub converged: bool,
}

impl ScanRow {
    fn failed(tau: f64, omega: f64, k: usize, n: usize) -> Self {
        Self {
            tau,
            omega,
            k,
            n,
            theta_star: f64::NAN,
            lambda_star: f64::NAN,
            residual: f64::NAN,
            converged: false,
        }
    }
}

/// Thresholds over a `(tau, omega, k)` grid.
///
/// Each `(tau, k)` chain walks the sorted `omega` grid and seeds every solve
/// with its neighbour's solution. Chains run in parallel; the returned rows
/// are sorted by `(tau, omega, k)` regardless of scheduling.
pub fn threshold_scan(
    tau_grid: &[f64],
    omega_grid: &[f64],
    k_set: &[usize],
    n: usize,
    regime: Regime,
    opts: &ThresholdOptions,
) -> Result<Vec<ScanRow>> {
    if tau_grid.is_empty() || omega_grid.is_empty() || k_set.is_empty() {
        return Err(Error::InvalidParameter("threshold scan grids must be nonempty".into()));
    }
    let mut omegas = omega_grid.to_vec();
    omegas.sort_by(f64::total_cmp);
    for &k in k_set {
        for &w in &omegas {
            Mode::from_omega(w, k, n)?;
        }
    }
    let chains: Vec<(f64, usize)> = tau_grid
        .iter()
        .flat_map(|&t| k_set.iter().map(move |&k| (t, k)))
        .collect();
    let results = par::map_collect(&chains, |&(tau, k)| {
        let mut seed: Option<(f64, f64)> = None;
        let mut rows = Vec::with_capacity(omegas.len());
        for &omega in &omegas {
            let mode = Mode::from_omega(omega, k, n).expect("validated above");
            let res = match seed {
                Some(s) => continue_threshold(mode, tau, n, regime, s, opts),
                None => find_threshold(mode, tau, n, regime, opts),
            };
            match res {
                Ok(r) => {
                    seed = Some((r.theta_star, r.lambda_star));
                    rows.push(ScanRow {
                        tau,
                        omega,
                        k,
                        n,
                        theta_star: r.theta_star,
                        lambda_star: r.lambda_star,
                        residual: r.residual,
                        converged: true,
                    });
                }
                Err(e) => {
                    log::info!("no threshold at tau = {tau}, omega = {omega}, k = {k}: {e}");
                    seed = None;
                    rows.push(ScanRow::failed(tau, omega, k, n));
                }
            }
        }
        rows
    });
    let mut rows: Vec<ScanRow> = results.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then(a.omega.total_cmp(&b.omega))
            .then(a.k.cmp(&b.k))
    });
    Ok(rows)
}

pub fn write_scan_csv<W: Write>(out: &mut W, rows: &[ScanRow]) -> Result<()> {
    writeln!(out, "tau,omega,k,N,theta_star,lambda_star,residual,converged")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f64(r.tau),
            fmt_f64(r.omega),
            r.k,
            r.n,
            fmt_f64(r.theta_star),
            fmt_f64(r.lambda_star),
            fmt_f64(r.residual),
            r.converged
        )?;
    }
    Ok(())
}
