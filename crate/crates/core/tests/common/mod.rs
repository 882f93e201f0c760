// Independent oracles shared by the integration tests. Nothing here calls the
// closed forms it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2, Vector2};
use nrch_core::pde::{FieldState, SimConfig};
use nrch_core::wavetrain::ModelParams;
use nrch_core::wavetrain::WaveTrainProfile;
use nrch_core::Complex64;
use std::f64::consts::PI;

pub const GAMMA: f64 = std::f64::consts::SQRT_2 / 3.0;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Root of `xi + theta tanh xi` on `[0, -theta]` by plain bisection.
pub fn xi_bisect(theta: f64) -> f64 {
    if theta >= -1.0 {
        return 0.0;
    }
    let g = |x: f64| x + theta * x.tanh();
    // g < 0 just right of 0, g(-theta) > 0
    let (mut lo, mut hi) = (1e-300_f64.max(0.0), -theta);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// Continuous value, unit jump in derivative at 0.
    First,
    /// Unit jump in value, continuous derivative at 0.
    Second,
}

/// Periodic Green's function of `G'' + a G' - b^2 G = 0` on `(0, 1)`, built
/// by solving the 2x2 jump system for `A e^{r+ x} + B e^{r- x}`.
pub fn green(kind: Kernel, x: f64, a: f64, b: Complex64) -> Complex64 {
    let disc = (c(a * a, 0.0) + 4.0 * b * b).sqrt();
    let rp = 0.5 * (-a + disc);
    let rm = 0.5 * (-a - disc);
    let (ep, em) = (rp.exp(), rm.exp());
    // unknowns (A, B); rows: value jump G(0+) - G(1-), slope jump G'(0+) - G'(1-)
    let m = [[1.0 - ep, 1.0 - em], [rp * (1.0 - ep), rm * (1.0 - em)]];
    let rhs = match kind {
        Kernel::First => [c(0.0, 0.0), c(1.0, 0.0)],
        Kernel::Second => [c(1.0, 0.0), c(0.0, 0.0)],
    };
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let aa = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let bb = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    aa * (rp * x).exp() + bb * (rm * x).exp()
}

/// Dense circulant matrix `(-1)^{m+n} G(x_m - x_n)` with the difference
/// reduced to `[0, 1)`; the diagonal uses the limit from the right.
pub fn dense(kind: Kernel, a: f64, b: Complex64, n: usize) -> DMatrix<Complex64> {
    let size = 2 * n;
    DMatrix::from_fn(size, size, |row, col| {
        let d = ((row + size - col) % size) as f64 / size as f64;
        let sign = if (row + col) % 2 == 0 { 1.0 } else { -1.0 };
        sign * green(kind, d, a, b)
    })
}

pub fn eigvec(k: usize, n: usize) -> Vec<Complex64> {
    (0..2 * n)
        .map(|j| Complex64::from_polar(1.0, std::f64::consts::PI * (k * j) as f64 / n as f64))
        .collect()
}

/// Rayleigh quotient of the dense matrix on `g_k` plus the residual norm of
/// the eigen-relation.
pub fn dense_eigenvalue(m: &DMatrix<Complex64>, k: usize, n: usize) -> (Complex64, f64) {
    let g = eigvec(k, n);
    let mg: Vec<Complex64> = (0..2 * n).map(|r| (0..2 * n).map(|s| m[(r, s)] * g[s]).sum()).collect();
    let num: Complex64 = g.iter().zip(&mg).map(|(x, y)| x.conj() * y).sum();
    let lam = num / (2 * n) as f64;
    let res = g
        .iter()
        .zip(&mg)
        .map(|(x, y)| (y - lam * x).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (lam, res)
}

/// Eigenvalues of a complex matrix from its Schur form.
pub fn schur_eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    m.clone()
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular")
        .iter()
        .copied()
        .collect()
}

/// Stationary dispersion function rebuilt from the dense-matrix spectra.
pub fn dense_f_stationary(lambda: Complex64, omega: f64, k: usize, theta: f64, tau: f64, n: usize) -> Complex64 {
    let mu = (omega * omega + tau * lambda).sqrt();
    let z_w = dense_eigenvalue(&dense(Kernel::First, 0.0, c(omega, 0.0), n), k, n).0;
    let z_mu = dense_eigenvalue(&dense(Kernel::First, 0.0, mu, n), k, n).0;
    0.5 * GAMMA * omega * omega - lambda * z_w - lambda * theta * z_mu
}

/// Traveling dispersion function rebuilt from the dense-matrix spectra.
pub fn dense_f_traveling(lambda: Complex64, omega: f64, k: usize, theta: f64, tau: f64, n: usize) -> Complex64 {
    let xi = xi_bisect(theta);
    let c0 = 4.0 * n as f64 * xi / tau;
    let mu = (omega * omega + tau * lambda).sqrt();
    let a = tau * c0;
    let ev = |kind, a, b| dense_eigenvalue(&dense(kind, a, b, n), k, n).0;
    let e = (tau * c0 / (2.0 * n as f64)).exp();
    -lambda * ev(Kernel::First, 0.0, c(omega, 0.0)) - theta * (lambda + tau * c0 * c0) * ev(Kernel::First, a, mu)
        + c0 * ev(Kernel::Second, 0.0, c(omega, 0.0))
        + theta * c0 * ev(Kernel::Second, a, mu)
        + 0.5 * GAMMA * omega * omega
        - 0.5 * c0 * (1.0 + (1.0 + 2.0 * theta) * e) / (1.0 + e)
}

/// Zeros of `f` with `Re > re_min` found by Newton iteration from a
/// `grid x grid` lattice of seeds over `(0, re_max] x [-im_max, im_max]`,
/// deduplicated at `dedup`.
pub fn newton_roots(
    f: &dyn Fn(Complex64) -> Option<Complex64>,
    grid: usize,
    re_max: f64,
    im_max: f64,
    re_min: f64,
    dedup: f64,
) -> Vec<Complex64> {
    let mut seeds = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let re = re_max * (i as f64 + 1.0) / grid as f64;
            let im = -im_max + 2.0 * im_max * (j as f64 + 0.5) / grid as f64;
            seeds.push(c(re, im));
        }
    }
    polish(f, &seeds, re_min, dedup)
}

/// As [`newton_roots`], with a second log-polar lattice of seeds reaching
/// `|lambda| = r_max` so that large roots are not missed.
pub fn newton_roots_wide(
    f: &dyn Fn(Complex64) -> Option<Complex64>,
    grid: usize,
    box_size: f64,
    r_max: f64,
    re_min: f64,
    dedup: f64,
) -> Vec<Complex64> {
    let mut roots = newton_roots(f, grid, box_size, box_size, re_min, dedup);
    let mut seeds = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        let r = box_size * (r_max / box_size).powf((i as f64 + 1.0) / grid as f64);
        for j in 0..grid {
            let phi = -0.5 * std::f64::consts::PI + std::f64::consts::PI * (j as f64 + 0.5) / grid as f64;
            seeds.push(Complex64::from_polar(r, phi));
        }
    }
    for z in polish(f, &seeds, re_min, dedup) {
        if !roots.iter().any(|r| (r - z).norm() < dedup * (1.0 + z.norm())) {
            roots.push(z);
        }
    }
    roots
}

fn polish(f: &dyn Fn(Complex64) -> Option<Complex64>, seeds: &[Complex64], re_min: f64, dedup: f64) -> Vec<Complex64> {
    let mut roots: Vec<Complex64> = Vec::new();
    for &s in seeds {
        let Some(z) = newton(f, s) else { continue };
        if z.re > re_min && !roots.iter().any(|r| (r - z).norm() < dedup * (1.0 + z.norm())) {
            roots.push(z);
        }
    }
    roots
}

fn newton(f: &dyn Fn(Complex64) -> Option<Complex64>, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..80 {
        let fz = f(z)?;
        let h = 1e-6 * (1.0 + z.norm());
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 {
            return None;
        }
        let mut step = fz / d;
        // keep the iterate in the right half-plane where f is pole-free
        while (z - step).re <= 0.0 && step.norm() > 1e-14 {
            step *= 0.5;
        }
        z -= step;
        if !z.re.is_finite() || z.norm() > 1e6 {
            return None;
        }
        if step.norm() < 1e-13 * (1.0 + z.norm()) {
            let fz = f(z)?;
            return (fz.norm() < 1e-8 * (1.0 + z.norm())).then_some(z);
        }
    }
    None
}

/// `exp(A t)` for a real 2x2 matrix.
pub fn expm2(a: [[f64; 2]; 2], t: f64) -> Matrix2<f64> {
    (Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1]) * t).exp()
}

/// One-sided limits at `x_n`, `n = 1..=2N`; `x_{2N} = 1` is approached from
/// the right through `0`. A single ulp is not enough: `x * 2N` can round onto
/// the next interval.
pub fn limits(x: f64, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let h = 1e-14;
    let left = f(x - h);
    let right = if x >= 1.0 { f(h) } else { f(x + h) };
    (left, right)
}

pub struct Field<'a> {
    pub v: &'a dyn Fn(f64) -> f64,
    pub dv: &'a dyn Fn(f64) -> f64,
    pub w: &'a dyn Fn(f64) -> f64,
    pub dw: &'a dyn Fn(f64) -> f64,
}

/// Largest violation of the free-boundary conditions, split into the ODE
/// residuals (finite differences) and the pointwise front conditions.
pub fn residuals(p: &WaveTrainProfile, f: &Field) -> (f64, f64) {
    let (tau, c0, theta) = (p.tau, p.c0, p.theta);
    let n2 = 2 * p.n;
    let mut ode: f64 = 0.0;
    // step tied to the decay length, Richardson-extrapolated differences
    let h = 1e-2 / (1.0 + tau * c0);
    let d2 = |g: &dyn Fn(f64) -> f64, x: f64, h: f64| (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h);
    let d1 = |g: &dyn Fn(f64) -> f64, x: f64, h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
    let rich = |d: &dyn Fn(f64) -> f64| (4.0 * d(0.5 * h) - d(h)) / 3.0;
    for j in 1..=n2 {
        let (a, b) = ((j - 1) as f64 / n2 as f64, j as f64 / n2 as f64);
        for s in 1..10 {
            let x = a + (b - a) * s as f64 / 10.0;
            let v2 = rich(&|h| d2(f.v, x, h));
            let v1 = rich(&|h| d1(f.v, x, h));
            // w is piecewise linear: a wide stencil avoids cancellation
            let w2 = d2(f.w, x, 0.05 * (b - a));
            let (v0, w0) = ((f.v)(x), (f.w)(x));
            let scale = 1.0 + (tau * c0).powi(2) * v0.abs().max(1.0 / tau);
            ode = ode
                .max((v2 + tau * c0 * v1).abs() / scale)
                .max(w2.abs() / (1.0 + w0.abs()));
        }
    }
    let mut front: f64 = 0.0;
    for n in 1..=n2 {
        let x = n as f64 / n2 as f64;
        let sgn = if n % 2 == 0 { 1.0 } else { -1.0 };
        let (vl, vr) = limits(x, f.v);
        let (wl, wr) = limits(x, f.w);
        let (dvl, dvr) = limits(x, f.dv);
        let (dwl, dwr) = limits(x, f.dw);
        let scale = 1.0 + c0;
        front = front
            .max((vr - vl).abs() / scale)
            .max((wr - wl).abs() / scale)
            .max((0.5 * (wl + wr) - theta * 0.5 * (vl + vr)).abs() / scale)
            .max((dwr - dwl - 2.0 * (-sgn) * c0).abs() / scale)
            .max((dvr - dvl - 2.0 * sgn * c0).abs() / scale);
    }
    (ode, front)
}

pub fn profile_residuals(p: &WaveTrainProfile, shift: f64) -> (f64, f64) {
    let v = |x: f64| p.v0(x) + shift;
    let w = |x: f64| p.w0(x) + shift * p.theta;
    let dv = |x: f64| p.v0_derivative(x);
    let dw = |x: f64| p.w0_derivative(x);
    residuals(
        p,
        &Field {
            v: &v,
            dv: &dv,
            w: &w,
            dw: &dw,
        },
    )
}

// Fourier-mode helpers for the solver tests.

pub fn cfg(theta: f64, eps: f64, nx: usize, ny: usize, dt: f64) -> SimConfig {
    SimConfig {
        params: ModelParams {
            epsilon: eps,
            tau: 1.0,
            theta,
            rho: 1.0,
        },
        nx,
        ny,
        dt,
        ..Default::default()
    }
}

/// Squared wavenumber of mode `(mx, my)` on the unit-by-rho box.
pub fn k2(c: &SimConfig, mx: usize, my: usize) -> f64 {
    let kx = 2.0 * PI * mx as f64;
    let ky = 2.0 * PI * my as f64 / c.params.rho;
    kx * kx + ky * ky
}

/// Hand-derived one-step matrix of the IMEX scheme for one Fourier mode
/// about the uniform state `u_bar`.
pub fn scheme_matrix(c: &SimConfig, k2: f64, u_bar: f64) -> Matrix2<f64> {
    let p = c.params;
    let (dt, s) = (c.dt, c.stabilization);
    let fp = 3.0 * u_bar * u_bar - 1.0;
    let du = 1.0 + dt * (p.epsilon * k2 * k2 + s * k2);
    let dv = p.tau + dt * k2;
    Matrix2::new(
        (1.0 - dt * k2 * (fp / p.epsilon - s)) / du,
        -dt * k2 * p.theta / du,
        -dt * k2 / p.tau / dv,
        p.tau / dv,
    )
}

pub fn linear_symbol(c: &SimConfig, k2: f64, u_bar: f64) -> [[f64; 2]; 2] {
    let p = c.params;
    let fp = 3.0 * u_bar * u_bar - 1.0;
    [
        [-k2 * (p.epsilon * k2 + fp / p.epsilon), -k2 * p.theta],
        [-k2 / (p.tau * p.tau), -k2 / p.tau],
    ]
}

pub fn mode_state(c: &SimConfig, mx: usize, my: usize, u_bar: f64, a: Vector2<f64>) -> FieldState {
    let mut s = FieldState::uniform(c.nx, c.ny, u_bar, 0.0);
    for row in 0..c.ny {
        for i in 0..c.nx {
            let phase = 2.0 * PI * (mx as f64 * i as f64 / c.nx as f64 + my as f64 * row as f64 / c.ny as f64);
            s.u[row * c.nx + i] += a[0] * phase.cos();
            s.v[row * c.nx + i] += a[1] * phase.cos();
        }
    }
    s
}

/// Cosine amplitude of mode `(mx, my)` in `u` and `v`.
pub fn mode_amplitude(c: &SimConfig, s: &FieldState, mx: usize, my: usize) -> Vector2<f64> {
    let (mut au, mut av) = (0.0, 0.0);
    for row in 0..c.ny {
        for i in 0..c.nx {
            let phase = 2.0 * PI * (mx as f64 * i as f64 / c.nx as f64 + my as f64 * row as f64 / c.ny as f64);
            au += s.u[row * c.nx + i] * phase.cos();
            av += s.v[row * c.nx + i] * phase.cos();
        }
    }
    let norm = 0.5 * (c.nx * c.ny) as f64;
    Vector2::new(au / norm, av / norm)
}
