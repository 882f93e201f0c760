use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{InitKind, SimConfig};
use super::spectral::{signed_bin, Spectral};
use super::BLOWUP;
use crate::par;
use crate::wavetrain::{build_profile, composite_fields, signed_distance, stationary_profile, Heteroclinic, GAMMA};
use crate::{Error, Result};

/// Fields on the grid, row-major with `ny` rows of `nx` points. `v` is the
/// unshifted inhibitor of the diffuse system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub nx: usize,
    pub ny: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
    pub steps: u64,
}

impl FieldState {
    pub fn uniform(nx: usize, ny: usize, u: f64, v: f64) -> Self {
        Self {
            nx,
            ny,
            u: vec![u; nx * ny],
            v: vec![v; nx * ny],
            t: 0.0,
            steps: 0,
        }
    }

    pub fn mean_u(&self) -> f64 {
        self.u.iter().sum::<f64>() / self.u.len() as f64
    }

    pub fn mean_v(&self) -> f64 {
        self.v.iter().sum::<f64>() / self.v.len() as f64
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u
            .iter()
            .fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
    }

    pub fn row_u(&self, row: usize) -> &[f64] {
        &self.u[row * self.nx..(row + 1) * self.nx]
    }
}

/// Time stepper with precomputed symbols and FFT workspace.
///
/// One step of first-order IMEX in Fourier space, for every wavenumber
/// `|k| > 0`:
///
/// ```text
/// (1 + dt (eps k^4 + S k^2)) u' = u - dt k^2 (f(u)/eps - S u + theta v)
/// (tau + dt k^2) v'             = tau v - dt k^2 u / tau
/// ```
///
/// The zero wavenumber of both fields is copied unchanged.
#[derive(Debug)]
pub struct Solver {
    cfg: SimConfig,
    spectral: Spectral,
    k2: Vec<f64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    keep: Vec<bool>,
    neg: Vec<usize>,
    a_u: Vec<f64>,
    a_v: Vec<f64>,
    z: Vec<Complex64>,
    fz: Vec<Complex64>,
    out: Vec<Complex64>,
}

impl Solver {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let (nx, ny) = (cfg.nx, cfg.ny);
        let spectral = Spectral::new(nx, ny);
        let n = nx * ny;
        let (mut k2, mut kx, mut ky, mut keep) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![true; n]);
        let mut neg = vec![0; n];
        let p = &cfg.params;
        for ix in 0..nx {
            for iy in 0..ny {
                let idx = spectral.index(ix, iy);
                let (mx, my) = (signed_bin(ix, nx), signed_bin(iy, ny));
                kx[idx] = 2.0 * PI * mx as f64;
                ky[idx] = 2.0 * PI * my as f64 / p.rho;
                k2[idx] = kx[idx] * kx[idx] + ky[idx] * ky[idx];
                if cfg.dealias {
                    let cut_x = 3 * mx.unsigned_abs() as usize > nx;
                    let cut_y = ny > 1 && 3 * my.unsigned_abs() as usize > ny;
                    keep[idx] = !(cut_x || cut_y);
                }
                neg[idx] = spectral.negated(idx);
            }
        }
        let a_u = k2
            .iter()
            .map(|&k| 1.0 / (1.0 + cfg.dt * (p.epsilon * k * k + cfg.stabilization * k)))
            .collect();
        let a_v = k2.iter().map(|&k| 1.0 / (p.tau + cfg.dt * k)).collect();
        let zero = vec![Complex64::new(0.0, 0.0); n];
        Ok(Self {
            cfg: cfg.clone(),
            spectral,
            k2,
            kx,
            ky,
            keep,
            neg,
            a_u,
            a_v,
            z: zero.clone(),
            fz: zero.clone(),
            out: zero,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn check_shape(&self, state: &FieldState) -> Result<()> {
        if state.nx != self.cfg.nx || state.ny != self.cfg.ny || state.u.len() != state.nx * state.ny {
            return Err(Error::InvalidParameter(format!(
                "state grid {}x{} does not match configuration {}x{}",
                state.nx, state.ny, self.cfg.nx, self.cfg.ny
            )));
        }
        Ok(())
    }

    /// Transform `u + i v` and `f(u)` to spectral space.
    fn load(&mut self, state: &FieldState) {
        for (i, slot) in self.z.iter_mut().enumerate() {
            *slot = Complex64::new(state.u[i], state.v[i]);
        }
        for (slot, &u) in self.fz.iter_mut().zip(&state.u) {
            *slot = Complex64::new(u * u * u - u, 0.0);
        }
        self.spectral.forward(&mut self.z);
        self.spectral.forward(&mut self.fz);
    }

    /// Split the packed transform into `(u_hat, v_hat)` at spectral index `p`.
    fn unpack(z: &[Complex64], neg: &[usize], p: usize) -> (Complex64, Complex64) {
        let (a, b) = (z[p], z[neg[p]].conj());
        (0.5 * (a + b), Complex64::new(0.0, -0.5) * (a - b))
    }

    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        self.check_shape(state)?;
        self.load(state);
        let p = self.cfg.params;
        let (dt, s) = (self.cfg.dt, self.cfg.stabilization);
        let (inv_eps, theta, tau) = (1.0 / p.epsilon, p.theta, p.tau);
        let (z, fz, k2, keep, neg, a_u, a_v) =
            (&self.z, &self.fz, &self.k2, &self.keep, &self.neg, &self.a_u, &self.a_v);
        let block = self.out.len().div_ceil(4 * par::num_threads()).max(1024);
        par::for_each_chunk_indexed(&mut self.out, block, |b, chunk| {
            for (j, slot) in chunk.iter_mut().enumerate() {
                let idx = b * block + j;
                if idx == 0 {
                    *slot = z[0];
                    continue;
                }
                let (uh, vh) = Self::unpack(z, neg, idx);
                let fh = if keep[idx] { fz[idx] } else { Complex64::new(0.0, 0.0) };
                let k = k2[idx];
                let un = (uh - dt * k * (fh * inv_eps - s * uh + theta * vh)) * a_u[idx];
                let vn = (tau * vh - dt * k * uh / tau) * a_v[idx];
                *slot = un + Complex64::new(0.0, 1.0) * vn;
            }
        });
        self.spectral.inverse(&mut self.out);
        let scale = 1.0 / self.out.len() as f64;
        for (i, c) in self.out.iter().enumerate() {
            state.u[i] = c.re * scale;
            state.v[i] = c.im * scale;
        }
        state.steps += 1;
        state.t = state.steps as f64 * dt;
        let m = state.max_abs_u();
        if !(m <= BLOWUP) {
            return Err(Error::Diverged { t: state.t, max_u: m });
        }
        Ok(())
    }

    /// Chemical potential `w = -eps Lap u + f(u)/eps + theta v` on the grid.
    pub fn chemical_potential(&mut self, state: &FieldState) -> Result<Vec<f64>> {
        self.check_shape(state)?;
        let p = self.cfg.params;
        let mut buf: Vec<Complex64> = state.u.iter().map(|&u| Complex64::new(u, 0.0)).collect();
        self.spectral.forward(&mut buf);
        for (c, &k) in buf.iter_mut().zip(&self.k2) {
            *c *= p.epsilon * k;
        }
        self.spectral.inverse(&mut buf);
        let scale = 1.0 / buf.len() as f64;
        Ok(buf
            .iter()
            .zip(state.u.iter().zip(&state.v))
            .map(|(lap, (&u, &v))| lap.re * scale + (u * u * u - u) / p.epsilon + p.theta * v)
            .collect())
    }

    /// Mean of `|grad u|^2` over the domain, computed spectrally.
    pub fn mean_gradient_squared(&mut self, state: &FieldState) -> Result<f64> {
        self.check_shape(state)?;
        let mut buf: Vec<Complex64> = state.u.iter().map(|&u| Complex64::new(u, 0.0)).collect();
        self.spectral.forward(&mut buf);
        let n = buf.len() as f64;
        Ok(buf.iter().zip(&self.k2).map(|(c, &k)| k * c.norm_sqr()).sum::<f64>() / (n * n))
    }

    /// `int (eps/2 |grad u|^2 + F(u)/eps)`, the diffuse interface energy.
    pub fn interface_energy(&mut self, state: &FieldState) -> Result<f64> {
        let eps = self.cfg.params.epsilon;
        let g = self.mean_gradient_squared(state)?;
        let bulk = state.u.iter().map(|&u| 0.25 * (u * u - 1.0).powi(2)).sum::<f64>() / state.u.len() as f64;
        Ok(self.cfg.params.rho * (0.5 * eps * g + bulk / eps))
    }

    /// Gradient-flow energy `E[u, v~]` with `v~ = tau sqrt(theta) v`; `NaN`
    /// unless `theta > 0`.
    ///
    /// The coupling terms `(v~ + sqrt(theta) u)^2 / 2 tau - theta u^2 / 2 tau`
    /// are expanded to `tau theta v^2 / 2 + theta u v`.
    pub fn energy(&mut self, state: &FieldState) -> Result<f64> {
        let p = self.cfg.params;
        if !(p.theta > 0.0) {
            return Ok(f64::NAN);
        }
        let interface = self.interface_energy(state)?;
        let coupling = state
            .u
            .iter()
            .zip(&state.v)
            .map(|(&u, &v)| 0.5 * p.tau * p.theta * v * v + p.theta * u * v)
            .sum::<f64>()
            / state.u.len() as f64;
        Ok(interface + p.rho * coupling)
    }

    /// Sharp-interface Lyapunov functional `|Gamma| + (tau theta / 4 gamma) int v_s^2`
    /// with the interface length estimated from the diffuse interface energy
    /// (`2 gamma` per unit length) and `v_s = v + u / tau` the outer inhibitor.
    pub fn lyapunov_proxy(&mut self, state: &FieldState) -> Result<(f64, f64)> {
        let p = self.cfg.params;
        let length = self.interface_energy(state)? / (2.0 * GAMMA);
        let vs2 = state
            .u
            .iter()
            .zip(&state.v)
            .map(|(&u, &v)| (v + u / p.tau).powi(2))
            .sum::<f64>()
            / state.u.len() as f64;
        Ok((length + p.tau * p.theta / (4.0 * GAMMA) * p.rho * vs2, length))
    }

    /// Spectral wavenumbers `(kx, ky)` at a spectral-layout index.
    pub fn wavenumber(&self, idx: usize) -> (f64, f64) {
        (self.kx[idx], self.ky[idx])
    }

    /// One-step amplification matrix of the scheme for a single Fourier mode
    /// `(mx, my)` linearised about the uniform state `u = u_bar`.
    pub fn amplification_matrix(&self, mx: usize, my: usize, u_bar: f64) -> [[f64; 2]; 2] {
        let idx = self.spectral.index(mx, my);
        let p = self.cfg.params;
        let (k, dt, s) = (self.k2[idx], self.cfg.dt, self.cfg.stabilization);
        let fp = 3.0 * u_bar * u_bar - 1.0;
        let au = self.a_u[idx];
        let av = self.a_v[idx];
        [
            [(1.0 - dt * k * (fp / p.epsilon - s)) * au, -dt * k * p.theta * au],
            [-dt * k / p.tau * av, p.tau * av],
        ]
    }

    /// Exact linear symbol `L` of the PDE about `u = u_bar` for mode `(mx, my)`.
    pub fn linear_symbol(&self, mx: usize, my: usize, u_bar: f64) -> [[f64; 2]; 2] {
        let idx = self.spectral.index(mx, my);
        let p = self.cfg.params;
        let k = self.k2[idx];
        let fp = 3.0 * u_bar * u_bar - 1.0;
        [
            [-k * (p.epsilon * k + fp / p.epsilon), -k * p.theta],
            [-k / (p.tau * p.tau), -k / p.tau],
        ]
    }
}

/// Advance `state` by one step of `cfg`. Builds a fresh [`Solver`]; loops
/// should hold on to one instead.
pub fn step(state: &FieldState, cfg: &SimConfig) -> Result<FieldState> {
    let mut next = state.clone();
    Solver::new(cfg)?.step(&mut next)?;
    Ok(next)
}

fn add_noise(state: &mut FieldState, cfg: &SimConfig) {
    if cfg.noise == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for u in state.u.iter_mut() {
        *u += cfg.noise * rng.gen_range(-1.0..1.0);
    }
}

/// Wave-train initial data: composite diffuse fields with optionally
/// displaced fronts and noise.
///
/// Front `n` (at `x_n = n / 2N`, `x_0 = x_{2N}`) is moved in `x` by
/// `amplitude cos(omega y + pi k (n - 1) / N)`, the real part of the
/// circulant mode `g_k` carried by the transverse wave `e^{i omega y}`.
pub fn init_wavetrain(cfg: &SimConfig, n: usize) -> Result<FieldState> {
    cfg.validate()?;
    let p = cfg.params;
    let profile = match cfg.init {
        InitKind::Stationary => stationary_profile(&p, n)?,
        _ => build_profile(&p, n)?,
    };
    let fields = composite_fields(&profile, &p)?;
    let base = fields.front_set().to_vec();
    let mut state = FieldState::uniform(cfg.nx, cfg.ny, 0.0, 0.0);
    let q = Heteroclinic;
    let mut fronts = base.clone();
    for row in 0..cfg.ny {
        let y = row as f64 * cfg.dy();
        if let Some(pt) = cfg.perturbation {
            let omega = 2.0 * PI * pt.q as f64 / p.rho;
            for (j, f) in fronts.iter_mut().enumerate() {
                // entry j of the front set is x_j; x_0 stands for x_{2N}
                let m = if j == 0 { 2 * n } else { j };
                let phase = PI * (pt.k * (m - 1)) as f64 / n as f64;
                *f = base[j] + pt.amplitude * (omega * y + phase).cos();
            }
        }
        for i in 0..cfg.nx {
            let x = i as f64 * cfg.dx();
            let u = q.q(signed_distance(x, &fronts) / p.epsilon);
            let idx = row * cfg.nx + i;
            state.u[idx] = u;
            state.v[idx] = profile.v0(x) - u / p.tau;
        }
    }
    add_noise(&mut state, cfg);
    Ok(state)
}

/// Smooth random data: a sum of Fourier modes up to `random_modes` in each
/// direction with random phases and amplitudes decaying like `1 / (1 + |m|^2)`.
pub fn init_random(cfg: &SimConfig) -> Result<FieldState> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = FieldState::uniform(cfg.nx, cfg.ny, cfg.random_mean, 0.0);
    let m = cfg.random_modes as i64;
    let my_max = if cfg.ny > 1 { m } else { 0 };
    let mut modes = Vec::new();
    for mx in 0..=m {
        for my in -my_max..=my_max {
            if mx == 0 && my <= 0 {
                continue;
            }
            let w = 1.0 / (1.0 + (mx * mx + my * my) as f64);
            let au = w * rng.gen_range(-1.0..1.0);
            let av = w * rng.gen_range(-1.0..1.0);
            let (pu, pv) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
            modes.push((mx as f64, my as f64, au, pu, av, pv));
        }
    }
    let norm = modes.iter().map(|m| m.2.abs()).sum::<f64>().max(1e-300);
    for row in 0..cfg.ny {
        let y = row as f64 / cfg.ny as f64;
        for i in 0..cfg.nx {
            let x = i as f64 / cfg.nx as f64;
            let (mut du, mut dv) = (0.0, 0.0);
            for &(mx, my, au, pu, av, pv) in &modes {
                let arg = 2.0 * PI * (mx * x + my * y);
                du += au * (arg + pu).cos();
                dv += av * (arg + pv).cos();
            }
            let idx = row * cfg.nx + i;
            state.u[idx] += cfg.random_amplitude * du / norm;
            state.v[idx] += cfg.random_amplitude * dv / norm;
        }
    }
    add_noise(&mut state, cfg);
    Ok(state)
}

pub(crate) fn init_from_config(cfg: &SimConfig) -> Result<FieldState> {
    match cfg.init {
        InitKind::Wavetrain | InitKind::Stationary => init_wavetrain(cfg, cfg.n_fronts),
        InitKind::Random => init_random(cfg),
    }
}
