use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::wavetrain::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitKind {
    /// Composite wave-train from the sharp-interface profile.
    Wavetrain,
    /// Stationary wave-train (`c0 = 0`) whatever the sign of `1 + theta`;
    /// for `theta < -1` this is the unstable branch.
    Stationary,
    /// Smooth random data around `random_mean`.
    Random,
}

/// Front displacement `amplitude cos(omega y + pi k (n - 1) / N)` applied to
/// front `n` of the initial wave-train, with `omega = 2 pi q / rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub q: u32,
    pub k: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Coefficient `S` of the implicit/explicit splitting term `S Lap u`.
    pub stabilization: f64,
    pub dealias: bool,
    /// Steps between diagnostic records.
    pub output_every: usize,
    /// Steps between snapshots; 0 disables them.
    pub snapshot_every: usize,
    pub n_fronts: usize,
    pub init: InitKind,
    pub perturbation: Option<Perturbation>,
    /// Amplitude of uniform noise added to `u` after initialisation.
    pub noise: f64,
    pub seed: u64,
    pub random_mean: f64,
    pub random_amplitude: f64,
    /// Highest wavenumber index in the random initial data.
    pub random_modes: usize,
    /// Grid row used for front tracking.
    pub track_row: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            params: ModelParams {
                epsilon: 0.01,
                tau: 1.0,
                theta: -2.0,
                rho: 1.0,
            },
            nx: 512,
            ny: 1,
            dt: 1e-6,
            t_end: 0.01,
            stabilization: 2.0,
            dealias: true,
            output_every: 100,
            snapshot_every: 0,
            n_fronts: 1,
            init: InitKind::Wavetrain,
            perturbation: None,
            noise: 0.0,
            seed: 0,
            random_mean: 0.0,
            random_amplitude: 0.5,
            random_modes: 4,
            track_row: 0,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse {key} = {value:?}"))
}

impl SimConfig {
    pub const KEYS: &'static [&'static str] = &[
        "epsilon",
        "tau",
        "theta",
        "rho",
        "nx",
        "ny",
        "dt",
        "t_end",
        "stabilization",
        "dealias",
        "output_every",
        "snapshot_every",
        "n_fronts",
        "init",
        "perturb_q",
        "perturb_k",
        "perturb_amplitude",
        "noise",
        "seed",
        "random_mean",
        "random_amplitude",
        "random_modes",
        "track_row",
    ];

    /// Set one field from its textual key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        let pert = |c: &mut Self| {
            *c.perturbation.get_or_insert(Perturbation {
                q: 1,
                k: 0,
                amplitude: 0.0,
            })
        };
        match key.trim() {
            "epsilon" => self.params.epsilon = parse(key, value)?,
            "tau" => self.params.tau = parse(key, value)?,
            "theta" => self.params.theta = parse(key, value)?,
            "rho" => self.params.rho = parse(key, value)?,
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "stabilization" => self.stabilization = parse(key, value)?,
            "dealias" => self.dealias = parse(key, value)?,
            "output_every" => self.output_every = parse(key, value)?,
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "n_fronts" => self.n_fronts = parse(key, value)?,
            "init" => {
                self.init = match value {
                    "wavetrain" => InitKind::Wavetrain,
                    "stationary" => InitKind::Stationary,
                    "random" => InitKind::Random,
                    _ => return Err(format!("init must be wavetrain, stationary or random, got {value:?}")),
                }
            }
            "perturb_q" => {
                let mut p = pert(self);
                p.q = parse(key, value)?;
                self.perturbation = Some(p);
            }
            "perturb_k" => {
                let mut p = pert(self);
                p.k = parse(key, value)?;
                self.perturbation = Some(p);
            }
            "perturb_amplitude" => {
                let mut p = pert(self);
                p.amplitude = parse(key, value)?;
                self.perturbation = Some(p);
            }
            "noise" => self.noise = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "random_mean" => self.random_mean = parse(key, value)?,
            "random_amplitude" => self.random_amplitude = parse(key, value)?,
            "random_modes" => self.random_modes = parse(key, value)?,
            "track_row" => self.track_row = parse(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Apply `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored; later keys override earlier ones.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: i + 1,
                message: format!("expected key=value, got {line:?}"),
            })?;
            self.set(key, value)
                .map_err(|message| Error::Config { line: i + 1, message })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Render as `key=value` lines accepted by [`SimConfig::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(
            s,
            "epsilon={:e}\ntau={:e}\ntheta={:e}\nrho={:e}",
            p.epsilon, p.tau, p.theta, p.rho
        );
        let _ = writeln!(
            s,
            "nx={}\nny={}\ndt={:e}\nt_end={:e}",
            self.nx, self.ny, self.dt, self.t_end
        );
        let _ = writeln!(s, "stabilization={:e}\ndealias={}", self.stabilization, self.dealias);
        let _ = writeln!(
            s,
            "output_every={}\nsnapshot_every={}",
            self.output_every, self.snapshot_every
        );
        let init = match self.init {
            InitKind::Wavetrain => "wavetrain",
            InitKind::Stationary => "stationary",
            InitKind::Random => "random",
        };
        let _ = writeln!(s, "n_fronts={}\ninit={init}", self.n_fronts);
        if let Some(pt) = self.perturbation {
            let _ = writeln!(
                s,
                "perturb_q={}\nperturb_k={}\nperturb_amplitude={:e}",
                pt.q, pt.k, pt.amplitude
            );
        }
        let _ = writeln!(s, "noise={:e}\nseed={}", self.noise, self.seed);
        let _ = writeln!(
            s,
            "random_mean={:e}\nrandom_amplitude={:e}\nrandom_modes={}\ntrack_row={}",
            self.random_mean, self.random_amplitude, self.random_modes, self.track_row
        );
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.nx < 4 || !self.nx.is_multiple_of(2) {
            return bad(format!("nx must be even and at least 4, got {}", self.nx));
        }
        if self.ny != 1 && (self.ny < 4 || !self.ny.is_multiple_of(2)) {
            return bad(format!("ny must be 1 or even and at least 4, got {}", self.ny));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.stabilization >= 0.0) {
            return bad(format!("stabilization must be nonnegative, got {}", self.stabilization));
        }
        if self.output_every == 0 {
            return bad("output_every must be positive".into());
        }
        if self.n_fronts == 0 {
            return bad("n_fronts must be positive".into());
        }
        if let Some(p) = self.perturbation {
            if p.k >= 2 * self.n_fronts {
                return bad(format!("perturb_k = {} must be below 2N = {}", p.k, 2 * self.n_fronts));
            }
        }
        if self.track_row >= self.ny {
            return bad(format!("track_row = {} is outside the grid", self.track_row));
        }
        if 1.0 / self.nx as f64 > 0.5 * self.params.epsilon {
            log::warn!(
                "grid spacing {} exceeds epsilon / 2 = {}; the interface is under-resolved",
                1.0 / self.nx as f64,
                0.5 * self.params.epsilon
            );
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.params.rho / self.ny as f64
    }
}
