use std::io::Write;

use serde::{Deserialize, Serialize};

use super::solver::{FieldState, Solver};
use crate::{fmt_f64, Error, Result};

/// Largest jump (in domain lengths) tolerated between consecutive tracked
/// positions.
pub const MAX_TRACK_JUMP: f64 = 0.25;
const MIN_SPEED_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub energy: f64,
    pub lyapunov: f64,
    pub interface_length: f64,
    /// Zero crossings of `u` along the tracked row, sorted, padded with `NaN`.
    pub fronts: Vec<f64>,
    /// Tracked maximum of `w` in `[0, 1)`.
    pub peak: f64,
    /// Tracked rising zero crossing of `u` in `[0, 1)`.
    pub crossing: f64,
    /// Least-squares speed of the tracked `w` maximum so far.
    pub speed_estimate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Number of front columns, `2N`.
    pub front_columns: usize,
    pub records: Vec<Record>,
}

/// Periodic difference `b - a` reduced to `(-1/2, 1/2]`.
fn periodic_delta(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(1.0);
    if d > 0.5 {
        d - 1.0
    } else {
        d
    }
}

/// Zero crossings of a periodic row, linearly interpolated. The flag marks
/// crossings where `u` increases.
pub fn zero_crossings(row: &[f64]) -> Vec<(f64, bool)> {
    let n = row.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (row[i], row[(i + 1) % n]);
        if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
            let s = a / (a - b);
            let x = (i as f64 + s) / n as f64;
            out.push((x.rem_euclid(1.0), b > a));
        }
    }
    out.sort_by(|p, q| p.0.total_cmp(&q.0));
    out
}

/// Local maxima of a periodic row located by a parabola through the discrete
/// peak and its neighbours. Returns `(position, value)`.
pub fn local_maxima(row: &[f64]) -> Vec<(f64, f64)> {
    let n = row.len();
    let mut out = Vec::new();
    for i in 0..n {
        let (l, c, r) = (row[(i + n - 1) % n], row[i], row[(i + 1) % n]);
        if c >= l && c > r {
            let denom = l - 2.0 * c + r;
            let shift = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            let value = c - 0.25 * (l - r) * shift;
            out.push((((i as f64 + shift) / n as f64).rem_euclid(1.0), value));
        }
    }
    out
}

fn nearest(candidates: impl Iterator<Item = f64>, previous: Option<f64>) -> Option<f64> {
    match previous {
        Some(p) if p.is_finite() => {
            candidates.min_by(|a, b| periodic_delta(p, *a).abs().total_cmp(&periodic_delta(p, *b).abs()))
        }
        _ => candidates.reduce(f64::min),
    }
}

/// Unwrap a sequence of positions on the unit circle, failing if any step is
/// larger than a quarter of the domain.
pub fn unwrap_track(positions: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(positions.len());
    for (i, &p) in positions.iter().enumerate() {
        if i == 0 {
            out.push(p);
            continue;
        }
        let d = periodic_delta(positions[i - 1], p);
        if !(d.abs() <= MAX_TRACK_JUMP) {
            return Err(Error::LostLock { t: i as f64, jump: d });
        }
        out.push(out[i - 1] + d);
    }
    Ok(out)
}

fn ls_slope(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len() as f64;
    let (mt, mx) = (t.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(x) {
        sxy += (a - mt) * (b - mx);
        sxx += (a - mt) * (a - mt);
    }
    sxy / sxx
}

impl Diagnostics {
    pub fn new(front_columns: usize) -> Self {
        Self {
            front_columns,
            records: Vec::new(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    fn running_speed(&self, peak: f64, t: f64) -> f64 {
        if self.records.len() < 2 {
            return f64::NAN;
        }
        let mut pos: Vec<f64> = self.records.iter().map(|r| r.peak).collect();
        pos.push(peak);
        let mut times = self.times();
        times.push(t);
        match unwrap_track(&pos) {
            Ok(x) => ls_slope(&times, &x),
            Err(_) => f64::NAN,
        }
    }

    /// CSV with columns `t, mass_u, mass_v, energy, lyapunov_proxy,
    /// front_1..front_2N, speed_estimate, w_peak, crossing`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write!(out, "t,mass_u,mass_v,energy,lyapunov_proxy")?;
        for i in 1..=self.front_columns {
            write!(out, ",front_{i}")?;
        }
        writeln!(out, ",speed_estimate,w_peak,crossing")?;
        for r in &self.records {
            write!(
                out,
                "{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.mass_u),
                fmt_f64(r.mass_v),
                fmt_f64(r.energy),
                fmt_f64(r.lyapunov)
            )?;
            for f in &r.fronts {
                write!(out, ",{}", fmt_f64(*f))?;
            }
            writeln!(
                out,
                ",{},{},{}",
                fmt_f64(r.speed_estimate),
                fmt_f64(r.peak),
                fmt_f64(r.crossing)
            )?;
        }
        Ok(())
    }
}

impl Solver {
    /// Append one diagnostic record for `state`.
    pub fn record(&mut self, state: &FieldState, diag: &mut Diagnostics) -> Result<()> {
        let row = self.config().track_row;
        let nx = state.nx;
        let energy = self.energy(state)?;
        let (lyapunov, interface_length) = self.lyapunov_proxy(state)?;
        let crossings = zero_crossings(state.row_u(row));
        let mut fronts: Vec<f64> = crossings.iter().map(|c| c.0).collect();
        fronts.resize(diag.front_columns, f64::NAN);
        let prev = diag.records.last();
        let crossing =
            nearest(crossings.iter().filter(|c| c.1).map(|c| c.0), prev.map(|r| r.crossing)).unwrap_or(f64::NAN);

        let w = self.chemical_potential(state)?;
        let w_row = &w[row * nx..(row + 1) * nx];
        let maxima = local_maxima(w_row);
        let (lo, hi) = w_row
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let cut = lo + 0.5 * (hi - lo);
        let strong = maxima.iter().filter(|m| m.1 >= cut).map(|m| m.0);
        let peak = match prev {
            Some(r) => nearest(strong, Some(r.peak)),
            None => maxima.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|m| m.0),
        }
        .unwrap_or(f64::NAN);
        let speed_estimate = diag.running_speed(peak, state.t);
        diag.records.push(Record {
            t: state.t,
            mass_u: state.mean_u(),
            mass_v: state.mean_v(),
            energy,
            lyapunov,
            interface_length,
            fronts,
            peak,
            crossing,
            speed_estimate,
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    /// Slope of the tracked `w` maximum.
    pub peak: f64,
    /// Slope of the tracked rising zero crossing of `u`; `NaN` if tracking
    /// failed.
    pub crossing: f64,
    pub samples: usize,
}

/// Front speed from the records with `t >= t_min`.
pub fn measure_speed(diag: &Diagnostics, t_min: f64) -> Result<SpeedEstimate> {
    let recs: Vec<&Record> = diag.records.iter().filter(|r| r.t >= t_min).collect();
    if recs.len() < MIN_SPEED_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SPEED_SAMPLES,
            have: recs.len(),
        });
    }
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let peaks: Vec<f64> = recs.iter().map(|r| r.peak).collect();
    let unwrapped = unwrap_track(&peaks).map_err(|e| match e {
        Error::LostLock { t: i, jump } => Error::LostLock { t: t[i as usize], jump },
        other => other,
    })?;
    let peak = ls_slope(&t, &unwrapped);
    let crossings: Vec<f64> = recs.iter().map(|r| r.crossing).collect();
    let crossing = match unwrap_track(&crossings) {
        Ok(x) if x.iter().all(|v| v.is_finite()) => ls_slope(&t, &x),
        _ => f64::NAN,
    };
    Ok(SpeedEstimate {
        peak,
        crossing,
        samples: recs.len(),
    })
}
