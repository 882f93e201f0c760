//! Counting right-half-plane zeros with the argument principle.
//!
//! The contour runs down the imaginary axis from `+i Lambda` to `-i Lambda`,
//! parametrised by `lambda_I = sinh(t)` so that both the region near the
//! origin and the far tails are covered with a few thousand points. Beyond
//! `Lambda` the function is replaced by its linear asymptote `C lambda`; the
//! small residual phase `arg(F / (C lambda))` at the cut is added explicitly,
//! and the closing arc at infinity contributes `+pi`, hence
//! `Z = 1/2 + Delta arg / 2 pi`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::{fmt_f64, Error, Result};

/// Radius of the semicircle that steps around a neutral root at the origin.
pub const DEFAULT_INDENT: f64 = 1e-6;
/// Smallest parameter step the refinement may take.
pub const MIN_STEP: f64 = 1e-12;
/// Every accepted step must change the phase by less than this.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;
/// Steps are bisected until they turn the phase by at most this much.
const REFINE_PHASE: f64 = PI / 4.0;
/// ... and change the modulus by at most this factor.
const REFINE_MODULUS: f64 = 4.0;
const ARC_SAMPLES: usize = 64;
const INTEGER_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourOptions {
    /// Fixed truncation `Lambda`; chosen from `tail_tolerance` when `None`.
    pub lambda_max: Option<f64>,
    /// Relative distance from the asymptote required at the cut.
    pub tail_tolerance: f64,
    /// Upper limit for the adaptive cut.
    pub lambda_limit: f64,
    /// Step around the origin with a semicircle of this radius.
    pub indent: Option<f64>,
    /// Trace only `lambda_I >= 0` and double the phase (requires
    /// `F(conj l) = conj F(l)`).
    pub half: bool,
    /// Initial number of samples along the full axis.
    pub samples: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            lambda_max: None,
            tail_tolerance: 1e-4,
            lambda_limit: 1e16,
            indent: None,
            half: false,
            samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub lambda: Complex64,
    pub f: Complex64,
    /// Unwrapped phase accumulated from `+i infinity`.
    pub arg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionTrace {
    pub samples: Vec<TraceSample>,
    /// Total change of `arg F` from `+i infinity` to `-i infinity`.
    pub unwrapped_phase: f64,
    /// `1/2 + unwrapped_phase / 2 pi` before rounding.
    pub raw: f64,
    pub z: u32,
    pub tail_cut: f64,
    pub half: bool,
    /// Phase contributed beyond the cut, top and bottom.
    pub tail_phase: (f64, f64),
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    /// `lambda = i sinh(t)`
    Axis,
    /// `lambda = r e^{i t}`
    Arc(f64),
}

impl Segment {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Axis => Complex64::new(0.0, t.sinh()),
            Segment::Arc(r) => Complex64::from_polar(r, t),
        }
    }
}

fn wrap(d: f64) -> f64 {
    (d + PI).rem_euclid(2.0 * PI) - PI
}

struct Walker<'a> {
    f: &'a dyn Fn(Complex64) -> Result<Complex64>,
    samples: Vec<TraceSample>,
    phase: f64,
}

impl Walker<'_> {
    fn eval(&self, seg: Segment, t: f64) -> Result<(Complex64, Complex64)> {
        let l = seg.point(t);
        let v = (self.f)(l)?;
        if !(v.re.is_finite() && v.im.is_finite()) || v.norm() == 0.0 {
            return Err(Error::ContourZero { lambda_i: l.im });
        }
        Ok((l, v))
    }

    fn push(&mut self, l: Complex64, v: Complex64) {
        if let Some(last) = self.samples.last() {
            self.phase += wrap(v.arg() - last.f.arg());
        }
        self.samples.push(TraceSample {
            lambda: l,
            f: v,
            arg: self.phase,
        });
    }

    /// Append samples on `(ta, tb]`, bisecting where the phase or modulus
    /// moves too fast.
    fn refine(&mut self, seg: Segment, ta: f64, fa: Complex64, tb: f64, lb: Complex64, fb: Complex64) -> Result<()> {
        let d = wrap(fb.arg() - fa.arg()).abs();
        let m = (fb.norm() / fa.norm()).ln().abs();
        let wants_split = d > REFINE_PHASE || m > REFINE_MODULUS.ln();
        if wants_split && (tb - ta).abs() > MIN_STEP {
            let tm = 0.5 * (ta + tb);
            let (lm, fm) = self.eval(seg, tm)?;
            self.refine(seg, ta, fa, tm, lm, fm)?;
            return self.refine(seg, tm, fm, tb, lb, fb);
        }
        if d >= MAX_PHASE_STEP {
            return Err(Error::ContourZero { lambda_i: lb.im });
        }
        self.push(lb, fb);
        Ok(())
    }

    fn walk(&mut self, seg: Segment, t0: f64, t1: f64, count: usize) -> Result<()> {
        let count = count.max(2);
        let (mut ta, mut fa) = if let Some(last) = self.samples.last() {
            (t0, last.f)
        } else {
            let (l, v) = self.eval(seg, t0)?;
            self.push(l, v);
            (t0, v)
        };
        for i in 1..=count {
            let tb = t0 + (t1 - t0) * i as f64 / count as f64;
            let (lb, fb) = self.eval(seg, tb)?;
            self.refine(seg, ta, fa, tb, lb, fb)?;
            ta = tb;
            fa = fb;
        }
        Ok(())
    }
}

fn tail_deviation(f: &dyn Fn(Complex64) -> Result<Complex64>, c: Complex64, lambda: Complex64) -> Result<Complex64> {
    Ok(f(lambda)? / (c * lambda))
}

/// Pick the truncation `Lambda`: the smallest power of ten beyond 100 at
/// which `F` is within `tail_tolerance` of its asymptote on both sides.
fn choose_cut(f: &dyn Fn(Complex64) -> Result<Complex64>, c: Complex64, opts: &ContourOptions) -> Result<f64> {
    if let Some(l) = opts.lambda_max {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda_max must be positive, got {l}")));
        }
        return Ok(l);
    }
    let mut cut = 1e2;
    while cut < opts.lambda_limit {
        let top = tail_deviation(f, c, Complex64::new(0.0, cut))?;
        let bottom = tail_deviation(f, c, Complex64::new(0.0, -cut))?;
        if (top - 1.0).norm() < opts.tail_tolerance && (bottom - 1.0).norm() < opts.tail_tolerance {
            return Ok(cut);
        }
        cut *= 10.0;
    }
    Ok(opts.lambda_limit)
}

/// Count the zeros of `f` with `Re lambda > 0`.
///
/// `tail_coefficient` is `C` in `f(lambda) ~ C lambda` as `|lambda| -> inf`.
/// With `opts.indent` the contour detours into the right half-plane around
/// the origin, so a root at `lambda = 0` is not counted.
pub fn count_unstable(
    f: &dyn Fn(Complex64) -> Result<Complex64>,
    tail_coefficient: Complex64,
    opts: &ContourOptions,
) -> Result<DispersionTrace> {
    if tail_coefficient.norm() == 0.0 || !tail_coefficient.re.is_finite() {
        return Err(Error::InvalidParameter(
            "tail coefficient must be finite and nonzero".into(),
        ));
    }
    let cut = choose_cut(f, tail_coefficient, opts)?;
    let big_t = cut.asinh();
    let per_unit = opts.samples as f64 / (2.0 * big_t);
    let axis_count = |a: f64, b: f64| ((a - b).abs() * per_unit).ceil() as usize;

    let mut w = Walker {
        f,
        samples: Vec::new(),
        phase: 0.0,
    };
    let top = tail_deviation(f, tail_coefficient, Complex64::new(0.0, cut))?.arg();
    w.phase = top;

    match (opts.indent, opts.half) {
        (None, false) => w.walk(Segment::Axis, big_t, -big_t, axis_count(big_t, -big_t))?,
        (None, true) => w.walk(Segment::Axis, big_t, 0.0, axis_count(big_t, 0.0))?,
        (Some(r), half) => {
            if !(r > 0.0 && r < cut) {
                return Err(Error::InvalidParameter(format!("indentation radius {r} out of range")));
            }
            let tr = r.asinh();
            w.walk(Segment::Axis, big_t, tr, axis_count(big_t, tr))?;
            let end = if half { 0.0 } else { -PI / 2.0 };
            w.walk(
                Segment::Arc(r),
                PI / 2.0,
                end,
                if half { ARC_SAMPLES / 2 } else { ARC_SAMPLES },
            )?;
            if !half {
                w.walk(Segment::Axis, -tr, -big_t, axis_count(big_t, tr))?;
            }
        }
    }

    let (unwrapped_phase, bottom) = if opts.half {
        let last = w.samples.last().expect("walk produced samples");
        if last.f.im.abs() > 1e-9 * last.f.norm() {
            return Err(Error::InvalidParameter(
                "half contour needs a real value on the real axis (conjugate symmetry)".into(),
            ));
        }
        (2.0 * w.phase, top)
    } else {
        let bottom = -tail_deviation(f, tail_coefficient, Complex64::new(0.0, -cut))?.arg();
        if let Some(last) = w.samples.last_mut() {
            last.arg += bottom;
        }
        (w.phase + bottom, bottom)
    };

    let raw = 0.5 + unwrapped_phase / (2.0 * PI);
    let rounded = raw.round();
    if (raw - rounded).abs() > INTEGER_TOL || rounded < 0.0 {
        return Err(Error::NonIntegerWinding { raw });
    }
    Ok(DispersionTrace {
        samples: w.samples,
        unwrapped_phase,
        raw,
        z: rounded as u32,
        tail_cut: cut,
        half: opts.half,
        tail_phase: (top, bottom),
    })
}

impl DispersionTrace {
    /// Largest phase change between consecutive samples.
    pub fn max_phase_step(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].arg - w[0].arg).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `lambda_I, ReF, ImF, arg_unwrapped, lambda_R`.
    ///
    /// `arg_unwrapped` starts at the top tail contribution; on a full trace
    /// the last row also carries the bottom tail, so it ends at
    /// `(2Z - 1) pi`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "lambda_I,ReF,ImF,arg_unwrapped,lambda_R")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(s.lambda.im),
                fmt_f64(s.f.re),
                fmt_f64(s.f.im),
                fmt_f64(s.arg),
                fmt_f64(s.lambda.re)
            )?;
        }
        Ok(())
    }
}
