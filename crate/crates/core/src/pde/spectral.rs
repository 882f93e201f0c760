//! 2D complex FFTs on a periodic grid.
//!
//! Physical data is row-major with `ny` rows of length `nx`. Spectral data is
//! stored transposed (`ix * ny + iy`) so that both passes run over contiguous
//! rows; every spectral operation in the solver is pointwise, so the layout is
//! never visible outside this module and the solver.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par;

pub struct Spectral {
    pub nx: usize,
    pub ny: usize,
    x_fwd: Arc<dyn Fft<f64>>,
    x_inv: Arc<dyn Fft<f64>>,
    y_fwd: Arc<dyn Fft<f64>>,
    y_inv: Arc<dyn Fft<f64>>,
    work: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

/// Run `fft` over every length-`len` row of `data`, in parallel blocks.
fn fft_rows(fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], len: usize) {
    let rows = data.len() / len;
    let blocks = (2 * par::num_threads()).min(rows).max(1);
    let rows_per_block = rows.div_ceil(blocks);
    par::for_each_chunk(data, rows_per_block * len, |block| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(block, &mut scratch);
    });
}

/// `out[c * rows + r] = input[r * cols + c]`
fn transpose(input: &[Complex64], out: &mut [Complex64], rows: usize, cols: usize) {
    par::for_each_chunk_indexed(out, rows, |c, line| {
        for (r, slot) in line.iter_mut().enumerate() {
            *slot = input[r * cols + c];
        }
    });
}

impl Spectral {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            x_fwd: planner.plan_fft_forward(nx),
            x_inv: planner.plan_fft_inverse(nx),
            y_fwd: planner.plan_fft_forward(ny),
            y_inv: planner.plan_fft_inverse(ny),
            work: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalised forward transform, physical layout in, spectral layout out.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        fft_rows(&self.x_fwd, data, self.nx);
        if self.ny == 1 {
            return;
        }
        transpose(data, &mut self.work, self.ny, self.nx);
        fft_rows(&self.y_fwd, &mut self.work, self.ny);
        data.copy_from_slice(&self.work);
    }

    /// Unnormalised inverse transform, spectral layout in, physical layout out.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        if self.ny > 1 {
            fft_rows(&self.y_inv, data, self.ny);
            transpose(data, &mut self.work, self.nx, self.ny);
            data.copy_from_slice(&self.work);
        }
        fft_rows(&self.x_inv, data, self.nx);
    }

    /// Spectral-layout position of the wavenumber pair `(ix, iy)`.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// Spectral-layout position of `(-ix, -iy)`.
    pub fn negated(&self, p: usize) -> usize {
        let (ix, iy) = (p / self.ny, p % self.ny);
        self.index((self.nx - ix) % self.nx, (self.ny - iy) % self.ny)
    }
}

/// Signed integer frequency of FFT bin `i` out of `n`.
pub fn signed_bin(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
