//! Real <-> spectral transform pair and the Fourier representation of
//! fields.
//!
//! Normalization is pinned once here and used by every other module:
//! `to_spectral` returns `c[m] = N^-3 * sum_x f(x) exp(-i k(m).x)`, so a
//! constant field `c` has coefficient `c` at mode `(0,0,0)` and zero
//! elsewhere, and `from_spectral` is the plain unscaled synthesis
//! `f(x) = sum_m c[m] exp(+i k(m).x)`. Under this convention Parseval
//! reads `sum_x f(x)^2 * dV = L^3 * sum_m |c[m]|^2`.
//!
//! The wavenumber of axis index `m` is `k = 2*pi*fold(m)/L` with
//! `fold(m) = m` for `m <= N/2` and `m - N` otherwise.

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

/// Relative imaginary residue above which `from_spectral` refuses to
/// produce a real field.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Fourier coefficients of a real field, in the normalization pinned in
/// the module docs. Conjugate symmetry `c[-m] = conj(c[m])` is an
/// invariant of anything produced by `to_spectral`; `from_spectral`
/// verifies it a posteriori through the imaginary residue of the
/// synthesis.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// Wrap raw coefficients. Symmetry is not checked here; callers that
    /// hand-build spectra get the check when they synthesize.
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch {
                context: "coefficient count does not match N^3",
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at mode `(mi, mj, mk)` (storage indices, not folded).
    pub fn at(&self, mi: usize, mj: usize, mk: usize) -> Complex64 {
        self.coeffs[self.grid.index(mi, mj, mk)]
    }

    /// Pointwise multiply by a real per-mode table.
    pub fn mul_table(&mut self, table: &[f64]) {
        for (c, &m) in self.coeffs.iter_mut().zip(table) {
            *c *= m;
        }
    }

    /// `self += w * (table .* other)`, the accumulation step of the
    /// windowed quadrature.
    pub fn accumulate_scaled(&mut self, w: f64, table: &[f64], other: &SpectralField) {
        for ((acc, &m), c) in self
            .coeffs
            .iter_mut()
            .zip(table)
            .zip(other.coeffs.iter())
        {
            *acc += w * m * c;
        }
    }
}

/// Signed wavenumber index: `m` for `m <= N/2`, `m - N` otherwise.
#[inline]
pub fn fold(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Wavenumber of axis index `m`: `2*pi*fold(m)/L`.
#[inline]
pub fn wavenumber(m: usize, grid: &GridSpec) -> f64 {
    2.0 * std::f64::consts::PI * fold(m, grid.points_per_axis()) as f64 / grid.box_length()
}

/// `|k(m)|^2` for the mode triple at flat storage order. The closure is
/// called once per mode in row-major order.
pub fn for_each_mode(grid: &GridSpec, mut f: impl FnMut(usize, f64)) {
    let n = grid.points_per_axis();
    let mut flat = 0;
    for mi in 0..n {
        let ki = wavenumber(mi, grid);
        for mj in 0..n {
            let kj = wavenumber(mj, grid);
            for mk in 0..n {
                let kk = wavenumber(mk, grid);
                f(flat, ki * ki + kj * kj + kk * kk);
                flat += 1;
            }
        }
    }
}

/// Forward transform with the pinned normalization.
pub fn to_spectral(f: &RealField) -> SpectralField {
    let grid = f.grid();
    let mut data: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft3(&mut data, grid.points_per_axis(), Direction::Forward);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField { grid, coeffs: data }
}

/// Inverse transform. The imaginary residue of the synthesis is the
/// a-posteriori symmetry check: below [`SYMMETRY_TOLERANCE`] (relative to
/// the real amplitude) it is discarded, above it the call fails.
pub fn from_spectral(spec: &SpectralField) -> Result<RealField> {
    let grid = spec.grid;
    let mut data = spec.coeffs.clone();
    fft3(&mut data, grid.points_per_axis(), Direction::Inverse);
    let mut max_re = 0.0_f64;
    let mut max_im = 0.0_f64;
    for c in &data {
        max_re = max_re.max(c.re.abs());
        max_im = max_im.max(c.im.abs());
    }
    let residue = max_im / max_re.max(f64::MIN_POSITIVE);
    if max_im > 0.0 && residue > SYMMETRY_TOLERANCE {
        return Err(Error::SymmetryViolation {
            residue,
            limit: SYMMETRY_TOLERANCE,
        });
    }
    RealField::from_values(grid, data.iter().map(|c| c.re).collect())
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place 3-D FFT on a flat row-major cube of side `n`, one axis at a
/// time. Unnormalized in both directions; callers apply scaling.
fn fft3(data: &mut [Complex64], n: usize, dir: Direction) {
    debug_assert_eq!(data.len(), n * n * n);
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // axis 2: contiguous lines
    for line in data.chunks_exact_mut(n) {
        fft.process_with_scratch(line, &mut scratch);
    }
    // axes 1 and 0: gather strided lines into a buffer
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut run_lines = |data: &mut [Complex64], starts: &[(usize, usize)], stride: usize| {
        for &(a, b) in starts {
            let start = a + b;
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = data[start + t * stride];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (t, &slot) in line.iter().enumerate() {
                data[start + t * stride] = slot;
            }
        }
    };
    // axis 1: element (i, j, k) sits at i*n^2 + j*n + k, stride n over j
    let starts: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |k| (i * n * n, k)))
        .collect();
    run_lines(data, &starts, n);
    // axis 0: stride n^2 over i
    let starts: Vec<(usize, usize)> = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j * n, k)))
        .collect();
    run_lines(data, &starts, n * n);
}
