//! Uniform periodic 3-D grid, real-valued fields on it, and the snapshot
//! file format.
//!
//! Index `(i, j, k)` maps to the point `(i·L/N, j·L/N, k·L/N)` with `k`
//! varying fastest in storage. Grid sums approximate integrals by the
//! rectangle rule, which is exact for band-limited periodic integrands.
//! All reductions use pairwise summation in a fixed order so repeated runs
//! are bit-identical.

use crate::error::{Error, Result};
use std::io::{Read, Write};

/// Magic bytes opening a field snapshot file.
pub const SNAPSHOT_MAGIC: &[u8; 6] = b"SLHF1\0";
/// Snapshot header length in bytes: magic(6) pad(2) n(u32) l(f64) pad(4).
pub const SNAPSHOT_HEADER_LEN: usize = 24;

/// Geometry of the periodic box: `n` points per axis on a box of edge
/// length `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    l: f64,
}

impl GridSpec {
    /// `n` must be even and at least 4 (the folded wavenumber layout needs
    /// a well-defined Nyquist mode); `l` must be positive and finite.
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "points_per_axis",
                requirement: "an even integer >= 4",
                value: n as f64,
            });
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter {
                name: "box_length",
                requirement: "positive and finite",
                value: l,
            });
        }
        Ok(Self { n, l })
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.l
    }

    /// Grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.l / self.n as f64
    }

    /// Rectangle-rule weight `(L/N)^3`.
    pub fn volume_element(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Total number of grid points `N^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of grid index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Flat storage index of `(i, j, k)`; `k` contiguous.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }
}

/// A real-valued sample field on a [`GridSpec`]. Values are immutable
/// after construction; every constructor rejects non-finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                context: "value count does not match N^3",
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "field values",
            });
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        let n = grid.points_per_axis();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            let x = grid.coord(i);
            for j in 0..n {
                let y = grid.coord(j);
                for k in 0..n {
                    values.push(f(x, y, grid.coord(k)));
                }
            }
        }
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Grid approximation of `sup_x |f(x)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `sup_x |self - other|`; both fields must share a grid.
    pub fn sup_distance(&self, other: &RealField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                context: "sup_distance operands",
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Pointwise map, revalidating finiteness.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RealField> {
        Self::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Rectangle-rule integral of `f(value)` over the box.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        pairwise_sum(&mapped) * self.grid.volume_element()
    }

    /// Exact negation (used by odd-symmetry checks).
    pub fn negated(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Write the binary snapshot: 24-byte header then `N^3` little-endian
    /// f64 values in row-major `(i, j, k)` order.
    pub fn write_snapshot(&self, w: &mut impl Write) -> Result<()> {
        let mut header = [0u8; SNAPSHOT_HEADER_LEN];
        header[..6].copy_from_slice(SNAPSHOT_MAGIC);
        header[8..12].copy_from_slice(&(self.grid.n as u32).to_le_bytes());
        header[12..20].copy_from_slice(&self.grid.l.to_le_bytes());
        w.write_all(&header)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot(r: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; SNAPSHOT_HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[..6] != SNAPSHOT_MAGIC {
            return Err(Error::SnapshotFormat("bad magic".into()));
        }
        let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(header[12..20].try_into().unwrap());
        let grid = GridSpec::new(n, l)
            .map_err(|e| Error::SnapshotFormat(format!("bad header: {e}")))?;
        let mut buf = vec![0u8; grid.len() * 8];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_values(grid, values)
            .map_err(|_| Error::SnapshotFormat("non-finite payload".into()))
    }
}

/// Pairwise (cascade) summation: deterministic order, O(log n) error
/// growth instead of the O(n) of a running sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
