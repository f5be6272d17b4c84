//! Uniform centered grids over `[-L, L)^d`.

use crate::error::{Error, Result};

/// Smallest admissible number of points per axis.
pub const MIN_POINTS: usize = 16;

/// A uniform grid with `n` points per axis covering `[-L, L)^d`.
///
/// Flat indices are row-major with axis 0 slowest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    d: usize,
    n: usize,
    half_extent: f64,
}

impl GridSpec {
    pub fn new(d: usize, n: usize, half_extent: f64) -> Result<Self> {
        if !(d == 2 || d == 3) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {d}"
            )));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {n}"
            )));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        Ok(Self { d, n, half_extent })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-extent `L`.
    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    /// Spacing `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// Total number of points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The grid enlarged by a factor 2 per axis with the same spacing.
    pub fn padded(&self) -> GridSpec {
        GridSpec {
            d: self.d,
            n: 2 * self.n,
            half_extent: 2.0 * self.half_extent,
        }
    }

    /// Coordinate of index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }

    /// Multi-index of a flat index.
    #[inline]
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        match self.d {
            2 => [flat / n, flat % n, 0],
            _ => [flat / (n * n), (flat / n) % n, flat % n],
        }
    }

    #[inline]
    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        match self.d {
            2 => idx[0] * n + idx[1],
            _ => (idx[0] * n + idx[1]) * n + idx[2],
        }
    }

    /// Cartesian position of a flat index (unused trailing entries are 0).
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = self.coord(idx[a]);
        }
        x
    }

    #[inline]
    pub fn radius(&self, flat: usize) -> f64 {
        let x = self.point(flat);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Flat index of the origin.
    pub fn origin(&self) -> usize {
        let c = self.n / 2;
        self.ravel([c, c, if self.d == 3 { c } else { 0 }])
    }

    /// Signed integer wavenumber of FFT index `k`.
    #[inline]
    pub fn signed_mode(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Fundamental angular frequency `pi / L`.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_extent
    }

    /// Frequency vector of a flat spectral index; the Nyquist component is
    /// reported with its (negative) aliased value.
    #[inline]
    pub fn frequency(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut xi = [0.0; 3];
        for a in 0..self.d {
            xi[a] = self.dxi() * self.signed_mode(idx[a]) as f64;
        }
        xi
    }

    /// Frequency used for odd derivatives: the Nyquist component is zeroed
    /// so that derivatives of real fields stay real.
    #[inline]
    pub fn derivative_frequency(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut xi = [0.0; 3];
        for a in 0..self.d {
            if idx[a] != self.n / 2 {
                xi[a] = self.dxi() * self.signed_mode(idx[a]) as f64;
            }
        }
        xi
    }

    /// Index in the padded grid of base index `i` (same physical position).
    #[inline]
    pub fn to_padded_index(&self, flat: usize) -> usize {
        let idx = self.unravel(flat);
        let off = self.n / 2;
        let p = self.padded();
        let mut j = [0; 3];
        for a in 0..self.d {
            j[a] = idx[a] + off;
        }
        p.ravel(j)
    }
}
