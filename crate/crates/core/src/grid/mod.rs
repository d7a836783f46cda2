//! Masked 2-D grids, discrete differential operators and rigid resampling.
//!
//! Cells are addressed by column `i ∈ [0, nx)` (world x) and row
//! `j ∈ [0, ny)` (world y). The vectorized index is column-major,
//! `n = i·ny + j`, so `n + ny` is the right neighbor and `n + 1` the upper
//! one. A cell is either available (finite value) or unavailable; every
//! reduction skips unavailable cells.

mod format;
mod ops;
mod resample;

pub use format::{decode_grd, encode_grd, encode_pgm, read_grd, write_grd, write_pgm, GRD_MAGIC};
pub use ops::{gradient, laplacian, magnitude};
pub use resample::{pivot_transform, pool_mean, resample, resample_rigid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cell edge length in meters.
pub const DEFAULT_CELL_SIZE: f64 = 0.10;

/// Shape and placement of a grid in the world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub cell_size: f64,
    /// World coordinates of the outer corner of cell (0, 0).
    pub origin_x: f64,
    pub origin_y: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, cell_size: f64, origin_x: f64, origin_y: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("grid must be at least 1x1, got {nx}x{ny}")));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Config(format!("cell size must be positive, got {cell_size}")));
        }
        if !(origin_x.is_finite() && origin_y.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(Self {
            nx,
            ny,
            cell_size,
            origin_x,
            origin_y,
        })
    }

    /// Grid of `width × height` meters with its corner at `origin`.
    pub fn covering(width: f64, height: f64, cell_size: f64, origin: (f64, f64)) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(Error::Config(format!("extent must be positive, got {width}x{height}")));
        }
        let nx = (width / cell_size).round().max(1.0) as usize;
        let ny = (height / cell_size).round().max(1.0) as usize;
        Self::new(nx, ny, cell_size, origin.0, origin.1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        i * self.ny + j
    }

    #[inline]
    pub fn coords(&self, n: usize) -> (usize, usize) {
        (n / self.ny, n % self.ny)
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.cell_size
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.cell_size
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.origin_x + 0.5 * self.width(),
            self.origin_y + 0.5 * self.height(),
        )
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin_x + (i as f64 + 0.5) * self.cell_size,
            self.origin_y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Cell containing a world point, if inside the grid.
    #[inline]
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.origin_x) / self.cell_size).floor();
        let fj = ((y - self.origin_y) / self.cell_size).floor();
        if fi >= 0.0 && fj >= 0.0 && fi < self.nx as f64 && fj < self.ny as f64 {
            Some((fi as usize, fj as usize))
        } else {
            None
        }
    }

    #[inline]
    pub fn index_of(&self, x: f64, y: f64) -> Option<usize> {
        self.cell_of(x, y).map(|(i, j)| self.index(i, j))
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.cell_of(x, y).is_some()
    }

    pub(crate) fn check_same(&self, other: &GridGeometry) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// A 2-D field where each cell holds a value or is unavailable.
#[derive(Debug, Clone)]
pub struct MaskedGrid {
    geometry: GridGeometry,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl MaskedGrid {
    /// All cells unavailable.
    pub fn unavailable(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            values: vec![0.0; geometry.len()],
            mask: vec![false; geometry.len()],
        }
    }

    /// All cells available and equal to `value`.
    pub fn filled(geometry: GridGeometry, value: f64) -> Self {
        Self {
            geometry,
            values: vec![value; geometry.len()],
            mask: vec![true; geometry.len()],
        }
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(usize, usize) -> Option<f64>) -> Self {
        let mut g = Self::unavailable(geometry);
        for i in 0..geometry.nx {
            for j in 0..geometry.ny {
                if let Some(v) = f(i, j) {
                    g.set(i, j, v);
                }
            }
        }
        g
    }

    /// Builds a grid from raw column-major buffers. Values under a cleared
    /// mask bit are kept but never read by any operation.
    pub fn from_parts(geometry: GridGeometry, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != geometry.len() || mask.len() != geometry.len() {
            return Err(Error::Input(format!(
                "buffer sizes {}/{} do not match {}x{} grid",
                values.len(),
                mask.len(),
                geometry.nx,
                geometry.ny
            )));
        }
        Ok(Self {
            geometry,
            values,
            mask,
        })
    }

    #[inline]
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.geometry.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.geometry.ny
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.get_index(self.geometry.index(i, j))
    }

    #[inline]
    pub fn get_index(&self, n: usize) -> Option<f64> {
        if self.mask[n] {
            Some(self.values[n])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_available(&self, n: usize) -> bool {
        self.mask[n]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let n = self.geometry.index(i, j);
        self.set_index(n, v);
    }

    #[inline]
    pub fn set_index(&mut self, n: usize, v: f64) {
        self.values[n] = v;
        self.mask[n] = true;
    }

    #[inline]
    pub fn clear_index(&mut self, n: usize) {
        self.mask[n] = false;
    }

    /// Raw value buffer; entries under a cleared mask are meaningless.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn available_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `(n, value)` for every available cell, in index order.
    pub fn iter_available(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .zip(&self.mask)
            .enumerate()
            .filter_map(|(n, (&v, &m))| m.then_some((n, v)))
    }

    pub fn available_values(&self) -> Vec<f64> {
        self.iter_available().map(|(_, v)| v).collect()
    }

    pub fn sum(&self) -> f64 {
        self.iter_available().map(|(_, v)| v).sum()
    }

    pub fn mean(&self) -> Option<f64> {
        let count = self.available_count();
        (count > 0).then(|| self.sum() / count as f64)
    }

    pub fn min_max(&self) -> Option<(f64, f64)> {
        self.iter_available().fold(None, |acc, (_, v)| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }

    /// Applies `f` to every available value.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> MaskedGrid {
        let mut out = MaskedGrid::unavailable(self.geometry);
        for (n, v) in self.iter_available() {
            out.set_index(n, f(v));
        }
        out
    }

    /// Cells available in `self` but cleared wherever `keep` is false.
    pub fn masked_by(&self, keep: &[bool]) -> MaskedGrid {
        let mut out = self.clone();
        for (m, &k) in out.mask.iter_mut().zip(keep) {
            *m &= k;
        }
        out
    }
}

/// Grids compare equal when geometry and masks match and every available
/// value is bitwise identical; values under cleared mask bits are ignored.
impl PartialEq for MaskedGrid {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.mask == other.mask
            && self
                .iter_available()
                .all(|(n, v)| v.to_bits() == other.values[n].to_bits())
    }
}

/// Two-channel forward-difference field.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub dx: MaskedGrid,
    pub dy: MaskedGrid,
}

impl GradientField {
    pub fn new(dx: MaskedGrid, dy: MaskedGrid) -> Result<Self> {
        dx.geometry().check_same(dy.geometry())?;
        Ok(Self { dx, dy })
    }

    pub fn unavailable(geometry: GridGeometry) -> Self {
        Self {
            dx: MaskedGrid::unavailable(geometry),
            dy: MaskedGrid::unavailable(geometry),
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.dx.geometry()
    }
}
