//! Per-laser perspective stacks, gradient fusion, and the global and local
//! edge maps built from them.

mod global;
mod local;
mod lut;
mod stack;

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::grid::{magnitude, pool_mean, read_grd, write_grd, GradientField, GridGeometry, MaskedGrid};

pub use global::{build_global_map, BuildReport, GlobalMapBuilder};
pub use local::{LocalMap, LocalMapConfig};
pub use lut::{build_lut_calibration, LutCalibration, LEVELS};
pub use stack::{fuse, CellStat, PerspectiveKey, PerspectiveStack};

/// Fused gradient field plus its magnitude. Both are available on the same
/// cells, the map's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub fused: GradientField,
    pub edge: MaskedGrid,
}

impl EdgeMap {
    /// Attaches the magnitude to a gradient field, restricting both
    /// components to the cells where each is available.
    pub fn from_fused(fused: GradientField) -> Self {
        let keep: Vec<bool> = fused
            .dx
            .mask()
            .iter()
            .zip(fused.dy.mask())
            .map(|(a, b)| *a && *b)
            .collect();
        let fused = GradientField {
            dx: fused.dx.masked_by(&keep),
            dy: fused.dy.masked_by(&keep),
        };
        let edge = magnitude(&fused);
        Self { fused, edge }
    }

    pub fn unavailable(geometry: GridGeometry) -> Self {
        Self {
            fused: GradientField::unavailable(geometry),
            edge: MaskedGrid::unavailable(geometry),
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.edge.geometry()
    }

    /// Coarser map for the first level of a registration pyramid: block
    /// means of both components and of the magnitude. The pooled edge is
    /// the mean magnitude, not the magnitude of the mean gradient, so edges
    /// of opposite sign inside one block do not cancel.
    pub fn pooled(&self, factor: usize) -> Result<Self> {
        Ok(Self {
            fused: GradientField {
                dx: pool_mean(&self.fused.dx, factor)?,
                dy: pool_mean(&self.fused.dy, factor)?,
            },
            edge: pool_mean(&self.edge, factor)?,
        })
    }

    /// Availability mask of the map.
    pub fn domain(&self) -> &[bool] {
        self.edge.mask()
    }

    pub fn available_count(&self) -> usize {
        self.edge.available_count()
    }

    /// Writes the edge magnitude to `path` and the two gradient components
    /// to `<stem>.dx.grd` and `<stem>.dy.grd` beside it.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let (dx, dy) = sidecars(path);
        write_grd(path, &self.edge)?;
        write_grd(dx, &self.fused.dx)?;
        write_grd(dy, &self.fused.dy)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (dx, dy) = sidecars(path);
        let fused = GradientField::new(read_grd(dx)?, read_grd(dy)?)?;
        let edge = read_grd(path)?;
        edge.geometry().check_same(fused.geometry())?;
        Ok(Self { fused, edge })
    }
}

fn sidecars(path: &Path) -> (PathBuf, PathBuf) {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    (
        path.with_file_name(format!("{stem}.dx.grd")),
        path.with_file_name(format!("{stem}.dy.grd")),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::gradient;

    #[test]
    fn edge_and_fused_share_a_domain() {
        let geom = GridGeometry::new(4, 3, 0.1, 0.0, 0.0).unwrap();
        let g = MaskedGrid::from_fn(geom, |i, j| Some((i * i + 2 * j) as f64));
        let e = EdgeMap::from_fused(gradient(&g));
        assert_eq!(e.fused.dx.mask(), e.domain());
        assert_eq!(e.fused.dy.mask(), e.domain());
        // last column and last row drop out
        assert_eq!(e.available_count(), 3 * 2);
        assert_eq!(e.edge.get(1, 0), Some((3.0f64).hypot(2.0)));
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let geom = GridGeometry::new(5, 4, 0.1, 1.0, -2.0).unwrap();
        let g = MaskedGrid::from_fn(geom, |i, j| (i != 2).then_some((i + 3 * j) as f64 * 0.5));
        let e = EdgeMap::from_fused(gradient(&g));
        let path = dir.path().join("global.grd");
        e.save(&path).unwrap();
        assert!(dir.path().join("global.dx.grd").exists());
        // values are stored as f32
        let f32ed = |g: &MaskedGrid| g.map(|v| v as f32 as f64);
        let back = EdgeMap::load(&path).unwrap();
        assert_eq!(back.fused, e.fused);
        assert_eq!(back.edge, f32ed(&e.edge));
    }
}
