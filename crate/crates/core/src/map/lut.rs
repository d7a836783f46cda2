use std::borrow::Borrow;
use std::collections::BTreeMap;

use log::warn;

use crate::grid::{GridGeometry, MaskedGrid};
use crate::sim::Scan;

/// Number of intensity levels in a lookup table row.
pub const LEVELS: usize = 256;

/// Per-laser intensity lookup tables: the conventional calibration that the
/// edge representation is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct LutCalibration {
    tables: BTreeMap<u16, Vec<f64>>,
}

fn level(y: f64) -> usize {
    y.round().clamp(0.0, (LEVELS - 1) as f64) as usize
}

impl LutCalibration {
    pub fn identity(lasers: impl IntoIterator<Item = u16>) -> Self {
        let row: Vec<f64> = (0..LEVELS).map(|v| v as f64).collect();
        Self {
            tables: lasers.into_iter().map(|b| (b, row.clone())).collect(),
        }
    }

    pub fn table(&self, laser: u16) -> Option<&[f64]> {
        self.tables.get(&laser).map(Vec::as_slice)
    }

    pub fn lasers(&self) -> impl Iterator<Item = u16> + '_ {
        self.tables.keys().copied()
    }

    /// Calibrated value of intensity `y` from `laser`, interpolating
    /// linearly between table levels. Unknown lasers pass through.
    pub fn apply(&self, laser: u16, y: f64) -> f64 {
        let Some(t) = self.tables.get(&laser) else {
            return y;
        };
        let y = y.clamp(0.0, (LEVELS - 1) as f64);
        let lo = y.floor() as usize;
        let hi = (lo + 1).min(LEVELS - 1);
        let f = y - lo as f64;
        t[lo] + f * (t[hi] - t[lo])
    }

    /// Cell-wise mean of calibrated returns.
    pub fn calibrated_grid<S: Borrow<Scan>>(
        &self,
        geometry: GridGeometry,
        scans: impl IntoIterator<Item = S>,
    ) -> MaskedGrid {
        let mut sum = vec![0.0; geometry.len()];
        let mut count = vec![0u32; geometry.len()];
        for s in scans {
            for r in &s.borrow().returns {
                if let Some(n) = geometry.index_of(r.x, r.y) {
                    sum[n] += self.apply(r.laser, r.reflectivity);
                    count[n] += 1;
                }
            }
        }
        MaskedGrid::from_fn(geometry, |i, j| {
            let n = geometry.index(i, j);
            (count[n] > 0).then(|| sum[n] / count[n] as f64)
        })
    }
}

/// Fills unobserved levels by linear interpolation between the nearest
/// observed ones and holds the end values constant beyond them. Returns
/// `None` when nothing was observed.
fn fill_row(sums: &[f64], counts: &[u64]) -> Option<Vec<f64>> {
    let observed: Vec<usize> = (0..LEVELS).filter(|&v| counts[v] > 0).collect();
    let first = *observed.first()?;
    let last = *observed.last()?;
    let at = |v: usize| sums[v] / counts[v] as f64;
    let mut row = vec![0.0; LEVELS];
    row[..=first].fill(at(first));
    row[last..].fill(at(last));
    for w in observed.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ya, yb) = (at(a), at(b));
        for (v, r) in row.iter_mut().enumerate().take(b + 1).skip(a) {
            *r = ya + (yb - ya) * (v - a) as f64 / (b - a) as f64;
        }
    }
    Some(row)
}

/// Builds a lookup table per laser: entry `v` of laser `b` is the average,
/// over all returns of `b` at level `v`, of the pooled mean of the cell the
/// return fell in. Takes two passes over `scans`.
pub fn build_lut_calibration<I, S>(
    geometry: GridGeometry,
    scans: I,
    lasers: impl IntoIterator<Item = u16>,
) -> LutCalibration
where
    I: IntoIterator<Item = S> + Clone,
    S: Borrow<Scan>,
{
    let mut sum = vec![0.0; geometry.len()];
    let mut count = vec![0u32; geometry.len()];
    for s in scans.clone() {
        for r in &s.borrow().returns {
            if let Some(n) = geometry.index_of(r.x, r.y) {
                sum[n] += r.reflectivity;
                count[n] += 1;
            }
        }
    }
    let mut acc: BTreeMap<u16, (Vec<f64>, Vec<u64>)> = lasers
        .into_iter()
        .map(|b| (b, (vec![0.0; LEVELS], vec![0; LEVELS])))
        .collect();
    for s in scans {
        for r in &s.borrow().returns {
            if let Some(n) = geometry.index_of(r.x, r.y) {
                let (rs, rc) = acc
                    .entry(r.laser)
                    .or_insert_with(|| (vec![0.0; LEVELS], vec![0; LEVELS]));
                let v = level(r.reflectivity);
                rs[v] += sum[n] / count[n] as f64;
                rc[v] += 1;
            }
        }
    }
    let tables = acc
        .into_iter()
        .map(|(b, (rs, rc))| {
            let row = fill_row(&rs, &rc).unwrap_or_else(|| {
                warn!("laser {b} has no returns; using identity table");
                (0..LEVELS).map(|v| v as f64).collect()
            });
            (b, row)
        })
        .collect();
    LutCalibration { tables }
}
