use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kld::kld_vs_gaussian;
use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::map::{LutCalibration, PerspectiveKey, PerspectiveStack};
use crate::sim::{Region, Scan, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WhiteningConfig {
    pub min_samples: usize,
    pub min_perspectives: usize,
}

impl Default for WhiteningConfig {
    fn default() -> Self {
        Self {
            min_samples: 30,
            min_perspectives: 2,
        }
    }
}

/// Samples gathered at one cell. A return contributes to every column only
/// if its laser also saw both forward neighbors, so all columns are
/// evaluated on the same returns.
#[derive(Debug, Clone, Default)]
pub struct CellSamples {
    pub raw: Vec<f64>,
    pub calibrated: Vec<f64>,
    /// Per-return forward differences against the same laser's neighbor
    /// means, along x and along y.
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub lasers: BTreeSet<u16>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellRecord {
    pub cell: usize,
    pub region: Region,
    pub samples: usize,
    pub perspectives: usize,
    pub raw: f64,
    pub calibrated: Option<f64>,
    pub gradient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    /// `None` for the overall row.
    pub region: Option<Region>,
    pub cells: usize,
    pub raw: f64,
    pub calibrated: Option<f64>,
    pub gradient: f64,
}

impl RegionRow {
    pub fn label(&self) -> &'static str {
        self.region.map_or("overall", |r| r.name())
    }
}

/// Mean per-cell KLD (bits) by region for raw, LUT-calibrated and gradient
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningReport {
    pub rows: Vec<RegionRow>,
    /// Regions that had no qualifying cells.
    pub omitted: Vec<Region>,
    pub cells: Vec<CellRecord>,
}

/// Collects per-cell samples in two passes over `scans`: the first builds
/// per-laser cell means, the second pairs every return with those means at
/// its forward neighbors.
pub fn collect_cell_samples<S, I>(
    geometry: GridGeometry,
    scans: I,
    lut: Option<&LutCalibration>,
) -> HashMap<usize, CellSamples>
where
    S: Borrow<Scan>,
    I: IntoIterator<Item = S> + Clone,
{
    let mut stack = PerspectiveStack::new(geometry);
    for s in scans.clone() {
        stack.accumulate(s.borrow());
    }
    let mut cells: HashMap<usize, CellSamples> = HashMap::new();
    for s in scans {
        for r in &s.borrow().returns {
            let Some((i, j)) = geometry.cell_of(r.x, r.y) else {
                continue;
            };
            if i + 1 >= geometry.nx || j + 1 >= geometry.ny {
                continue;
            }
            let key = PerspectiveKey(r.laser);
            let right = stack.cell(key, geometry.index(i + 1, j));
            let up = stack.cell(key, geometry.index(i, j + 1));
            let (Some(right), Some(up)) = (right, up) else {
                continue;
            };
            let y = r.reflectivity;
            let c = cells.entry(geometry.index(i, j)).or_default();
            c.raw.push(y);
            if let Some(l) = lut {
                c.calibrated.push(l.apply(r.laser, y));
            }
            c.dx.push(right.mean() - y);
            c.dy.push(up.mean() - y);
            c.lasers.insert(r.laser);
        }
    }
    cells
}

/// Per-cell KLD report grouped by the world's region labels. Cells need
/// `min_samples` returns from at least `min_perspectives` lasers.
pub fn whitening_report<S, I>(
    world: &World,
    geometry: GridGeometry,
    scans: I,
    lut: Option<&LutCalibration>,
    cfg: &WhiteningConfig,
) -> Result<WhiteningReport>
where
    S: Borrow<Scan>,
    I: IntoIterator<Item = S> + Clone,
{
    if cfg.min_samples < 2 || cfg.min_perspectives < 2 {
        return Err(Error::Config("whitening needs min_samples ≥ 2 and min_perspectives ≥ 2".into()));
    }
    let cells = collect_cell_samples(geometry, scans, lut);
    let mut qualifying: Vec<(usize, CellSamples)> = cells
        .into_iter()
        .filter(|(_, c)| c.raw.len() >= cfg.min_samples && c.lasers.len() >= cfg.min_perspectives)
        .collect();
    qualifying.sort_unstable_by_key(|(n, _)| *n);
    let records = qualifying
        .par_iter()
        .map(|(n, c)| {
            let (i, j) = geometry.coords(*n);
            let (x, y) = geometry.cell_center(i, j);
            let calibrated = match lut {
                Some(_) => Some(kld_vs_gaussian(&c.calibrated)?.bits),
                None => None,
            };
            let gradient = 0.5 * (kld_vs_gaussian(&c.dx)?.bits + kld_vs_gaussian(&c.dy)?.bits);
            Ok(CellRecord {
                cell: *n,
                region: world.region_at(x, y),
                samples: c.raw.len(),
                perspectives: c.lasers.len(),
                raw: kld_vs_gaussian(&c.raw)?.bits,
                calibrated,
                gradient,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(records))
}

fn mean_row(region: Option<Region>, recs: &[&CellRecord]) -> RegionRow {
    let n = recs.len() as f64;
    let avg = |f: &dyn Fn(&CellRecord) -> f64| recs.iter().map(|r| f(r)).sum::<f64>() / n;
    let calibrated = recs
        .iter()
        .all(|r| r.calibrated.is_some())
        .then(|| avg(&|r| r.calibrated.unwrap_or(0.0)));
    RegionRow {
        region,
        cells: recs.len(),
        raw: avg(&|r| r.raw),
        calibrated,
        gradient: avg(&|r| r.gradient),
    }
}

/// Groups per-cell records into region rows plus an overall row.
pub fn summarize(cells: Vec<CellRecord>) -> WhiteningReport {
    let mut by_region: BTreeMap<Region, Vec<&CellRecord>> = BTreeMap::new();
    for c in &cells {
        by_region.entry(c.region).or_default().push(c);
    }
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for region in [Region::Markings, Region::Asphalt, Region::Other] {
        match by_region.get(&region) {
            Some(recs) => rows.push(mean_row(Some(region), recs)),
            None => omitted.push(region),
        }
    }
    if !cells.is_empty() {
        let all: Vec<&CellRecord> = cells.iter().collect();
        rows.push(mean_row(None, &all));
    }
    WhiteningReport { rows, omitted, cells }
}

impl WhiteningReport {
    pub fn overall(&self) -> Option<&RegionRow> {
        self.rows.iter().find(|r| r.region.is_none())
    }

    /// Share of evaluated cells whose gradient KLD is below their raw KLD.
    pub fn fraction_gradient_below_raw(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        self.cells.iter().filter(|c| c.gradient < c.raw).count() as f64 / self.cells.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["region", "cells", "raw", "calibrated", "gradient"])?;
        for r in &self.rows {
            w.write_record([
                r.label().to_string(),
                r.cells.to_string(),
                r.raw.to_string(),
                r.calibrated.map(|v| v.to_string()).unwrap_or_default(),
                r.gradient.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Input(format!("writing report: {e}")))?;
        Ok(())
    }

    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c)?;
        }
        w.flush().map_err(|e| Error::Input(format!("writing report: {e}")))?;
        Ok(())
    }
}

impl fmt::Display for WhiteningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_lut = self.rows.iter().any(|r| r.calibrated.is_some());
        let mut s = format!("{:<10}{:>8}{:>12}", "region", "cells", "raw");
        if with_lut {
            write!(s, "{:>12}", "calibrated")?;
        }
        writeln!(s, "{:>12}", "gradient")?;
        for r in &self.rows {
            write!(s, "{:<10}{:>8}{:>12.4}", r.label(), r.cells, r.raw)?;
            if with_lut {
                match r.calibrated {
                    Some(v) => write!(s, "{v:>12.4}")?,
                    None => write!(s, "{:>12}", "-")?,
                }
            }
            writeln!(s, "{:>12.4}", r.gradient)?;
        }
        for r in &self.omitted {
            writeln!(s, "{}: no qualifying cells", r.name())?;
        }
        f.write_str(s.trim_end())
    }
}
