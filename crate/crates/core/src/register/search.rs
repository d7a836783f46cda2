use std::io::Write;

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_covariance, Binner, Binning, HistogramSpec};
use crate::error::{Error, Result};
use crate::grid::{pivot_transform, GridGeometry};
use crate::map::EdgeMap;
use crate::pose::{wrap_angle, Pose2};

const UNAVAILABLE: u8 = u8::MAX;
const RANGE_PERCENTILES: (f64, f64) = (0.01, 0.99);

/// A global edge map prepared for repeated registration: every cell's bin
/// index is computed once.
#[derive(Debug, Clone)]
pub struct RegistrationTarget {
    geometry: GridGeometry,
    bins: Vec<u8>,
    binner: Binner,
    spec: HistogramSpec,
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let k = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[k]
}

impl RegistrationTarget {
    pub fn new(global: &EdgeMap, spec: &HistogramSpec) -> Result<Self> {
        spec.validate()?;
        let mut values = global.edge.available_values();
        if values.is_empty() {
            return Err(Error::Input("global edge map has no available cells".into()));
        }
        let binner = match spec.binning {
            Binning::Quantile => Binner::quantile(&values, spec.bin_count),
            Binning::Shared => {
                let (lo, hi) = spec.value_range.unwrap_or_else(|| {
                    values.sort_by(f64::total_cmp);
                    (
                        percentile(&values, RANGE_PERCENTILES.0),
                        percentile(&values, RANGE_PERCENTILES.1),
                    )
                });
                Binner::uniform(lo, hi, spec.bin_count)
            }
        };
        let bins = (0..global.edge.geometry().len())
            .map(|n| {
                global
                    .edge
                    .get_index(n)
                    .map_or(UNAVAILABLE, |v| binner.bin(v) as u8)
            })
            .collect();
        Ok(Self {
            geometry: *global.geometry(),
            bins,
            binner,
            spec: *spec,
        })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn spec(&self) -> &HistogramSpec {
        &self.spec
    }

    /// Binning applied to global values.
    pub fn binner(&self) -> &Binner {
        &self.binner
    }

    /// Binning applied to a local map's values.
    pub fn local_binner(&self, local: &EdgeMap) -> Binner {
        match self.spec.binning {
            Binning::Shared => self.binner.clone(),
            Binning::Quantile => Binner::quantile(&local.edge.available_values(), self.spec.bin_count),
        }
    }
}

/// Lattice of candidate poses: offsets `k·step` for `|k·step| ≤ extent`
/// on each axis, around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchWindow {
    pub center: Pose2,
    /// Half extents in x (m), y (m) and heading (rad).
    pub half_extent: [f64; 3],
    pub step: [f64; 3],
    /// Pose the local map was rendered at. Usually equal to `center`.
    pub reference: Pose2,
}

impl SearchWindow {
    pub fn new(center: Pose2, half_extent: [f64; 3], step: [f64; 3]) -> Result<Self> {
        let w = Self {
            center,
            half_extent,
            step,
            reference: center,
        };
        w.validate()?;
        Ok(w)
    }

    /// Same lattice, for a local map rendered at `reference`.
    pub fn with_reference(mut self, reference: Pose2) -> Self {
        self.reference = reference;
        self
    }

    /// Finest level: 0.2 m over ±1 m and 0.5° over ±1.5°.
    pub fn fine(center: Pose2) -> Self {
        let s = SearchSchedule::default();
        Self {
            center,
            half_extent: s.fine_half_extent,
            step: s.fine_step,
            reference: center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.step.iter().all(|s| *s > 0.0 && s.is_finite())
            && self.half_extent.iter().all(|e| *e >= 0.0 && e.is_finite())
            && self.center.is_finite()
            && self.reference.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid search window {self:?}")))
        }
    }

    pub fn axis_offsets(&self, axis: usize) -> Vec<f64> {
        let n = (self.half_extent[axis] / self.step[axis] + 1e-9).floor() as i64;
        (-n..=n).map(|k| k as f64 * self.step[axis]).collect()
    }

    pub fn len(&self) -> usize {
        (0..3).map(|a| self.axis_offsets(a).len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One evaluated lattice pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub pose: Pose2,
    /// Offset from the window center, `[dx, dy, dh]`.
    pub offset: [f64; 3],
    /// `None` when the overlap was below the minimum.
    pub nmi: Option<f64>,
    pub overlap: usize,
}

/// NMI over the full lattice, heading index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct NmiSurface {
    pub center: Pose2,
    pub dims: [usize; 3],
    pub offsets: [Vec<f64>; 3],
    pub steps: [f64; 3],
    pub candidates: Vec<Candidate>,
}

impl NmiSurface {
    pub fn index(&self, k: [usize; 3]) -> usize {
        (k[0] * self.dims[1] + k[1]) * self.dims[2] + k[2]
    }

    pub fn lattice_index(&self, n: usize) -> [usize; 3] {
        let h = n % self.dims[2];
        let r = n / self.dims[2];
        [r / self.dims[1], r % self.dims[1], h]
    }

    /// True when the candidate sits at the end of an axis that has more than
    /// one value.
    pub fn on_boundary(&self, n: usize) -> bool {
        let k = self.lattice_index(n);
        (0..3).any(|a| self.dims[a] > 1 && (k[a] == 0 || k[a] == self.dims[a] - 1))
    }

    /// Index of the maximum. Ties go to the candidate nearest the center in
    /// lattice steps, then to the smallest `(x, y, h)` offset.
    pub fn best(&self) -> Option<usize> {
        let mid = self.dims.map(|d| (d as f64 - 1.0) / 2.0);
        let dist = |n: usize| -> f64 {
            let k = self.lattice_index(n);
            (0..3).map(|a| (k[a] as f64 - mid[a]).powi(2)).sum()
        };
        let mut best: Option<(usize, f64)> = None;
        for (n, c) in self.candidates.iter().enumerate() {
            let Some(v) = c.nmi else { continue };
            let better = match best {
                None => true,
                Some((b, bv)) => {
                    if v != bv {
                        v > bv
                    } else {
                        let (dn, db) = (dist(n), dist(b));
                        if dn != db {
                            dn < db
                        } else {
                            let (o, ob) = (c.offset, self.candidates[b].offset);
                            o.partial_cmp(&ob) == Some(std::cmp::Ordering::Less)
                        }
                    }
                }
            };
            if better {
                best = Some((n, v));
            }
        }
        best.map(|b| b.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationResult {
    pub best_pose: Pose2,
    pub best_nmi: f64,
    pub best_overlap: usize,
    pub surface: NmiSurface,
    /// Measurement covariance fitted to the surface.
    pub covariance: Matrix3<f64>,
    /// Set when the maximum lies on the window boundary.
    pub flagged: bool,
}

/// Local cells with their bin and pre-rotation position.
struct LocalCells {
    x: Vec<f64>,
    y: Vec<f64>,
    bin: Vec<u8>,
    bins: usize,
}

fn local_cells(local: &EdgeMap, binner: &Binner) -> LocalCells {
    let g = local.geometry();
    let mut out = LocalCells {
        x: Vec::new(),
        y: Vec::new(),
        bin: Vec::new(),
        bins: binner.bins(),
    };
    for (n, v) in local.edge.iter_available() {
        let (i, j) = g.coords(n);
        let (x, y) = g.cell_center(i, j);
        out.x.push(x);
        out.y.push(y);
        out.bin.push(binner.bin(v) as u8);
    }
    out
}

/// Global cell coordinates of every local cell after rotating by `dh`
/// about `pivot`, before any translation.
fn rotated_cells(cells: &LocalCells, target: &GridGeometry, pivot: &Pose2, dh: f64) -> (Vec<i32>, Vec<i32>) {
    let t = pivot_transform((pivot.x, pivot.y), Pose2::new(0.0, 0.0, dh));
    let c = target.cell_size;
    cells
        .x
        .iter()
        .zip(&cells.y)
        .map(|(&x, &y)| {
            let (qx, qy) = t.transform_point(x, y);
            (
                ((qx - target.origin_x) / c).floor() as i32,
                ((qy - target.origin_y) / c).floor() as i32,
            )
        })
        .unzip()
}

fn evaluate(
    cells: &LocalCells,
    gi: &[i32],
    gj: &[i32],
    shift: (i32, i32),
    target: &RegistrationTarget,
    joint: &mut Vec<u64>,
) -> (Option<f64>, usize) {
    let nb = target.binner.bins();
    let na = cells.bins;
    joint.clear();
    joint.resize(na * nb, 0);
    let (nx, ny) = (target.geometry.nx as u32, target.geometry.ny as u32);
    let bins = &target.bins;
    let mut overlap = 0usize;
    for k in 0..cells.bin.len() {
        let i = (gi[k] + shift.0) as u32;
        let j = (gj[k] + shift.1) as u32;
        if i < nx && j < ny {
            let b = bins[(i * ny + j) as usize];
            if b != UNAVAILABLE {
                joint[cells.bin[k] as usize * nb + b as usize] += 1;
                overlap += 1;
            }
        }
    }
    if overlap < target.spec.min_overlap.max(1) {
        return (None, overlap);
    }
    (Some(super::nmi_from_joint(joint, na, nb)), overlap)
}

/// Evaluates NMI between `local` and the target at every lattice pose.
///
/// With the local map rendered at `r = window.reference`, a candidate pose
/// `θ` maps a local point `p` to `θ ∘ r⁻¹ ∘ p`, that is
/// `R(θ_h − r_h)(p − r) + θ_xy`. Candidate positions are snapped so that
/// `θ_xy − r_xy` is a whole number of global cells.
pub fn search(local: &EdgeMap, target: &RegistrationTarget, window: &SearchWindow) -> Result<RegistrationResult> {
    window.validate()?;
    let cell = target.geometry.cell_size;
    if (local.geometry().cell_size - cell).abs() > 1e-12 {
        return Err(Error::GeometryMismatch(format!(
            "local cell size {} vs global {}",
            local.geometry().cell_size,
            cell
        )));
    }
    let binner = target.local_binner(local);
    let cells = local_cells(local, &binner);
    let snap = |d: f64| (d / cell).round();
    let pivot = window.reference;
    let rel = [
        window.center.x - pivot.x,
        window.center.y - pivot.y,
        wrap_angle(window.center.h - pivot.h),
    ];
    // offsets relative to the reference, translations in whole cells
    let total: [Vec<f64>; 3] = std::array::from_fn(|a| {
        window
            .axis_offsets(a)
            .into_iter()
            .map(|o| if a < 2 { snap(rel[a] + o) * cell } else { rel[a] + o })
            .collect()
    });
    let dims = [total[0].len(), total[1].len(), total[2].len()];
    let shifts: Vec<(i32, i32)> = total[0]
        .iter()
        .flat_map(|&dx| total[1].iter().map(move |&dy| (snap(dx) as i32, snap(dy) as i32)))
        .collect();

    let mut values = vec![(None, 0usize); dims[0] * dims[1] * dims[2]];
    for (ih, &dh) in total[2].iter().enumerate() {
        let (gi, gj) = rotated_cells(&cells, &target.geometry, &pivot, dh);
        let row: Vec<(Option<f64>, usize)> = shifts
            .par_iter()
            .map_init(Vec::new, |joint, &s| evaluate(&cells, &gi, &gj, s, target, joint))
            .collect();
        for (t, v) in row.into_iter().enumerate() {
            values[t * dims[2] + ih] = v;
        }
    }

    let mut candidates = Vec::with_capacity(values.len());
    for (ix, &dx) in total[0].iter().enumerate() {
        for (iy, &dy) in total[1].iter().enumerate() {
            for (ih, &dh) in total[2].iter().enumerate() {
                let (nmi, overlap) = values[(ix * dims[1] + iy) * dims[2] + ih];
                let pose = Pose2::new(pivot.x + dx, pivot.y + dy, wrap_angle(pivot.h + dh));
                candidates.push(Candidate {
                    pose,
                    offset: [dx - rel[0], dy - rel[1], dh - rel[2]],
                    nmi,
                    overlap,
                });
            }
        }
    }
    let offsets = std::array::from_fn(|a| total[a].iter().map(|o| o - rel[a]).collect());
    let surface = NmiSurface {
        center: window.center,
        dims,
        offsets,
        steps: window.step,
        candidates,
    };
    let Some(best) = surface.best() else {
        let overlap = surface.candidates.iter().map(|c| c.overlap).max().unwrap_or(0);
        return Err(Error::InsufficientOverlap {
            overlap,
            required: target.spec.min_overlap.max(1),
        });
    };
    let (covariance, flagged) = fit_covariance(&surface, best);
    let c = surface.candidates[best];
    Ok(RegistrationResult {
        best_pose: c.pose,
        best_nmi: c.nmi.unwrap_or(f64::NAN),
        best_overlap: c.overlap,
        covariance,
        flagged,
        surface,
    })
}

/// Prepares `global` and runs [`search`] once.
pub fn search_maps(
    local: &EdgeMap,
    global: &EdgeMap,
    window: &SearchWindow,
    spec: &HistogramSpec,
) -> Result<RegistrationResult> {
    search(local, &RegistrationTarget::new(global, spec)?, window)
}

/// Two-level search. The coarse level runs on maps block-averaged by
/// `coarse_pool`, so its translation step is one pooled cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSchedule {
    pub coarse_pool: usize,
    pub coarse_step: [f64; 3],
    pub fine_step: [f64; 3],
    pub fine_half_extent: [f64; 3],
    /// Times the fine window may be re-centred on a peak found on its
    /// boundary.
    pub fine_recenters: usize,
}

impl Default for SearchSchedule {
    fn default() -> Self {
        Self {
            coarse_pool: 6,
            coarse_step: [0.6, 0.6, 1.5f64.to_radians()],
            fine_step: [0.2, 0.2, 0.5f64.to_radians()],
            fine_half_extent: [1.0, 1.0, 1.5f64.to_radians()],
            fine_recenters: 2,
        }
    }
}

impl SearchSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &[f64; 3]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if self.coarse_pool == 0 || !positive(&self.coarse_step) || !positive(&self.fine_step) {
            return Err(Error::Config("search steps and pooling must be positive".into()));
        }
        if !self.fine_half_extent.iter().all(|x| *x >= 0.0 && x.is_finite()) {
            return Err(Error::Config("fine half extent must be non-negative".into()));
        }
        Ok(())
    }
}

/// Full-resolution and pooled targets for [`coarse_to_fine`].
#[derive(Debug, Clone)]
pub struct RegistrationPyramid {
    pub fine: RegistrationTarget,
    pub coarse: RegistrationTarget,
    pub pool: usize,
}

impl RegistrationPyramid {
    pub fn new(global: &EdgeMap, spec: &HistogramSpec, schedule: &SearchSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            fine: RegistrationTarget::new(global, spec)?,
            coarse: RegistrationTarget::new(&global.pooled(schedule.coarse_pool)?, spec)?,
            pool: schedule.coarse_pool,
        })
    }
}

/// Coarse search over `half_extent` around `center` on the pooled maps,
/// then a fine search around the coarse peak at full resolution. When the
/// requested window fits inside the fine window the coarse level is
/// skipped. A fine peak on the window boundary moves the window onto it, up
/// to `fine_recenters` times. `center` is also the pose the local map was
/// rendered at.
pub fn coarse_to_fine(
    local: &EdgeMap,
    pyramid: &RegistrationPyramid,
    center: Pose2,
    half_extent: [f64; 3],
    schedule: &SearchSchedule,
) -> Result<RegistrationResult> {
    let fits = (0..3).all(|a| half_extent[a] <= schedule.fine_half_extent[a] + 1e-9);
    let fine_center = if fits {
        center
    } else {
        let coarse = SearchWindow::new(center, half_extent, schedule.coarse_step)?;
        search(&local.pooled(pyramid.pool)?, &pyramid.coarse, &coarse)?.best_pose
    };
    let fine_search = |c: Pose2| {
        let w = SearchWindow::new(c, schedule.fine_half_extent, schedule.fine_step)?.with_reference(center);
        search(local, &pyramid.fine, &w)
    };
    let mut result = fine_search(fine_center)?;
    for _ in 0..schedule.fine_recenters {
        if !result.flagged {
            break;
        }
        let next = fine_search(result.best_pose)?;
        if next.best_nmi < result.best_nmi {
            break;
        }
        result = next;
    }
    Ok(result)
}

/// Writes `x,y,h,nmi,overlap` rows; `nmi` is empty for candidates without
/// enough overlap.
pub fn write_surface_csv<W: Write>(out: W, surface: &NmiSurface) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "h", "nmi", "overlap"])?;
    for c in &surface.candidates {
        w.write_record(&[
            c.pose.x.to_string(),
            c.pose.y.to_string(),
            c.pose.h.to_string(),
            c.nmi.map(|v| v.to_string()).unwrap_or_default(),
            c.overlap.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Input(format!("writing surface: {e}")))?;
    Ok(())
}
