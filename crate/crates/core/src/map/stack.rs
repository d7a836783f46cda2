use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::EdgeMap;
use crate::error::{Error, Result};
use crate::grid::{read_grd, write_grd, GradientField, GridGeometry, MaskedGrid};
use crate::sim::{BodyReturn, Return, Scan};

/// Identifies one observation channel. With a non-canted rig the incidence
/// angle and range are fixed per laser, so the laser index alone suffices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PerspectiveKey(pub u16);

impl PerspectiveKey {
    pub fn laser(self) -> u16 {
        self.0
    }
}

/// Running sum and hit count of one cell under one perspective.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CellStat {
    pub sum: f64,
    pub count: u32,
}

impl CellStat {
    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}

/// Forward difference `b - a` of two cell means, formed from sums and counts
/// so that a constant added to every sample cancels exactly.
#[inline]
fn difference(a: &CellStat, b: &CellStat) -> f64 {
    let (ma, mb) = (a.count as f64, b.count as f64);
    (b.sum * ma - a.sum * mb) / (ma * mb)
}

/// Sparse per-perspective accumulators over a shared grid.
#[derive(Debug, Clone)]
pub struct PerspectiveStack {
    geometry: GridGeometry,
    layers: BTreeMap<PerspectiveKey, HashMap<usize, CellStat>>,
    dropped: usize,
}

impl PerspectiveStack {
    pub fn new(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            layers: BTreeMap::new(),
            dropped: 0,
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Number of perspectives with at least one hit.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn perspectives(&self) -> impl Iterator<Item = PerspectiveKey> + '_ {
        self.layers.keys().copied()
    }

    /// Returns that fell outside the grid so far.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn cell(&self, key: PerspectiveKey, n: usize) -> Option<CellStat> {
        self.layers.get(&key)?.get(&n).copied()
    }

    /// Adds one sample at world point `(x, y)`. Returns false, and counts a
    /// drop, when the point is off the grid.
    pub fn add(&mut self, key: PerspectiveKey, x: f64, y: f64, value: f64) -> bool {
        match self.geometry.index_of(x, y) {
            Some(n) => {
                self.add_to_cell(key, n, value);
                true
            }
            None => {
                self.dropped += 1;
                false
            }
        }
    }

    pub fn add_to_cell(&mut self, key: PerspectiveKey, n: usize, value: f64) {
        let c = self.layers.entry(key).or_default().entry(n).or_default();
        c.sum += value;
        c.count += 1;
    }

    /// Accumulates every return of a world-frame scan. Returns the number of
    /// returns dropped as out of bounds.
    pub fn accumulate(&mut self, scan: &Scan) -> usize {
        self.accumulate_returns(&scan.returns)
    }

    pub fn accumulate_returns(&mut self, returns: &[Return]) -> usize {
        let before = self.dropped;
        for r in returns {
            self.add(PerspectiveKey(r.laser), r.x, r.y, r.reflectivity);
        }
        self.dropped - before
    }

    /// Accumulates body-frame returns placed in the world by `pose`.
    pub fn accumulate_body(&mut self, returns: &[BodyReturn], pose: &crate::pose::Pose2) -> usize {
        let before = self.dropped;
        for r in returns {
            let (x, y) = pose.transform_point(r.x, r.y);
            self.add(PerspectiveKey(r.laser), x, y, r.reflectivity);
        }
        self.dropped - before
    }

    /// Folds another stack over the same grid into this one.
    pub fn merge(&mut self, other: PerspectiveStack) -> Result<()> {
        self.geometry.check_same(&other.geometry)?;
        self.dropped += other.dropped;
        for (key, layer) in other.layers {
            let mine = self.layers.entry(key).or_default();
            for (n, c) in layer {
                let m = mine.entry(n).or_default();
                m.sum += c.sum;
                m.count += c.count;
            }
        }
        Ok(())
    }

    fn layer_grid(&self, key: PerspectiveKey, f: impl Fn(&CellStat) -> f64) -> MaskedGrid {
        let mut g = MaskedGrid::unavailable(self.geometry);
        if let Some(layer) = self.layers.get(&key) {
            for (&n, c) in layer {
                g.set_index(n, f(c));
            }
        }
        g
    }

    /// Per-cell mean reflectivity seen through `key`; unavailable where the
    /// perspective has no hits.
    pub fn mean_grid(&self, key: PerspectiveKey) -> MaskedGrid {
        self.layer_grid(key, CellStat::mean)
    }

    pub fn sum_grid(&self, key: PerspectiveKey) -> MaskedGrid {
        self.layer_grid(key, |c| c.sum)
    }

    pub fn count_grid(&self, key: PerspectiveKey) -> MaskedGrid {
        self.layer_grid(key, |c| c.count as f64)
    }

    /// Forward-difference gradient of one perspective's mean grid.
    pub fn gradient(&self, key: PerspectiveKey) -> GradientField {
        let mut out = GradientField::unavailable(self.geometry);
        if let Some(layer) = self.layers.get(&key) {
            self.visit_differences(layer, |n, dx, dy| {
                if let Some(v) = dx {
                    out.dx.set_index(n, v);
                }
                if let Some(v) = dy {
                    out.dy.set_index(n, v);
                }
            });
        }
        out
    }

    fn visit_differences(
        &self,
        layer: &HashMap<usize, CellStat>,
        mut f: impl FnMut(usize, Option<f64>, Option<f64>),
    ) {
        let (nx, ny) = (self.geometry.nx, self.geometry.ny);
        for (&n, c) in layer {
            let (i, j) = self.geometry.coords(n);
            let dx = (i + 1 < nx)
                .then(|| layer.get(&(n + ny)))
                .flatten()
                .map(|r| difference(c, r));
            let dy = (j + 1 < ny)
                .then(|| layer.get(&(n + 1)))
                .flatten()
                .map(|u| difference(c, u));
            f(n, dx, dy);
        }
    }

    /// Writes `dir/phi_<b>/{sum,count}.grd` for every perspective.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for key in self.perspectives() {
            let sub = dir.join(format!("phi_{}", key.0));
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            write_grd(sub.join("sum.grd"), &self.sum_grid(key))?;
            write_grd(sub.join("count.grd"), &self.count_grid(key))?;
        }
        Ok(())
    }

    /// Reads a stack written by [`PerspectiveStack::save`]. Sums are stored
    /// as 32-bit floats, so very long accumulations come back rounded.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut stack: Option<PerspectiveStack> = None;
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(b) = name.strip_prefix("phi_").and_then(|s| s.parse::<u16>().ok()) else {
                continue;
            };
            let sum = read_grd(entry.path().join("sum.grd"))?;
            let count = read_grd(entry.path().join("count.grd"))?;
            sum.geometry().check_same(count.geometry())?;
            let st = stack.get_or_insert_with(|| PerspectiveStack::new(*sum.geometry()));
            st.geometry.check_same(sum.geometry())?;
            let layer = st.layers.entry(PerspectiveKey(b)).or_default();
            for (n, m) in count.iter_available() {
                let s = sum.get_index(n).unwrap_or(0.0);
                if m >= 1.0 {
                    layer.insert(
                        n,
                        CellStat {
                            sum: s,
                            count: m as u32,
                        },
                    );
                }
            }
        }
        stack.ok_or_else(|| Error::Input(format!("no phi_<b> directories in {}", dir.display())))
    }
}

/// Averages the per-perspective gradients cell by cell over the
/// perspectives whose gradient is available there, then attaches the
/// magnitude. Each perspective is differenced before averaging.
pub fn fuse(stack: &PerspectiveStack) -> EdgeMap {
    let geom = stack.geometry;
    let len = geom.len();
    let mut sx = vec![0.0; len];
    let mut sy = vec![0.0; len];
    let mut cx = vec![0u32; len];
    let mut cy = vec![0u32; len];
    for layer in stack.layers.values() {
        stack.visit_differences(layer, |n, dx, dy| {
            if let Some(v) = dx {
                sx[n] += v;
                cx[n] += 1;
            }
            if let Some(v) = dy {
                sy[n] += v;
                cy[n] += 1;
            }
        });
    }
    let mut fused = GradientField::unavailable(geom);
    for n in 0..len {
        if cx[n] > 0 && cy[n] > 0 {
            fused.dx.set_index(n, sx[n] / cx[n] as f64);
            fused.dy.set_index(n, sy[n] / cy[n] as f64);
        }
    }
    EdgeMap::from_fused(fused)
}

impl PerspectiveStack {
    pub fn fuse(&self) -> EdgeMap {
        fuse(self)
    }
}
