use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridGeometry, MaskedGrid};

/// Axis-aligned rectangle in world meters, `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn intersection(&self, o: &Rect) -> Rect {
        Rect {
            x0: self.x0.max(o.x0),
            y0: self.y0.max(o.y0),
            x1: self.x1.min(o.x1),
            y1: self.y1.min(o.y1),
        }
    }

    fn grown(&self, m: f64) -> Rect {
        Rect {
            x0: self.x0 - m,
            y0: self.y0 - m,
            x1: self.x1 + m,
            y1: self.y1 + m,
        }
    }
}

/// Ground-truth region label used to group evaluation cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Markings,
    Asphalt,
    Other,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::Markings => "markings",
            Region::Asphalt => "asphalt",
            Region::Other => "other",
        }
    }
}

/// Painted lane lines and stop bars. All rectangle edges lie on cell
/// boundaries, so the painted cell count equals the painted area exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeLayout {
    /// Lines running along world x (solid or dashed), pairwise disjoint.
    pub longitudinal: Vec<Rect>,
    /// Bars running along world y, pairwise disjoint.
    pub transverse: Vec<Rect>,
}

impl StripeLayout {
    pub fn iter(&self) -> impl Iterator<Item = &Rect> {
        self.longitudinal.iter().chain(&self.transverse)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.iter().any(|r| r.contains(x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub width_m: f64,
    pub height_m: f64,
    pub cell_size: f64,
    pub origin: (f64, f64),
    pub asphalt_mean: f64,
    pub marking_mean: f64,
    /// Std-dev of the spatially correlated speckle.
    pub speckle_sigma: f64,
    /// Correlation length of the speckle lattice, meters.
    pub speckle_scale_m: f64,
    /// Per-cell uncorrelated grain std-dev.
    pub grain_sigma: f64,
    pub lane_spacing_m: f64,
    pub line_width_m: f64,
    pub dash_length_m: f64,
    pub dash_gap_m: f64,
    /// Probability that a lane line is solid rather than dashed.
    pub solid_fraction: f64,
    pub stop_bar_spacing_m: f64,
    pub stop_bar_width_m: f64,
    /// Repaired-asphalt patches per 100 m².
    pub patch_density: f64,
    pub patch_offset: f64,
    /// Reflectivity values are rounded to multiples of this quantum.
    pub quantum: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width_m: 80.0,
            height_m: 80.0,
            cell_size: crate::grid::DEFAULT_CELL_SIZE,
            origin: (0.0, 0.0),
            asphalt_mean: 25.0,
            marking_mean: 90.0,
            speckle_sigma: 4.0,
            speckle_scale_m: 0.6,
            grain_sigma: 1.5,
            lane_spacing_m: 3.5,
            line_width_m: 0.2,
            dash_length_m: 3.0,
            dash_gap_m: 6.0,
            solid_fraction: 0.35,
            stop_bar_spacing_m: 23.0,
            stop_bar_width_m: 0.4,
            patch_density: 1.0,
            patch_offset: 12.0,
            quantum: 1.0 / 256.0,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.width_m > 0.0 && self.height_m > 0.0) {
            return Err(Error::Config("world extent must be positive".into()));
        }
        if !(self.cell_size > 0.0) {
            return Err(Error::Config("world cell_size must be positive".into()));
        }
        if !(self.lane_spacing_m > 2.0 * self.line_width_m + 0.6) {
            return Err(Error::Config("lane_spacing_m too small for line width".into()));
        }
        if !(self.quantum > 0.0) {
            return Err(Error::Config("quantum must be positive".into()));
        }
        Ok(())
    }
}

/// Latent ground reflectivity with its painted layout.
#[derive(Debug, Clone)]
pub struct World {
    pub truth: MaskedGrid,
    pub layout: StripeLayout,
    pub patches: Vec<Rect>,
    pub seed: u64,
}

#[inline]
pub(crate) fn quantize(v: f64, quantum: f64) -> f64 {
    (v / quantum).round() * quantum
}

fn snap(v: f64, cell: f64) -> f64 {
    (v / cell).round() * cell
}

impl World {
    /// Region of the cell containing world point `(x, y)`. Cells within
    /// one cell of a stripe edge, or inside a patch, are `Other`.
    pub fn region_at(&self, x: f64, y: f64) -> Region {
        if self.layout.contains(x, y) {
            return Region::Markings;
        }
        let band = self.truth.geometry().cell_size * 1.01;
        if self.layout.iter().any(|r| r.grown(band).contains(x, y))
            || self.patches.iter().any(|r| r.contains(x, y))
        {
            Region::Other
        } else {
            Region::Asphalt
        }
    }

    pub fn region_of_cell(&self, n: usize) -> Region {
        let g = self.truth.geometry();
        let (i, j) = g.coords(n);
        let (x, y) = g.cell_center(i, j);
        self.region_at(x, y)
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.truth.geometry()
    }
}

/// Procedural road surface: asphalt with correlated speckle, repaired
/// patches, dashed and solid lane lines, and stop bars. Deterministic in
/// `seed`.
pub fn generate_world(cfg: &WorldConfig, seed: u64) -> Result<World> {
    cfg.validate()?;
    let geom = GridGeometry::covering(cfg.width_m, cfg.height_m, cfg.cell_size, cfg.origin)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = stripe_layout(cfg, &geom, &mut rng);
    let patches = patch_layout(cfg, &geom, &mut rng);

    // coarse speckle lattice, bilinearly interpolated
    let s = cfg.speckle_scale_m.max(cfg.cell_size);
    let lx = (geom.width() / s).ceil() as usize + 2;
    let ly = (geom.height() / s).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..lx * ly)
        .map(|_| cfg.speckle_sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let speckle = |x: f64, y: f64| {
        let u = (x - geom.origin_x) / s;
        let v = (y - geom.origin_y) / s;
        let (i, j) = (u.floor() as usize, v.floor() as usize);
        let (fu, fv) = (u - i as f64, v - j as f64);
        let at = |a: usize, b: usize| lattice[a * ly + b];
        (1.0 - fu) * (1.0 - fv) * at(i, j)
            + fu * (1.0 - fv) * at(i + 1, j)
            + (1.0 - fu) * fv * at(i, j + 1)
            + fu * fv * at(i + 1, j + 1)
    };

    let mut truth = MaskedGrid::unavailable(geom);
    for i in 0..geom.nx {
        for j in 0..geom.ny {
            let (x, y) = geom.cell_center(i, j);
            let grain = cfg.grain_sigma * rng.sample::<f64, _>(StandardNormal);
            let v = if layout.contains(x, y) {
                cfg.marking_mean + 0.5 * speckle(x, y) + grain
            } else {
                let patch = if patches.iter().any(|r| r.contains(x, y)) {
                    cfg.patch_offset
                } else {
                    0.0
                };
                cfg.asphalt_mean + patch + speckle(x, y) + grain
            };
            truth.set(i, j, quantize(v.clamp(0.0, 255.0), cfg.quantum));
        }
    }
    Ok(World {
        truth,
        layout,
        patches,
        seed,
    })
}

fn stripe_layout(cfg: &WorldConfig, geom: &GridGeometry, rng: &mut ChaCha8Rng) -> StripeLayout {
    let c = geom.cell_size;
    let (ox, oy) = (geom.origin_x, geom.origin_y);
    let (ex, ey) = (ox + geom.width(), oy + geom.height());
    let width = snap(cfg.line_width_m, c).max(c);
    let clip = |r: Rect| {
        let r = r.intersection(&Rect {
            x0: ox,
            y0: oy,
            x1: ex,
            y1: ey,
        });
        (r.area() > 0.0).then_some(r)
    };

    let mut longitudinal = Vec::new();
    let mut y = oy + rng.gen_range(0.3..1.0) * cfg.lane_spacing_m;
    while y + width < ey {
        let y0 = snap(y, c);
        let solid = rng.gen_bool(cfg.solid_fraction.clamp(0.0, 1.0));
        if solid {
            longitudinal.extend(clip(Rect {
                x0: ox,
                y0,
                x1: ex,
                y1: y0 + width,
            }));
        } else {
            let period = cfg.dash_length_m + cfg.dash_gap_m;
            let mut x = ox - rng.gen_range(0.0..period);
            while x < ex {
                longitudinal.extend(clip(Rect {
                    x0: snap(x, c),
                    y0,
                    x1: snap(x + cfg.dash_length_m, c),
                    y1: y0 + width,
                }));
                x += period;
            }
        }
        y += cfg.lane_spacing_m + rng.gen_range(-0.3..0.3);
    }

    let bar = snap(cfg.stop_bar_width_m, c).max(c);
    let mut transverse = Vec::new();
    let mut x = ox + rng.gen_range(0.2..1.0) * cfg.stop_bar_spacing_m;
    while x + bar < ex {
        let x0 = snap(x, c);
        let len = rng.gen_range(5.0..15.0);
        let y0 = snap(rng.gen_range(oy..ey), c);
        transverse.extend(clip(Rect {
            x0,
            y0,
            x1: x0 + bar,
            y1: snap(y0 + len, c),
        }));
        x += cfg.stop_bar_spacing_m * rng.gen_range(0.7..1.3);
    }
    StripeLayout {
        longitudinal,
        transverse,
    }
}

fn patch_layout(cfg: &WorldConfig, geom: &GridGeometry, rng: &mut ChaCha8Rng) -> Vec<Rect> {
    let c = geom.cell_size;
    let count = (cfg.patch_density * geom.width() * geom.height() / 100.0).round() as usize;
    (0..count)
        .map(|_| {
            let x0 = snap(rng.gen_range(geom.origin_x..geom.origin_x + geom.width()), c);
            let y0 = snap(rng.gen_range(geom.origin_y..geom.origin_y + geom.height()), c);
            Rect {
                x0,
                y0,
                x1: x0 + snap(rng.gen_range(0.8..3.5), c),
                y1: y0 + snap(rng.gen_range(0.8..3.5), c),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WorldConfig {
        WorldConfig {
            width_m: 30.0,
            height_m: 20.0,
            ..WorldConfig::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_world(&small(), 11).unwrap();
        let b = generate_world(&small(), 11).unwrap();
        let c = generate_world(&small(), 12).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.layout, b.layout);
        assert_ne!(a.truth, c.truth);
    }

    #[test]
    fn values_in_range_and_quantized() {
        let w = generate_world(&small(), 3).unwrap();
        assert_eq!(w.truth.available_count(), w.geometry().len());
        for (_, v) in w.truth.iter_available() {
            assert!((0.0..=255.0).contains(&v));
            assert_eq!(v * 256.0, (v * 256.0).round());
        }
    }

    #[test]
    fn asphalt_mean_near_25() {
        let w = generate_world(&WorldConfig::default(), 5).unwrap();
        let (mut sum, mut count) = (0.0, 0usize);
        for (n, v) in w.truth.iter_available() {
            if w.region_of_cell(n) == Region::Asphalt {
                sum += v;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - 25.0).abs() <= 5.0, "asphalt mean {mean}");
    }

    #[test]
    fn stripe_cell_fraction_matches_layout_area() {
        let cfg = WorldConfig::default();
        let w = generate_world(&cfg, 9).unwrap();
        // union area: longitudinal lines are disjoint, bars are disjoint,
        // so only line/bar pairs overlap
        let mut area: f64 = w.layout.iter().map(Rect::area).sum();
        for a in &w.layout.longitudinal {
            for b in &w.layout.transverse {
                area -= a.intersection(b).area();
            }
        }
        let analytic = area / (w.geometry().width() * w.geometry().height());
        let g = w.geometry();
        let painted = (0..g.len())
            .filter(|&n| w.region_of_cell(n) == Region::Markings)
            .count() as f64
            / g.len() as f64;
        assert!(analytic > 0.01);
        assert!(
            (painted - analytic).abs() <= 0.01 * analytic,
            "painted {painted} vs analytic {analytic}"
        );
    }
}
