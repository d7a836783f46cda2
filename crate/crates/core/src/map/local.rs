use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{fuse, EdgeMap, PerspectiveStack};
use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::pose::Pose2;
use crate::sim::BodyReturn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalMapConfig {
    /// Side length of the square local grid, meters.
    pub extent_m: f64,
    pub cell_size: f64,
    /// Number of most recent scans kept.
    pub window: usize,
}

impl Default for LocalMapConfig {
    fn default() -> Self {
        Self {
            extent_m: 40.0,
            cell_size: 0.10,
            window: 8,
        }
    }
}

impl LocalMapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.extent_m >= self.cell_size && self.window >= 1) {
            return Err(Error::Config(format!("invalid local map config {self:?}")));
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        (self.extent_m / self.cell_size).round() as usize
    }
}

/// Rolling map of the last few scans around the vehicle.
///
/// Each scan is kept in the body frame together with the dead-reckoned pose
/// it was captured at. On every update the window is re-rendered at the
/// current estimate: scan `k` lands at `estimate ∘ odo_now⁻¹ ∘ odo_k`, so
/// relative motion between scans comes from odometry alone.
#[derive(Debug, Clone)]
pub struct LocalMap {
    cfg: LocalMapConfig,
    scans: VecDeque<(Pose2, Vec<BodyReturn>)>,
    geometry: Option<GridGeometry>,
}

impl LocalMap {
    pub fn new(cfg: LocalMapConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            scans: VecDeque::with_capacity(cfg.window + 1),
            geometry: None,
        })
    }

    pub fn config(&self) -> &LocalMapConfig {
        &self.cfg
    }

    /// Scans currently in the window.
    pub fn len(&self) -> usize {
        self.scans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scans.is_empty()
    }

    pub fn geometry(&self) -> Option<&GridGeometry> {
        self.geometry.as_ref()
    }

    pub fn clear(&mut self) {
        self.scans.clear();
        self.geometry = None;
    }

    /// Adds a scan captured at dead-reckoned pose `odometry`, evicts the
    /// oldest beyond the window, and renders the map at `estimate`.
    pub fn update(&mut self, returns: Vec<BodyReturn>, odometry: Pose2, estimate: &Pose2) -> EdgeMap {
        self.scans.push_back((odometry, returns));
        while self.scans.len() > self.cfg.window {
            self.scans.pop_front();
        }
        self.recenter(estimate);
        self.render(estimate)
    }

    /// Moves the grid, in whole cells, when `estimate` has left the central
    /// cell.
    fn recenter(&mut self, estimate: &Pose2) {
        let c = self.cfg.cell_size;
        if let Some(g) = &self.geometry {
            let (cx, cy) = g.center();
            if (estimate.x - cx).abs() <= c && (estimate.y - cy).abs() <= c {
                return;
            }
        }
        let n = self.cfg.cells();
        let half = n as f64 * c / 2.0;
        let ox = ((estimate.x - half) / c).round() * c;
        let oy = ((estimate.y - half) / c).round() * c;
        self.geometry = GridGeometry::new(n, n, c, ox, oy).ok();
    }

    /// Re-renders the current window at `estimate` without inserting a scan.
    pub fn render(&self, estimate: &Pose2) -> EdgeMap {
        let Some(geom) = self.geometry else {
            let n = self.cfg.cells();
            return EdgeMap::unavailable(
                GridGeometry::new(n, n, self.cfg.cell_size, 0.0, 0.0).expect("validated config"),
            );
        };
        let Some((now, _)) = self.scans.back() else {
            return EdgeMap::unavailable(geom);
        };
        let to_world = estimate.compose(&now.inverse());
        let mut stack = PerspectiveStack::new(geom);
        for (odo, returns) in &self.scans {
            stack.accumulate_body(returns, &to_world.compose(odo));
        }
        fuse(&stack)
    }
}
