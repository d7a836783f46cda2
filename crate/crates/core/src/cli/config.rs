use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::denoise::DenoiseConfig;
use crate::error::{Error, Result};
use crate::eval::WhiteningConfig;
use crate::filter::FilterConfig;
use crate::grid::GridGeometry;
use crate::sim::{RigConfig, TrajectoryConfig, WorldConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    /// Insert the sparse gradient denoising stage after fusion.
    pub denoise: bool,
    pub fista: DenoiseConfig,
}

/// Everything a pipeline run depends on. `seed`, `output_dir` and
/// `trajectory.kind` are required; the rest default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// World seed when it should differ from `seed`, e.g. to drive a second
    /// run through the world a map was surveyed in.
    #[serde(default)]
    pub world_seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub rig: RigConfig,
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub map: MapConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub whitening: WhiteningConfig,
}

/// Independent streams derived from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Rig = 1,
    Trajectory = 2,
    Scans = 3,
    Gps = 4,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Writes the effective configuration into the output directory.
    pub fn echo(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join("config.json");
        fs::write(&path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.trajectory.validate()?;
        self.filter.validate()?;
        if self.map.denoise {
            self.map.fista.validate()?;
        }
        if self.rig.laser_count == 0 {
            return Err(Error::Config("rig.laser_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn world_seed(&self) -> u64 {
        self.world_seed.unwrap_or(self.seed)
    }

    pub fn stream(&self, s: SeedStream) -> u64 {
        // splitmix64 finalizer over (seed, stream)
        let mut z = self.seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Geometry of the world grid, which the global map shares.
    pub fn map_geometry(&self) -> Result<GridGeometry> {
        GridGeometry::covering(self.world.width_m, self.world.height_m, self.world.cell_size, self.world.origin)
    }
}
