#![allow(dead_code)]

use std::f64::consts::PI;

use gridloc::grid::{resample_rigid, pivot_transform, GradientField, GridGeometry};
use gridloc::map::{build_global_map, EdgeMap};
use gridloc::sim::{
    generate_trajectory, generate_world, survey, LaserRig, RigConfig, Trajectory, TrajectoryConfig, TrajectoryKind,
    World, WorldConfig,
};
use gridloc::Pose2;

pub const WORLD_SEED: u64 = 3;
pub const RIG_SEED: u64 = 4;

/// 100 m square world driven by a 30 m loop starting at (50, 20).
pub fn world() -> World {
    let cfg = WorldConfig {
        width_m: 100.0,
        height_m: 100.0,
        ..WorldConfig::default()
    };
    generate_world(&cfg, WORLD_SEED).unwrap()
}

/// Uncalibrated rig: gains U[0.5, 1.5], offsets U[−20, 20], σ = 3.
pub fn rig(lasers: usize) -> LaserRig {
    let cfg = RigConfig {
        laser_count: lasers,
        gain_range: (0.5, 1.5),
        offset_range: (-20.0, 20.0),
        noise_sigma: 3.0,
        ..RigConfig::default()
    };
    LaserRig::from_config(&cfg, RIG_SEED).unwrap()
}

pub fn loop_start() -> Pose2 {
    Pose2::new(50.0, 20.0, 0.0)
}

/// One lap of the 30 m loop at 5 m/s and 5 Hz.
pub fn survey_loop() -> Trajectory {
    let mut c = TrajectoryConfig::new(TrajectoryKind::Loop);
    c.start = loop_start();
    c.duration_s = 2.0 * PI * 30.0 / 5.0;
    c.rate_hz = 5.0;
    generate_trajectory(&c, 1).unwrap()
}

/// Point on the survey loop at angle `a` (0 is the start), facing along it.
pub fn on_loop(a: f64) -> Pose2 {
    let s = loop_start();
    Pose2::new(s.x + 30.0 * a.sin(), s.y + 30.0 - 30.0 * a.cos(), a)
}

pub struct Scene {
    pub world: World,
    pub rig: LaserRig,
    pub survey: Trajectory,
    /// Map from the survey scans.
    pub global: EdgeMap,
    /// Same survey, independent scan noise.
    pub second: EdgeMap,
}

pub fn scene() -> Scene {
    let world = world();
    let rig = rig(32);
    let lap = survey_loop();
    let geom = *world.geometry();
    let (global, _) = build_global_map(geom, &lap, survey(&world, &lap, &rig, 2)).unwrap();
    let (second, _) = build_global_map(geom, &lap, survey(&world, &lap, &rig, 5)).unwrap();
    Scene {
        world,
        rig,
        survey: lap,
        global,
        second,
    }
}

/// `size × size` local map cut from `src` as seen from `center` while the
/// vehicle really sits at `center` moved by `truth_offset`. The grid is
/// snapped to the source lattice.
pub fn local_from(src: &EdgeMap, center: Pose2, truth_offset: Pose2, size: usize) -> EdgeMap {
    let c = src.geometry().cell_size;
    let half = size as f64 * c / 2.0;
    let snap = |v: f64| ((v - half) / c).round() * c;
    let geom = GridGeometry::new(size, size, c, snap(center.x), snap(center.y)).unwrap();
    let t = pivot_transform((center.x, center.y), truth_offset);
    let dx = resample_rigid(&src.fused.dx, &t, geom);
    let dy = resample_rigid(&src.fused.dy, &t, geom);
    EdgeMap::from_fused(GradientField { dx, dy })
}
