//! Synthetic ground world, multi-laser scanner and vehicle trajectories.

pub mod csv_io;
mod scanner;
mod trajectory;
mod world;

pub use scanner::{scan_once, BodyReturn, LaserModel, LaserRig, Polygon, Return, RigConfig, Scan};
pub use trajectory::{
    gaussian_perturbation, generate_trajectory, Trajectory, TrajectoryConfig, TrajectoryKind,
};
pub use world::{generate_world, Rect, Region, StripeLayout, World, WorldConfig};

/// Seed for the scan captured at step `k` of a run seeded with `seed`.
pub fn scan_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_add(0x632B_E59B_D9B4_E019)
}

/// Scans captured at every pose of `traj`.
pub fn survey<'a>(
    world: &'a World,
    traj: &'a Trajectory,
    rig: &'a LaserRig,
    seed: u64,
) -> impl Iterator<Item = Scan> + 'a {
    traj.times
        .iter()
        .zip(&traj.poses)
        .enumerate()
        .map(move |(k, (&t, p))| scan_once(world, p, t, rig, scan_seed(seed, k)))
}
