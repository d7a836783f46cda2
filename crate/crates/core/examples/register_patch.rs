//! Registers a patch of a second survey against the global map and prints
//! the NMI surface peak and the fitted covariance.
//!
//!     cargo run --release --example register_patch

use gridloc::grid::{pivot_transform, resample_rigid, GradientField, GridGeometry};
use gridloc::map::{build_global_map, EdgeMap};
use gridloc::register::{coarse_to_fine, HistogramSpec, RegistrationPyramid, SearchSchedule};
use gridloc::sim::{generate_trajectory, generate_world, survey, LaserRig, RigConfig, TrajectoryConfig, TrajectoryKind, WorldConfig};
use gridloc::Pose2;

fn main() -> gridloc::Result<()> {
    let world = generate_world(&WorldConfig { width_m: 60.0, height_m: 60.0, ..WorldConfig::default() }, 1)?;
    let rig = LaserRig::from_config(
        &RigConfig {
            laser_count: 16,
            gain_range: (0.5, 1.5),
            offset_range: (-20.0, 20.0),
            noise_sigma: 3.0,
            ..RigConfig::default()
        },
        2,
    )?;
    let mut lap = TrajectoryConfig::new(TrajectoryKind::Loop);
    lap.start = Pose2::new(30.0, 12.0, 0.0);
    lap.loop_radius_m = 18.0;
    lap.duration_s = 2.0 * std::f64::consts::PI * 18.0 / lap.speed_mps;
    lap.rate_hz = 5.0;
    let traj = generate_trajectory(&lap, 3)?;
    let geom = *world.geometry();
    let (global, _) = build_global_map(geom, &traj, survey(&world, &traj, &rig, 4))?;
    let (second, _) = build_global_map(geom, &traj, survey(&world, &traj, &rig, 5))?;

    // the vehicle believes it is at `guess`; it really is 1.3 m and 2° off
    let guess = Pose2::new(30.0, 12.0, 0.0);
    let offset = Pose2::new(1.2, -0.6, 2f64.to_radians());
    let local_geom = GridGeometry::new(240, 240, 0.1, 18.0, 0.0)?;
    let t = pivot_transform((guess.x, guess.y), offset);
    let local = EdgeMap::from_fused(GradientField {
        dx: resample_rigid(&second.fused.dx, &t, local_geom),
        dy: resample_rigid(&second.fused.dy, &t, local_geom),
    });

    let schedule = SearchSchedule::default();
    let pyramid = RegistrationPyramid::new(&global, &HistogramSpec::default(), &schedule)?;
    let r = coarse_to_fine(&local, &pyramid, guess, [3.0, 3.0, 6f64.to_radians()], &schedule)?;
    println!("planted ({:+.2}, {:+.2}, {:+.2}°)", offset.x, offset.y, offset.h.to_degrees());
    println!(
        "found   ({:+.2}, {:+.2}, {:+.2}°) NMI {:.4} over {} cells{}",
        r.best_pose.x - guess.x,
        r.best_pose.y - guess.y,
        (r.best_pose.h - guess.h).to_degrees(),
        r.best_nmi,
        r.best_overlap,
        if r.flagged { " (boundary)" } else { "" }
    );
    let s = r.covariance.diagonal().map(f64::sqrt);
    println!("sigma   ({:.3} m, {:.3} m, {:.3}°)", s[0], s[1], s[2].to_degrees());
    Ok(())
}
