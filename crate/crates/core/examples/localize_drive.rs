//! Localizes a stop-and-go drive against a surveyed map and compares the
//! result with dead reckoning.
//!
//!     cargo run --release --example localize_drive -- [seconds]

use gridloc::eval::rmse_report;
use gridloc::filter::{run_localization, FilterConfig, PoseBelief};
use gridloc::map::build_global_map;
use gridloc::sim::{
    gaussian_perturbation, generate_trajectory, generate_world, survey, LaserRig, RigConfig, TrajectoryConfig,
    TrajectoryKind, WorldConfig,
};
use gridloc::Pose2;

fn main() -> gridloc::Result<()> {
    let seconds: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    let world = generate_world(&WorldConfig { width_m: 100.0, height_m: 100.0, ..WorldConfig::default() }, 3)?;
    let rig = LaserRig::from_config(
        &RigConfig {
            laser_count: 32,
            gain_range: (0.5, 1.5),
            offset_range: (-20.0, 20.0),
            noise_sigma: 3.0,
            ..RigConfig::default()
        },
        4,
    )?;
    let start = Pose2::new(50.0, 20.0, 0.0);
    let mut lap = TrajectoryConfig::new(TrajectoryKind::Loop);
    lap.start = start;
    lap.duration_s = 2.0 * std::f64::consts::PI * lap.loop_radius_m / lap.speed_mps;
    lap.rate_hz = 5.0;
    let lap = generate_trajectory(&lap, 1)?;
    let (global, _) = build_global_map(*world.geometry(), &lap, survey(&world, &lap, &rig, 2))?;

    let mut drive = TrajectoryConfig::new(TrajectoryKind::StopAndGo);
    drive.start = start;
    drive.duration_s = seconds;
    drive.rate_hz = 5.0;
    let drive = generate_trajectory(&drive, 7)?;

    let cfg = FilterConfig::default();
    let fix = gaussian_perturbation(&drive.poses[0], (1.0, 1.0, 2f64.to_radians()), 9);
    let initial = PoseBelief::from_sigmas(fix, cfg.init_sigma);
    let closed = run_localization(&global, &drive, survey(&world, &drive, &rig, 8), initial, cfg)?;
    let open_cfg = FilterConfig { disable_registration: true, ..cfg };
    let open = run_localization(&global, &drive, survey(&world, &drive, &rig, 8), initial, open_cfg)?;

    println!("registered\n{}\n", rmse_report(&closed)?);
    println!("dead reckoning\n{}", rmse_report(&open)?);
    Ok(())
}
