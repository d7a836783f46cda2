//! Per-cell KLD of raw, LUT-calibrated and gradient samples against their
//! moment-matched Gaussians, grouped by region.
//!
//!     cargo run --release --example whitening

use std::collections::BTreeSet;

use gridloc::eval::{whitening_report, WhiteningConfig};
use gridloc::map::build_lut_calibration;
use gridloc::sim::{generate_trajectory, generate_world, survey, LaserRig, RigConfig, Scan, TrajectoryConfig, TrajectoryKind, WorldConfig};
use gridloc::Pose2;

fn main() -> gridloc::Result<()> {
    let world = generate_world(&WorldConfig { width_m: 40.0, height_m: 40.0, ..WorldConfig::default() }, 21)?;
    let rig = LaserRig::from_config(
        &RigConfig {
            laser_count: 8,
            gain_range: (0.5, 1.5),
            offset_range: (-20.0, 20.0),
            noise_sigma: 3.0,
            ..RigConfig::default()
        },
        22,
    )?;
    let mut c = TrajectoryConfig::new(TrajectoryKind::Loop);
    c.start = Pose2::new(20.0, 12.0, 0.0);
    c.loop_radius_m = 8.0;
    c.speed_mps = 3.0;
    c.duration_s = 60.0;
    c.rate_hz = 5.0;
    let traj = generate_trajectory(&c, 23)?;
    let scans: Vec<Scan> = survey(&world, &traj, &rig, 24).collect();
    let lasers: BTreeSet<u16> = rig.lasers.iter().map(|l| l.laser_id).collect();
    let lut = build_lut_calibration(*world.geometry(), &scans, lasers);

    let report = whitening_report(&world, *world.geometry(), &scans, Some(&lut), &WhiteningConfig::default())?;
    println!("{report}");
    println!("gradient below raw in {:.1}% of cells", 100.0 * report.fraction_gradient_below_raw());
    Ok(())
}
