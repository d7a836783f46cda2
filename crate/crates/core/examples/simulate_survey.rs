//! Generates a world, drives a loop through it and writes the truth grid,
//! trajectory and scans.
//!
//!     cargo run --example simulate_survey -- [out_dir]

use std::path::PathBuf;

use gridloc::grid::{write_grd, write_pgm};
use gridloc::sim::csv_io::{save_scans, save_trajectory};
use gridloc::sim::{generate_trajectory, generate_world, survey, LaserRig, RigConfig, Scan, TrajectoryConfig, TrajectoryKind, WorldConfig};
use gridloc::Pose2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("gridloc-simulate"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

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
    let mut drive = TrajectoryConfig::new(TrajectoryKind::Loop);
    drive.start = Pose2::new(30.0, 12.0, 0.0);
    drive.loop_radius_m = 18.0;
    drive.duration_s = 20.0;
    drive.rate_hz = 5.0;
    let traj = generate_trajectory(&drive, 3)?;
    let scans: Vec<Scan> = survey(&world, &traj, &rig, 4).collect();

    let returns: usize = scans.iter().map(|s| s.returns.len()).sum();
    println!("{} poses, {} returns ({} per scan)", traj.len(), returns, returns / scans.len());
    for l in rig.lasers.iter().take(4) {
        println!("laser {:2}: ring {:5.2} m, gain {:.3}, offset {:+.2}", l.laser_id, l.ground_distance(), l.gain, l.offset);
    }

    write_grd(out.join("world.grd"), &world.truth)?;
    write_pgm(out.join("world.pgm"), &world.truth)?;
    save_trajectory(out.join("trajectory.csv"), &traj)?;
    save_scans(out.join("scans.csv"), &scans)?;
    println!("wrote {}", out.display());
    Ok(())
}
