//! Builds the global edge map from an uncalibrated survey and compares it
//! with the edges of the true reflectivity.
//!
//!     cargo run --release --example build_edge_map -- [out_dir]

use std::path::PathBuf;

use gridloc::grid::{gradient, magnitude, write_pgm};
use gridloc::map::build_global_map;
use gridloc::sim::{generate_trajectory, generate_world, survey, LaserRig, RigConfig, TrajectoryConfig, TrajectoryKind, WorldConfig};
use gridloc::Pose2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("gridloc-map"), PathBuf::from);
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
    let mut lap = TrajectoryConfig::new(TrajectoryKind::Loop);
    lap.start = Pose2::new(30.0, 12.0, 0.0);
    lap.loop_radius_m = 18.0;
    lap.duration_s = 2.0 * std::f64::consts::PI * 18.0 / lap.speed_mps;
    lap.rate_hz = 5.0;
    let traj = generate_trajectory(&lap, 3)?;

    let (map, report) = build_global_map(*world.geometry(), &traj, survey(&world, &traj, &rig, 4))?;
    println!("{} scans fused, {} cells available", report.scans_used, map.available_count());

    // offsets cancel in the differences, gains only rescale them
    let truth = magnitude(&gradient(&world.truth));
    let (mut num, mut den) = (0.0, 0.0);
    for (n, v) in map.edge.iter_available() {
        let t = truth.get_index(n).unwrap_or(0.0);
        num += v * t;
        den += t * t;
    }
    println!("least-squares scale of map edges on true edges: {:.3}", num / den);

    map.save(out.join("edge.grd"))?;
    write_pgm(out.join("edge.pgm"), &map.edge)?;
    write_pgm(out.join("truth_edge.pgm"), &truth.masked_by(map.domain()))?;
    println!("wrote {}", out.display());
    Ok(())
}
