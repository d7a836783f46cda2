use std::borrow::Borrow;

use log::warn;

use super::{fuse, EdgeMap, PerspectiveStack};
use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::sim::{Scan, Trajectory};

/// Maximum gap between a scan timestamp and its trajectory pose.
const TIME_TOLERANCE: f64 = 1e-6;

/// What happened while building a map.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct BuildReport {
    pub scans_used: usize,
    /// Timestamps of scans with no matching trajectory pose.
    pub rejected: Vec<f64>,
    pub returns_used: usize,
    pub returns_dropped: usize,
}

/// Streams world-frame scans into a perspective stack. Scans are checked
/// against the survey trajectory; those without a pose are rejected.
pub struct GlobalMapBuilder<'a> {
    stack: PerspectiveStack,
    trajectory: &'a Trajectory,
    report: BuildReport,
}

impl<'a> GlobalMapBuilder<'a> {
    pub fn new(geometry: GridGeometry, trajectory: &'a Trajectory) -> Self {
        Self {
            stack: PerspectiveStack::new(geometry),
            trajectory,
            report: BuildReport::default(),
        }
    }

    /// Returns false when the scan was rejected.
    pub fn add_scan(&mut self, scan: &Scan) -> bool {
        if self.trajectory.index_at(scan.timestamp, TIME_TOLERANCE).is_none() {
            warn!("scan at t={} has no trajectory pose; rejected", scan.timestamp);
            self.report.rejected.push(scan.timestamp);
            return false;
        }
        let dropped = self.stack.accumulate(scan);
        self.report.scans_used += 1;
        self.report.returns_dropped += dropped;
        self.report.returns_used += scan.returns.len() - dropped;
        true
    }

    pub fn stack(&self) -> &PerspectiveStack {
        &self.stack
    }

    pub fn finish(self) -> (EdgeMap, PerspectiveStack, BuildReport) {
        (fuse(&self.stack), self.stack, self.report)
    }
}

/// Accumulates every scan and fuses the result. Fails only if no scan could
/// be used.
pub fn build_global_map<S: Borrow<Scan>>(
    geometry: GridGeometry,
    trajectory: &Trajectory,
    scans: impl IntoIterator<Item = S>,
) -> Result<(EdgeMap, BuildReport)> {
    let mut b = GlobalMapBuilder::new(geometry, trajectory);
    for s in scans {
        b.add_scan(s.borrow());
    }
    let (map, _, report) = b.finish();
    if report.scans_used == 0 {
        return Err(Error::Input(format!(
            "no usable scans ({} rejected)",
            report.rejected.len()
        )));
    }
    Ok((map, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient, magnitude};
    use crate::sim::{
        generate_trajectory, generate_world, survey, LaserRig, RigConfig, TrajectoryConfig,
        TrajectoryKind, WorldConfig,
    };

    fn small_world() -> crate::sim::World {
        let cfg = WorldConfig {
            width_m: 30.0,
            height_m: 20.0,
            ..WorldConfig::default()
        };
        generate_world(&cfg, 3).unwrap()
    }

    fn straight(duration: f64) -> Trajectory {
        let mut cfg = TrajectoryConfig::new(TrajectoryKind::Straight);
        cfg.duration_s = duration;
        cfg.speed_mps = 2.0;
        cfg.start = crate::Pose2::new(5.0, 10.0, 0.0);
        generate_trajectory(&cfg, 1).unwrap()
    }

    #[test]
    fn identity_response_recovers_truth_edges() {
        let world = small_world();
        let traj = straight(4.0);
        let rig = LaserRig::from_config(
            &RigConfig {
                laser_count: 8,
                angle_exponent: 0.0,
                range_exponent: 0.0,
                ..RigConfig::default()
            },
            5,
        )
        .unwrap();
        let (map, report) =
            build_global_map(*world.geometry(), &traj, survey(&world, &traj, &rig, 9)).unwrap();
        assert_eq!(report.scans_used, traj.len());
        assert!(map.available_count() > 1000);
        let truth = magnitude(&gradient(&world.truth));
        for (n, v) in map.edge.iter_available() {
            let t = truth.get_index(n).unwrap();
            assert!((v - t).abs() < 1e-9, "cell {n}: {v} vs {t}");
        }
    }

    #[test]
    fn scans_without_pose_are_rejected() {
        let world = small_world();
        let traj = straight(1.0);
        let rig = LaserRig::from_config(
            &RigConfig {
                laser_count: 4,
                ..RigConfig::default()
            },
            5,
        )
        .unwrap();
        let mut scans: Vec<Scan> = survey(&world, &traj, &rig, 9).collect();
        scans[3].timestamp += 0.05;
        let (_, report) = build_global_map(*world.geometry(), &traj, &scans).unwrap();
        assert_eq!(report.rejected, vec![scans[3].timestamp]);
        assert_eq!(report.scans_used, scans.len() - 1);
    }

    #[test]
    fn half_coverage_leaves_rest_unavailable() {
        let world = small_world();
        let traj = straight(1.0);
        let rig = LaserRig::from_config(&RigConfig::default(), 5).unwrap();
        let (map, _) =
            build_global_map(*world.geometry(), &traj, survey(&world, &traj, &rig, 9)).unwrap();
        let g = map.geometry();
        for (n, _) in map.edge.iter_available() {
            let (i, _) = g.coords(n);
            // 12 m maximum ring plus 2 m of travel from x = 5
            assert!((i as f64) * g.cell_size < 5.0 + 2.0 + 12.5);
        }
    }

    #[test]
    fn all_rejected_is_an_error() {
        let world = small_world();
        let traj = straight(1.0);
        let scan = Scan {
            timestamp: 99.0,
            returns: vec![],
        };
        assert!(build_global_map(*world.geometry(), &traj, [scan]).is_err());
    }
}
