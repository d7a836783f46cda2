use std::io::{Read, Write};

use log::{debug, warn};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::ekf::{mahalanobis2, predict, update, PoseBelief, Rejection};
use crate::error::{Error, Result};
use crate::map::{EdgeMap, LocalMap, LocalMapConfig};
use crate::pose::{wrap_angle, Pose2};
use crate::register::{coarse_to_fine, HistogramSpec, RegistrationPyramid, SearchSchedule};
use crate::sim::{BodyReturn, Scan, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Per-step odometry noise standard deviations in the body frame:
    /// forward (m), lateral (m), heading (rad).
    pub process_sigma: [f64; 3],
    /// Initial belief standard deviations.
    pub init_sigma: [f64; 3],
    /// Error of the simulated GPS fix that seeds the initial mean.
    pub gps_sigma: [f64; 3],
    /// Innovations beyond this many standard deviations are rejected.
    pub gate_sigma: f64,
    /// Clamp of the search half extents: `[x, y, heading]`.
    pub min_half_extent: [f64; 3],
    pub max_half_extent: [f64; 3],
    pub local_map: LocalMapConfig,
    pub schedule: SearchSchedule,
    pub histogram: HistogramSpec,
    /// Scans the local map must hold before registration starts; earlier
    /// steps coast. Capped at the local map window.
    pub min_local_scans: usize,
    /// Scale applied to the covariance fitted from the NMI surface.
    pub measurement_inflation: f64,
    /// Run on odometry alone.
    pub disable_registration: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            process_sigma: [0.02, 0.02, 0.2f64.to_radians()],
            init_sigma: [5f64.sqrt(), 5f64.sqrt(), 10f64.to_radians()],
            gps_sigma: [1.0, 1.0, 2f64.to_radians()],
            gate_sigma: 4.0,
            min_half_extent: [1.0, 1.0, 1.5f64.to_radians()],
            max_half_extent: [4.0, 4.0, 10f64.to_radians()],
            local_map: LocalMapConfig::default(),
            schedule: SearchSchedule::default(),
            histogram: HistogramSpec::default(),
            min_local_scans: 8,
            measurement_inflation: 1.0,
            disable_registration: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: &[f64; 3]| v.iter().all(|x| *x >= 0.0 && x.is_finite());
        if !(nonneg(&self.process_sigma) && nonneg(&self.init_sigma) && nonneg(&self.gps_sigma)) {
            return Err(Error::Config("filter sigmas must be finite and non-negative".into()));
        }
        if !(self.measurement_inflation > 0.0 && self.measurement_inflation.is_finite()) {
            return Err(Error::Config("measurement_inflation must be positive".into()));
        }
        if !(self.gate_sigma > 0.0) {
            return Err(Error::Config("gate_sigma must be positive".into()));
        }
        if (0..3).any(|a| !(self.min_half_extent[a] >= 0.0 && self.min_half_extent[a] <= self.max_half_extent[a])) {
            return Err(Error::Config("search clamp needs 0 ≤ min ≤ max".into()));
        }
        self.local_map.validate()?;
        self.schedule.validate()?;
        self.histogram.validate()
    }

    /// Process noise for one step taken at heading `h`: the body-frame
    /// diagonal rotated into the world frame.
    pub fn process_noise(&self, h: f64) -> Matrix3<f64> {
        let (s, c) = h.sin_cos();
        let rot = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let q = Matrix3::from_diagonal(&Vector3::from(self.process_sigma.map(|v| v * v)));
        rot * q * rot.transpose()
    }
}

/// What the measurement stage did on a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Updated,
    /// Registration disabled.
    OpenLoop,
    /// Too little overlap anywhere in the window.
    NoMeasurement,
    Rejected(Rejection),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub predicted: PoseBelief,
    pub belief: PoseBelief,
    pub measurement: Option<Pose2>,
    pub nmi: Option<f64>,
    pub overlap: usize,
    pub flagged: bool,
    pub outcome: StepOutcome,
}

impl StepReport {
    pub fn coasted(&self) -> bool {
        self.outcome != StepOutcome::Updated
    }
}

/// The online loop: predict from odometry, render the local map at the
/// prediction, register it against the global map inside a 3σ window and
/// update.
pub struct Localizer {
    cfg: FilterConfig,
    pyramid: RegistrationPyramid,
    local: LocalMap,
    belief: PoseBelief,
    /// Dead-reckoned pose, the frame local-map scans are stored in.
    odometry_pose: Pose2,
}

impl Localizer {
    pub fn new(global: &EdgeMap, initial: PoseBelief, cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        let pyramid = RegistrationPyramid::new(global, &cfg.histogram, &cfg.schedule)?;
        Ok(Self {
            local: LocalMap::new(cfg.local_map)?,
            pyramid,
            belief: initial,
            odometry_pose: Pose2::identity(),
            cfg,
        })
    }

    pub fn belief(&self) -> &PoseBelief {
        &self.belief
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    /// Search half extents for a predicted belief: 3σ per axis, clamped.
    pub fn window_half_extent(&self, predicted: &PoseBelief) -> [f64; 3] {
        let s = predicted.sigmas();
        [0, 1, 2].map(|a| (3.0 * s[a]).clamp(self.cfg.min_half_extent[a], self.cfg.max_half_extent[a]))
    }

    /// Advances one scan. `returns` are in the body frame; `odometry` is the
    /// body-frame increment since the previous step.
    pub fn step(&mut self, returns: Vec<BodyReturn>, odometry: &Pose2) -> Result<StepReport> {
        let q = self.cfg.process_noise(self.belief.mean.h);
        let predicted = predict(&self.belief, odometry, &q);
        self.odometry_pose = self.odometry_pose.compose(odometry);
        let mut report = StepReport {
            predicted,
            belief: predicted,
            measurement: None,
            nmi: None,
            overlap: 0,
            flagged: false,
            outcome: StepOutcome::OpenLoop,
        };
        if self.cfg.disable_registration {
            self.belief = predicted;
            return Ok(report);
        }
        let local = self.local.update(returns, self.odometry_pose, &predicted.mean);
        if self.local.len() < self.cfg.min_local_scans.min(self.cfg.local_map.window) {
            report.outcome = StepOutcome::NoMeasurement;
            self.belief = predicted;
            return Ok(report);
        }
        let half = self.window_half_extent(&predicted);
        let reg = match coarse_to_fine(&local, &self.pyramid, predicted.mean, half, &self.cfg.schedule) {
            Ok(r) => r,
            Err(Error::InsufficientOverlap { overlap, .. }) => {
                debug!("no measurement (best overlap {overlap}); coasting");
                report.overlap = overlap;
                report.outcome = StepOutcome::NoMeasurement;
                self.belief = predicted;
                return Ok(report);
            }
            Err(e) => return Err(e),
        };
        report.measurement = Some(reg.best_pose);
        report.nmi = Some(reg.best_nmi);
        report.overlap = reg.best_overlap;
        report.flagged = reg.flagged;
        let gate = self.cfg.gate_sigma * self.cfg.gate_sigma;
        let r = reg.covariance * self.cfg.measurement_inflation;
        let d2 = mahalanobis2(&predicted, &reg.best_pose, &r);
        let result = match d2 {
            Some(d2) if d2 > gate => Err(Rejection::Gated { mahalanobis2: d2 }),
            Some(_) => update(&predicted, &reg.best_pose, &r),
            None => Err(Rejection::Singular),
        };
        match result {
            Ok(b) => {
                report.belief = b;
                report.outcome = StepOutcome::Updated;
            }
            Err(why) => {
                warn!("measurement rejected: {why:?}");
                report.outcome = StepOutcome::Rejected(why);
            }
        }
        self.belief = report.belief;
        Ok(report)
    }
}

/// One row of the per-step diagnostics file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub truth_x: f64,
    pub truth_y: f64,
    pub truth_h: f64,
    pub est_x: f64,
    pub est_y: f64,
    pub est_h: f64,
    pub err_lon: f64,
    pub err_lat: f64,
    pub err_h: f64,
    pub nmi: Option<f64>,
    pub overlap: usize,
    pub coasted_flag: u8,
}

impl DiagnosticRow {
    /// Errors are resolved along and across the true heading.
    pub fn new(t: f64, truth: &Pose2, est: &Pose2, report: &StepReport) -> Self {
        let (ex, ey) = (est.x - truth.x, est.y - truth.y);
        let (s, c) = truth.h.sin_cos();
        Self {
            t,
            truth_x: truth.x,
            truth_y: truth.y,
            truth_h: truth.h,
            est_x: est.x,
            est_y: est.y,
            est_h: est.h,
            err_lon: c * ex + s * ey,
            err_lat: -s * ex + c * ey,
            err_h: wrap_angle(est.h - truth.h),
            nmi: report.nmi,
            overlap: report.overlap,
            coasted_flag: report.coasted() as u8,
        }
    }
}

pub fn write_diagnostics<W: Write>(out: W, rows: &[DiagnosticRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Input(format!("writing diagnostics: {e}")))?;
    Ok(())
}

pub fn read_diagnostics<R: Read>(input: R) -> Result<Vec<DiagnosticRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Runs the localizer over a recorded drive. Scan `k` must carry the
/// timestamp of trajectory pose `k`; scans are converted to the body frame
/// with the true pose, and odometry comes from the trajectory.
pub fn run_localization(
    global: &EdgeMap,
    truth: &Trajectory,
    scans: impl IntoIterator<Item = Scan>,
    initial: PoseBelief,
    cfg: FilterConfig,
) -> Result<Vec<DiagnosticRow>> {
    let mut loc = Localizer::new(global, initial, cfg)?;
    let mut rows = Vec::with_capacity(truth.len());
    for (k, scan) in scans.into_iter().enumerate() {
        let Some(pose) = truth.poses.get(k) else {
            return Err(Error::Input(format!("more scans than trajectory poses ({})", truth.len())));
        };
        if (truth.times[k] - scan.timestamp).abs() > 1e-6 {
            return Err(Error::Input(format!(
                "scan {k} at t={} does not match trajectory time {}",
                scan.timestamp, truth.times[k]
            )));
        }
        let body = scan.to_body(pose);
        let report = loc.step(body, &truth.odometry[k])?;
        rows.push(DiagnosticRow::new(scan.timestamp, pose, &report.belief.mean, &report));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{gradient, GridGeometry, MaskedGrid};

    fn empty_global() -> EdgeMap {
        let geom = GridGeometry::new(20, 20, 0.1, 0.0, 0.0).unwrap();
        let g = MaskedGrid::from_fn(geom, |i, j| Some(((i * 3 + j * 5) % 7) as f64));
        EdgeMap::from_fused(gradient(&g))
    }

    #[test]
    fn open_loop_tracks_noise_free_odometry() {
        let cfg = FilterConfig {
            disable_registration: true,
            ..FilterConfig::default()
        };
        let start = Pose2::new(1.0, 1.0, 0.2);
        let mut loc = Localizer::new(&empty_global(), PoseBelief::from_sigmas(start, [0.1; 3]), cfg).unwrap();
        let mut truth = start;
        let mut trace = loc.belief().cov.trace();
        for k in 0..50 {
            let odo = Pose2::new(0.5, 0.0, 0.01 * (k % 5) as f64);
            truth = truth.compose(&odo);
            let r = loc.step(Vec::new(), &odo).unwrap();
            assert!(r.coasted());
            assert!(r.belief.cov.trace() > trace);
            trace = r.belief.cov.trace();
        }
        let m = loc.belief().mean;
        assert!((m.x - truth.x).abs() < 1e-9 && (m.y - truth.y).abs() < 1e-9 && (m.h - truth.h).abs() < 1e-12);
    }

    #[test]
    fn empty_scans_coast() {
        let mut loc = Localizer::new(
            &empty_global(),
            PoseBelief::from_sigmas(Pose2::new(1.0, 1.0, 0.0), [0.1; 3]),
            FilterConfig::default(),
        )
        .unwrap();
        let r = loc.step(Vec::new(), &Pose2::identity()).unwrap();
        assert_eq!(r.outcome, StepOutcome::NoMeasurement);
        assert_eq!(r.belief, r.predicted);
    }

    #[test]
    fn process_noise_follows_heading() {
        let cfg = FilterConfig {
            process_sigma: [1.0, 0.0, 0.0],
            ..FilterConfig::default()
        };
        let q = cfg.process_noise(std::f64::consts::FRAC_PI_2);
        assert!(q[(0, 0)].abs() < 1e-12 && (q[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_is_clamped() {
        let loc = Localizer::new(
            &empty_global(),
            PoseBelief::from_sigmas(Pose2::identity(), [0.0; 3]),
            FilterConfig::default(),
        )
        .unwrap();
        let tight = loc.window_half_extent(&PoseBelief::from_sigmas(Pose2::identity(), [0.01, 0.5, 0.0]));
        assert_eq!(tight[0], 1.0);
        assert!((tight[1] - 1.5).abs() < 1e-12);
        assert!((tight[2] - 1.5f64.to_radians()).abs() < 1e-12);
        let wide = loc.window_half_extent(&PoseBelief::from_sigmas(Pose2::identity(), [10.0, 10.0, 1.0]));
        assert_eq!(wide[0], 4.0);
        assert!((wide[2] - 10f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_resolve_errors_along_heading() {
        let truth = Pose2::new(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let est = Pose2::new(0.03, 0.1, std::f64::consts::FRAC_PI_2 + 0.01);
        let b = PoseBelief::from_sigmas(est, [0.0; 3]);
        let rep = StepReport {
            predicted: b,
            belief: b,
            measurement: None,
            nmi: Some(1.5),
            overlap: 10,
            flagged: false,
            outcome: StepOutcome::Updated,
        };
        let row = DiagnosticRow::new(0.5, &truth, &est, &rep);
        assert!((row.err_lon - 0.1).abs() < 1e-12);
        assert!((row.err_lat + 0.03).abs() < 1e-12);
        assert!((row.err_h - 0.01).abs() < 1e-12);
        let mut buf = Vec::new();
        write_diagnostics(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "t,truth_x,truth_y,truth_h,est_x,est_y,est_h,err_lon,err_lat,err_h,nmi,overlap,coasted_flag\n"
        ));
        assert_eq!(read_diagnostics(&buf[..]).unwrap(), vec![row]);
    }
}
