use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{wrap_angle, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Straight,
    Curvy,
    Loop,
    StopAndGo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub kind: TrajectoryKind,
    #[serde(default = "defaults::duration")]
    pub duration_s: f64,
    #[serde(default = "defaults::speed")]
    pub speed_mps: f64,
    #[serde(default = "defaults::rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub start: Pose2,
    #[serde(default = "defaults::radius")]
    pub loop_radius_m: f64,
    #[serde(default = "defaults::amplitude")]
    pub curvy_amplitude_m: f64,
    #[serde(default = "defaults::wavelength")]
    pub curvy_wavelength_m: f64,
    #[serde(default = "defaults::go")]
    pub go_duration_s: f64,
    #[serde(default = "defaults::stop")]
    pub stop_duration_s: f64,
    #[serde(default = "defaults::accel")]
    pub acceleration_mps2: f64,
    /// Per-step odometry noise std-dev `(x m, y m, heading rad)`.
    #[serde(default = "defaults::odometry_noise")]
    pub odometry_noise: (f64, f64, f64),
}

mod defaults {
    pub fn duration() -> f64 {
        60.0
    }
    pub fn speed() -> f64 {
        5.0
    }
    pub fn rate() -> f64 {
        10.0
    }
    pub fn radius() -> f64 {
        30.0
    }
    pub fn amplitude() -> f64 {
        4.0
    }
    pub fn wavelength() -> f64 {
        60.0
    }
    pub fn go() -> f64 {
        12.0
    }
    pub fn stop() -> f64 {
        4.0
    }
    pub fn accel() -> f64 {
        1.5
    }
    pub fn odometry_noise() -> (f64, f64, f64) {
        (0.02, 0.02, 0.2f64.to_radians())
    }
}

impl TrajectoryConfig {
    pub fn new(kind: TrajectoryKind) -> Self {
        Self {
            kind,
            duration_s: defaults::duration(),
            speed_mps: defaults::speed(),
            rate_hz: defaults::rate(),
            start: Pose2::default(),
            loop_radius_m: defaults::radius(),
            curvy_amplitude_m: defaults::amplitude(),
            curvy_wavelength_m: defaults::wavelength(),
            go_duration_s: defaults::go(),
            stop_duration_s: defaults::stop(),
            acceleration_mps2: defaults::accel(),
            odometry_noise: defaults::odometry_noise(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny, nh) = self.odometry_noise;
        if !(self.duration_s > 0.0 && self.speed_mps > 0.0 && self.rate_hz > 0.0) {
            return Err(Error::Config("trajectory duration, speed and rate must be positive".into()));
        }
        if !(self.loop_radius_m > 0.0 && self.curvy_wavelength_m > 0.0 && self.acceleration_mps2 > 0.0) {
            return Err(Error::Config("trajectory shape parameters must be positive".into()));
        }
        if !(nx >= 0.0 && ny >= 0.0 && nh >= 0.0) {
            return Err(Error::Config("odometry noise must be non-negative".into()));
        }
        Ok(())
    }
}

/// Time-stamped ground-truth poses and the noisy body-frame odometry
/// between consecutive poses (`odometry[0]` is the identity).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub poses: Vec<Pose2>,
    pub odometry: Vec<Pose2>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Index of the pose stamped `t`, within `tol` seconds.
    pub fn index_at(&self, t: f64, tol: f64) -> Option<usize> {
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.times.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    /// Dead-reckoned poses obtained by chaining the odometry from the
    /// first pose.
    pub fn integrate_odometry(&self) -> Vec<Pose2> {
        let mut out = Vec::with_capacity(self.len());
        let Some(&first) = self.poses.first() else { return out };
        let mut p = first;
        out.push(p);
        for d in &self.odometry[1..] {
            p = p.compose(d);
            out.push(p);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.poses.len() || self.poses.len() != self.odometry.len() {
            return Err(Error::Input("trajectory columns have different lengths".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("trajectory timestamps must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Arc length travelled by time `t`.
fn distance_at(cfg: &TrajectoryConfig, t: f64) -> f64 {
    match cfg.kind {
        TrajectoryKind::StopAndGo => {
            let v = cfg.speed_mps;
            let ta = v / cfg.acceleration_mps2;
            let ramp = 0.5 * v * ta;
            let cycle_t = 2.0 * ta + cfg.go_duration_s + cfg.stop_duration_s;
            let cycle_d = 2.0 * ramp + v * cfg.go_duration_s;
            let k = (t / cycle_t).floor();
            let tc = t - k * cycle_t;
            let within = if tc < ta {
                0.5 * cfg.acceleration_mps2 * tc * tc
            } else if tc < ta + cfg.go_duration_s {
                ramp + v * (tc - ta)
            } else if tc < 2.0 * ta + cfg.go_duration_s {
                let td = tc - ta - cfg.go_duration_s;
                ramp + v * cfg.go_duration_s + v * td - 0.5 * cfg.acceleration_mps2 * td * td
            } else {
                cycle_d
            };
            k * cycle_d + within
        }
        _ => cfg.speed_mps * t,
    }
}

/// Samples `(u, arc length)` of the sinusoid `y = A sin(2πu/λ)`.
struct CurvyTable {
    du: f64,
    s: Vec<f64>,
}

impl CurvyTable {
    fn new(cfg: &TrajectoryConfig, length: f64) -> Self {
        let du = 0.01;
        let k = 2.0 * PI / cfg.curvy_wavelength_m;
        let slope = |u: f64| cfg.curvy_amplitude_m * k * (k * u).cos();
        let mut s = vec![0.0];
        let mut u = 0.0;
        while *s.last().unwrap() < length + 1.0 {
            // midpoint rule on ds = sqrt(1 + y'^2) du
            let ds = (1.0 + slope(u + 0.5 * du).powi(2)).sqrt() * du;
            s.push(s.last().unwrap() + ds);
            u += du;
        }
        Self { du, s }
    }

    fn u_at(&self, s: f64) -> f64 {
        let k = self.s.partition_point(|&v| v < s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        ((k - 1) as f64 + (s - s0) / (s1 - s0)) * self.du
    }
}

fn pose_at(cfg: &TrajectoryConfig, s: f64, curvy: Option<&CurvyTable>) -> Pose2 {
    let start = cfg.start;
    match cfg.kind {
        TrajectoryKind::Straight => start.compose(&Pose2::new(s, 0.0, 0.0)),
        TrajectoryKind::Loop | TrajectoryKind::StopAndGo => {
            // counter-clockwise circle tangent to the start heading
            let r = cfg.loop_radius_m;
            let a = s / r;
            start.compose(&Pose2::new(r * a.sin(), r * (1.0 - a.cos()), wrap_angle(a)))
        }
        TrajectoryKind::Curvy => {
            let table = curvy.expect("curvy table");
            let u = table.u_at(s);
            let k = 2.0 * PI / cfg.curvy_wavelength_m;
            let y = cfg.curvy_amplitude_m * (k * u).sin();
            let dy = cfg.curvy_amplitude_m * k * (k * u).cos();
            start.compose(&Pose2::new(u, y, dy.atan()))
        }
    }
}

/// Smooth pose sequence sampled at `rate_hz`, plus noisy odometry.
pub fn generate_trajectory(cfg: &TrajectoryConfig, seed: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let mut times: Vec<f64> = Vec::new();
    let steps = (cfg.duration_s * cfg.rate_hz + 1e-9).floor() as usize;
    for k in 0..=steps {
        times.push(k as f64 / cfg.rate_hz);
    }
    if cfg.duration_s - times.last().unwrap() > 1e-9 {
        times.push(cfg.duration_s);
    }
    let curvy = (cfg.kind == TrajectoryKind::Curvy)
        .then(|| CurvyTable::new(cfg, distance_at(cfg, cfg.duration_s)));
    let poses: Vec<Pose2> = times
        .iter()
        .map(|&t| pose_at(cfg, distance_at(cfg, t), curvy.as_ref()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sx, sy, sh) = cfg.odometry_noise;
    let mut odometry = vec![Pose2::identity()];
    for w in poses.windows(2) {
        let d = w[0].between(&w[1]);
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nh: f64 = rng.sample(StandardNormal);
        odometry.push(Pose2::new(d.x + sx * nx, d.y + sy * ny, wrap_angle(d.h + sh * nh)));
    }
    Ok(Trajectory {
        times,
        poses,
        odometry,
    })
}

/// `pose` plus independent Gaussian noise per component, e.g. a GPS fix.
pub fn gaussian_perturbation(pose: &Pose2, sigma: (f64, f64, f64), seed: u64) -> Pose2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = || rng.sample::<f64, _>(StandardNormal);
    Pose2::new(
        pose.x + sigma.0 * n(),
        pose.y + sigma.1 * n(),
        wrap_angle(pose.h + sigma.2 * n()),
    )
}
