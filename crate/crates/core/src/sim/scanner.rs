use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::world::{quantize, World};
use crate::error::{Error, Result};
use crate::pose::Pose2;

/// Response parameters of one laser. With flat ground and a non-canted
/// sensor the incidence angle and slant range are constant per laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserModel {
    pub laser_id: u16,
    pub gain: f64,
    pub offset: f64,
    /// Angle between beam and ground normal, radians.
    pub incidence: f64,
    /// Slant range to the ground, meters.
    pub range: f64,
    pub noise_sigma: f64,
    pub angle_exponent: f64,
    pub range_exponent: f64,
}

impl LaserModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gain > 0.0
            && self.noise_sigma >= 0.0
            && (0.0..PI / 2.0).contains(&self.incidence)
            && self.range > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid laser model {self:?}")))
        }
    }

    /// Horizontal distance from the sensor to the ring this laser traces.
    pub fn ground_distance(&self) -> f64 {
        self.range * self.incidence.sin()
    }

    /// Noise-free expected return for true reflectivity `x`, before
    /// clamping.
    pub fn expected(&self, x: f64, reference_range: f64) -> f64 {
        self.gain
            * x
            * self.incidence.cos().powf(self.angle_exponent)
            * (reference_range / self.range).powf(self.range_exponent)
            + self.offset
    }
}

/// Simple polygon in world coordinates; returns inside it are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            vertices: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len().wrapping_sub(1);
        for i in 0..v.len() {
            let (xi, yi) = v[i];
            let (xj, yj) = v[j];
            if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    pub laser_count: usize,
    pub mount_height_m: f64,
    pub min_ground_range_m: f64,
    pub max_ground_range_m: f64,
    pub reference_range_m: f64,
    /// Arc length between consecutive samples along a ring.
    pub point_spacing_m: f64,
    /// Radial spread of the beam footprint around the nominal ring.
    pub ring_half_width_m: f64,
    pub angle_exponent: f64,
    pub range_exponent: f64,
    pub gain_range: (f64, f64),
    pub offset_range: (f64, f64),
    pub noise_sigma: f64,
    pub quantum: f64,
    pub occlusions: Vec<Polygon>,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            laser_count: 64,
            mount_height_m: 1.9,
            min_ground_range_m: 3.0,
            max_ground_range_m: 12.0,
            reference_range_m: 10.0,
            point_spacing_m: 0.05,
            ring_half_width_m: 0.1,
            angle_exponent: 1.0,
            range_exponent: 1.0,
            gain_range: (1.0, 1.0),
            offset_range: (0.0, 0.0),
            noise_sigma: 0.0,
            quantum: 1.0 / 256.0,
            occlusions: Vec::new(),
        }
    }
}

/// A set of lasers plus the geometry shared by all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserRig {
    pub lasers: Vec<LaserModel>,
    pub reference_range_m: f64,
    pub point_spacing_m: f64,
    pub ring_half_width_m: f64,
    pub quantum: f64,
    pub occlusions: Vec<Polygon>,
}

impl LaserRig {
    /// Lasers with ring distances evenly spaced in
    /// `[min_ground_range_m, max_ground_range_m]`; gains and offsets drawn
    /// uniformly from the configured ranges.
    pub fn from_config(cfg: &RigConfig, seed: u64) -> Result<Self> {
        if cfg.laser_count == 0 {
            return Err(Error::Config("laser_count must be at least 1".into()));
        }
        if !(cfg.mount_height_m > 0.0
            && cfg.min_ground_range_m > 0.0
            && cfg.max_ground_range_m >= cfg.min_ground_range_m
            && cfg.point_spacing_m > 0.0
            && cfg.ring_half_width_m >= 0.0
            && cfg.quantum > 0.0)
        {
            return Err(Error::Config("invalid rig geometry".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let b = cfg.laser_count;
        let lasers = (0..b)
            .map(|k| {
                let t = if b > 1 { k as f64 / (b - 1) as f64 } else { 0.0 };
                let rho = cfg.min_ground_range_m + t * (cfg.max_ground_range_m - cfg.min_ground_range_m);
                let gain = draw(cfg.gain_range);
                let offset = draw(cfg.offset_range);
                LaserModel {
                    laser_id: k as u16,
                    gain,
                    offset,
                    incidence: rho.atan2(cfg.mount_height_m),
                    range: rho.hypot(cfg.mount_height_m),
                    noise_sigma: cfg.noise_sigma,
                    angle_exponent: cfg.angle_exponent,
                    range_exponent: cfg.range_exponent,
                }
            })
            .collect::<Vec<_>>();
        for l in &lasers {
            l.validate()?;
        }
        Ok(Self {
            lasers,
            reference_range_m: cfg.reference_range_m,
            point_spacing_m: cfg.point_spacing_m,
            ring_half_width_m: cfg.ring_half_width_m,
            quantum: cfg.quantum,
            occlusions: cfg.occlusions.clone(),
        })
    }

    pub fn laser(&self, id: u16) -> Option<&LaserModel> {
        self.lasers.iter().find(|l| l.laser_id == id)
    }
}

/// One ground return in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Return {
    pub x: f64,
    pub y: f64,
    pub reflectivity: f64,
    pub laser: u16,
    pub incidence: f32,
    pub range: f32,
}

/// All ground returns of one sensor revolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub timestamp: f64,
    pub returns: Vec<Return>,
}

/// A return expressed in the sensor body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyReturn {
    pub x: f64,
    pub y: f64,
    pub reflectivity: f64,
    pub laser: u16,
}

impl Scan {
    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Expresses the returns in the body frame of the pose they were
    /// captured from.
    pub fn to_body(&self, sensor: &Pose2) -> Vec<BodyReturn> {
        self.returns
            .iter()
            .map(|r| {
                let (x, y) = sensor.inverse_transform_point(r.x, r.y);
                BodyReturn {
                    x,
                    y,
                    reflectivity: r.reflectivity,
                    laser: r.laser,
                }
            })
            .collect()
    }
}

/// Simulates one revolution at `pose`: every laser traces a ring of ground
/// points; each return reads the truth cell under it through the laser's
/// response, plus Gaussian noise, clamped to `[0, 255]`.
pub fn scan_once(world: &World, pose: &Pose2, timestamp: f64, rig: &LaserRig, seed: u64) -> Scan {
    let geom = world.geometry();
    let mut scan = Scan {
        timestamp,
        returns: Vec::new(),
    };
    if !geom.contains(pose.x, pose.y) {
        return scan;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sh, ch) = pose.h.sin_cos();
    for laser in &rig.lasers {
        let rho = laser.ground_distance();
        let samples = ((2.0 * PI * rho / rig.point_spacing_m).ceil() as usize).max(1);
        let step = 2.0 * PI / samples as f64;
        let phase = rng.gen_range(0.0..step);
        let gain = laser.expected(1.0, rig.reference_range_m) - laser.offset;
        for k in 0..samples {
            let a = phase + k as f64 * step;
            let jitter = if rig.ring_half_width_m > 0.0 {
                rng.gen_range(-rig.ring_half_width_m..rig.ring_half_width_m)
            } else {
                0.0
            };
            let noise = if laser.noise_sigma > 0.0 {
                laser.noise_sigma * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            let (sa, ca) = a.sin_cos();
            let (bx, by) = ((rho + jitter) * ca, (rho + jitter) * sa);
            let x = pose.x + ch * bx - sh * by;
            let y = pose.y + sh * bx + ch * by;
            if rig.occlusions.iter().any(|p| p.contains(x, y)) {
                continue;
            }
            let Some(n) = geom.index_of(x, y) else { continue };
            let Some(truth) = world.truth.get_index(n) else { continue };
            let v = gain * truth + laser.offset + noise;
            scan.returns.push(Return {
                x,
                y,
                reflectivity: quantize(v.clamp(0.0, 255.0), rig.quantum),
                laser: laser.laser_id,
                incidence: laser.incidence as f32,
                range: laser.range as f32,
            });
        }
    }
    scan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::{generate_world, WorldConfig};

    fn world() -> World {
        generate_world(
            &WorldConfig {
                width_m: 40.0,
                height_m: 40.0,
                ..Default::default()
            },
            1,
        )
        .unwrap()
    }

    fn rig(cfg: RigConfig) -> LaserRig {
        LaserRig::from_config(&cfg, 0).unwrap()
    }

    #[test]
    fn identity_response_reads_truth() {
        let w = world();
        let r = rig(RigConfig {
            laser_count: 4,
            angle_exponent: 0.0,
            range_exponent: 0.0,
            ..Default::default()
        });
        let s = scan_once(&w, &Pose2::new(20.0, 20.0, 0.3), 0.0, &r, 5);
        assert!(!s.is_empty());
        for ret in &s.returns {
            let truth = w.truth.get_index(w.geometry().index_of(ret.x, ret.y).unwrap()).unwrap();
            assert_eq!(ret.reflectivity, truth);
        }
    }

    #[test]
    fn linear_gain_and_clamp() {
        let w = world();
        let mut r = rig(RigConfig {
            laser_count: 1,
            angle_exponent: 0.0,
            range_exponent: 0.0,
            ..Default::default()
        });
        r.lasers[0].gain = 2.0;
        let pose = Pose2::new(20.0, 20.0, 0.0);
        let s = scan_once(&w, &pose, 0.0, &r, 5);
        for ret in &s.returns {
            let truth = w.truth.get_index(w.geometry().index_of(ret.x, ret.y).unwrap()).unwrap();
            assert_eq!(ret.reflectivity, (2.0 * truth).min(255.0));
        }
        r.lasers[0].gain = 1.0;
        r.lasers[0].offset = 300.0;
        let s = scan_once(&w, &pose, 0.0, &r, 5);
        assert!(s.returns.iter().all(|ret| ret.reflectivity == 255.0));
    }

    #[test]
    fn returns_lie_on_ring_and_outside_pose_is_empty() {
        let w = world();
        let r = rig(RigConfig {
            laser_count: 3,
            ..Default::default()
        });
        let pose = Pose2::new(15.0, 22.0, 1.0);
        let s = scan_once(&w, &pose, 0.0, &r, 9);
        for ret in &s.returns {
            let rho = r.laser(ret.laser).unwrap().ground_distance();
            let d = (ret.x - pose.x).hypot(ret.y - pose.y);
            assert!((d - rho).abs() <= r.ring_half_width_m + 1e-9);
        }
        assert!(scan_once(&w, &Pose2::new(-5.0, 3.0, 0.0), 0.0, &r, 9).is_empty());
    }

    #[test]
    fn occlusion_drops_returns() {
        let w = world();
        let mut r = rig(RigConfig {
            laser_count: 8,
            ..Default::default()
        });
        let pose = Pose2::new(20.0, 20.0, 0.0);
        let full = scan_once(&w, &pose, 0.0, &r, 2).returns.len();
        r.occlusions.push(Polygon::rect(20.0, 0.0, 40.0, 40.0));
        let s = scan_once(&w, &pose, 0.0, &r, 2);
        assert!(s.returns.len() < full * 6 / 10);
        assert!(s.returns.iter().all(|ret| ret.x < 20.0));
    }

    #[test]
    fn deterministic_in_seed() {
        let w = world();
        let r = rig(RigConfig {
            laser_count: 4,
            noise_sigma: 3.0,
            ..Default::default()
        });
        let pose = Pose2::new(20.0, 20.0, 0.0);
        assert_eq!(scan_once(&w, &pose, 0.0, &r, 4), scan_once(&w, &pose, 0.0, &r, 4));
    }
}
