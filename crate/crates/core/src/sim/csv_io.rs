//! CSV exchange formats for scans and trajectories.
//!
//! Scans: `t,x,y,refl,laser,incidence,range`, one row per return, rows of
//! the same scan share `t`. Trajectories: `t,x,y,h,odo_dx,odo_dy,odo_dh`,
//! where row `k` carries the odometry from pose `k-1` to pose `k`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::scanner::{Return, Scan};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::pose::Pose2;

const SCAN_HEADER: [&str; 7] = ["t", "x", "y", "refl", "laser", "incidence", "range"];
const TRAJ_HEADER: [&str; 7] = ["t", "x", "y", "h", "odo_dx", "odo_dy", "odo_dh"];

pub fn write_scans<'a, W: Write>(out: W, scans: impl IntoIterator<Item = &'a Scan>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_HEADER)?;
    for scan in scans {
        for r in &scan.returns {
            w.write_record(&[
                scan.timestamp.to_string(),
                r.x.to_string(),
                r.y.to_string(),
                r.reflectivity.to_string(),
                r.laser.to_string(),
                r.incidence.to_string(),
                r.range.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Input(format!("writing scans: {e}")))?;
    Ok(())
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str; 7], what: &str) -> Result<()> {
    let header = rdr.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Input(format!(
            "{what} header must be `{}`, found `{}`",
            expected.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, line: u64) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Input(format!("line {line}: bad value in column {}", k + 1)))
}

/// Reads scans, grouping consecutive rows with equal `t`.
pub fn read_scans<R: Read>(input: R) -> Result<Vec<Scan>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &SCAN_HEADER, "scan")?;
    let mut scans: Vec<Scan> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let t: f64 = field(&rec, 0, line)?;
        let ret = Return {
            x: field(&rec, 1, line)?,
            y: field(&rec, 2, line)?,
            reflectivity: field(&rec, 3, line)?,
            laser: field(&rec, 4, line)?,
            incidence: field(&rec, 5, line)?,
            range: field(&rec, 6, line)?,
        };
        match scans.last_mut() {
            Some(s) if s.timestamp == t => s.returns.push(ret),
            _ => scans.push(Scan {
                timestamp: t,
                returns: vec![ret],
            }),
        }
    }
    Ok(scans)
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJ_HEADER)?;
    for ((t, p), o) in traj.times.iter().zip(&traj.poses).zip(&traj.odometry) {
        w.write_record(&[
            t.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.h.to_string(),
            o.x.to_string(),
            o.y.to_string(),
            o.h.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Input(format!("writing trajectory: {e}")))?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &TRAJ_HEADER, "trajectory")?;
    let mut traj = Trajectory {
        times: Vec::new(),
        poses: Vec::new(),
        odometry: Vec::new(),
    };
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k as u64 + 2;
        let v: Vec<f64> = (0..7).map(|c| field(&rec, c, line)).collect::<Result<_>>()?;
        traj.times.push(v[0]);
        traj.poses.push(Pose2::new(v[1], v[2], v[3]));
        traj.odometry.push(Pose2::new(v[4], v[5], v[6]));
    }
    traj.validate()?;
    Ok(traj)
}

pub fn save_scans<'a>(path: impl AsRef<Path>, scans: impl IntoIterator<Item = &'a Scan>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_scans(BufWriter::new(f), scans)
}

pub fn load_scans(path: impl AsRef<Path>) -> Result<Vec<Scan>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scans(BufReader::new(f))
}

pub fn save_trajectory(path: impl AsRef<Path>, traj: &Trajectory) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(BufWriter::new(f), traj)
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectory(BufReader::new(f))
}
