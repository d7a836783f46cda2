use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::DiagnosticRow;

/// Planar error above which a step counts as a spike (m).
pub const SPIKE_THRESHOLD_M: f64 = 0.20;

/// Localization error summary. Longitudinal and lateral values are in
/// centimetres, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RmseReport {
    pub steps: usize,
    /// Steps the RMS values are taken over.
    pub used: usize,
    /// No step had a measurement update, so every step was used.
    pub open_loop: bool,
    pub lon_cm: f64,
    pub lat_cm: f64,
    pub head_rad: f64,
    /// Largest planar error over the used steps (cm).
    pub max_cm: f64,
    /// Used steps whose planar error exceeds the spike threshold.
    pub spikes: usize,
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x * x, n + 1));
    (s / n as f64).sqrt()
}

/// RMS and peak errors over the steps that were not coasted. A run with no updates
/// at all (an open-loop run) is summarized over every step instead.
pub fn rmse_report(rows: &[DiagnosticRow]) -> Result<RmseReport> {
    if rows.is_empty() {
        return Err(Error::Input("no diagnostics rows".into()));
    }
    let updated: Vec<&DiagnosticRow> = rows.iter().filter(|r| r.coasted_flag == 0).collect();
    let open_loop = updated.is_empty();
    let used: Vec<&DiagnosticRow> = if open_loop { rows.iter().collect() } else { updated };
    let planar = |r: &DiagnosticRow| r.err_lon.hypot(r.err_lat);
    Ok(RmseReport {
        steps: rows.len(),
        used: used.len(),
        open_loop,
        lon_cm: 100.0 * rms(used.iter().map(|r| r.err_lon)),
        lat_cm: 100.0 * rms(used.iter().map(|r| r.err_lat)),
        head_rad: rms(used.iter().map(|r| r.err_h)),
        max_cm: 100.0 * used.iter().map(|r| planar(r)).fold(0.0, f64::max),
        spikes: used.iter().filter(|r| planar(r) > SPIKE_THRESHOLD_M).count(),
    })
}

impl RmseReport {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.serialize(self)?;
        w.flush().map_err(|e| Error::Input(format!("writing report: {e}")))?;
        Ok(())
    }
}

impl fmt::Display for RmseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14}{:>12}", "steps", self.steps)?;
        writeln!(f, "{:<14}{:>12}", "used", self.used)?;
        writeln!(f, "{:<14}{:>12.3}", "lon (cm)", self.lon_cm)?;
        writeln!(f, "{:<14}{:>12.3}", "lat (cm)", self.lat_cm)?;
        writeln!(f, "{:<14}{:>12.3e}", "head (rad)", self.head_rad)?;
        writeln!(f, "{:<14}{:>12.3}", "max (cm)", self.max_cm)?;
        write!(f, "{:<14}{:>12}", "spikes", self.spikes)?;
        if self.open_loop {
            write!(f, "\nopen loop: no measurement updates")?;
        }
        Ok(())
    }
}
