use std::io::Write;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Bin count of the empirical histogram, one per 8-bit intensity level.
pub const KLD_BINS: usize = 256;

/// Uniform histogram over the sample range padded by 5% on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("histogram of an empty sample".into()));
        }
        if bins == 0 {
            return Err(Error::Config("histogram needs at least one bin".into()));
        }
        let (min, max) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let pad = 0.05 * (max - min);
        let (lo, hi) = if max > min { (min - pad, max + pad) } else { (min - 0.5, min + 0.5) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in samples {
            let k = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Self { lo, width, counts })
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.width
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// CSV with one `bin,count` row per bin; `bin` is the bin center.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin", "count"])?;
        for (k, c) in self.counts.iter().enumerate() {
            w.write_record([self.center(k).to_string(), c.to_string()])?;
        }
        w.flush().map_err(|e| Error::Input(format!("writing histogram: {e}")))?;
        Ok(())
    }
}

/// Distance in bits between a sample and its moment-matched Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kld {
    pub bits: f64,
    /// Zero variance: no Gaussian to compare against, reported as 0.
    pub degenerate: bool,
}

/// `D(P ‖ Q)` in bits, with `P` the 256-bin histogram of `samples` and `Q`
/// the Gaussian of matching mean and variance integrated over each bin.
pub fn kld_vs_gaussian(samples: &[f64]) -> Result<Kld> {
    if samples.is_empty() {
        return Err(Error::Input("KLD of an empty sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("KLD sample contains a non-finite value".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let degenerate = Kld {
        bits: 0.0,
        degenerate: true,
    };
    if !(var > 0.0) {
        return Ok(degenerate);
    }
    let hist = Histogram::new(samples, KLD_BINS)?;
    let Ok(q) = Normal::new(mean, var.sqrt()) else {
        return Ok(degenerate);
    };
    let mut d = 0.0;
    let mut cdf_lo = q.cdf(hist.edge(0));
    for (k, &c) in hist.counts.iter().enumerate() {
        let cdf_hi = q.cdf(hist.edge(k + 1));
        if c > 0 {
            let p = c as f64 / n;
            d += p * (p / (cdf_hi - cdf_lo).max(1e-12)).log2();
        }
        cdf_lo = cdf_hi;
    }
    debug_assert!(d >= -1e-9, "negative KLD {d}");
    Ok(Kld {
        bits: d.max(0.0),
        degenerate: false,
    })
}
