//! Normalized mutual information between edge maps and the exhaustive pose
//! search built on it.

mod covariance;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MaskedGrid;

pub use covariance::fit_covariance;
pub use search::{
    coarse_to_fine, search, search_maps, write_surface_csv, Candidate, NmiSurface,
    RegistrationPyramid, RegistrationResult, RegistrationTarget, SearchSchedule, SearchWindow,
};

/// How values are assigned to histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binning {
    /// Uniform bins over one range shared by both grids.
    #[default]
    Shared,
    /// Equal-frequency bins computed separately for each grid.
    Quantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HistogramSpec {
    /// At most 255 so bin indices fit a byte.
    pub bin_count: usize,
    /// Range of the shared uniform bins. When absent, search derives it from
    /// the global map's 1st to 99th percentile.
    pub value_range: Option<(f64, f64)>,
    pub min_overlap: usize,
    pub binning: Binning,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bin_count: 64,
            value_range: None,
            min_overlap: 100,
            binning: Binning::Shared,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=255).contains(&self.bin_count) {
            return Err(Error::Config(format!(
                "bin_count must be in 2..=255, got {}",
                self.bin_count
            )));
        }
        if let Some((lo, hi)) = self.value_range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Config(format!("value_range needs lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Maps values to bin indices.
#[derive(Debug, Clone, PartialEq)]
pub enum Binner {
    Uniform { lo: f64, hi: f64, bins: usize },
    /// Sorted inner bin edges; a value goes to the number of edges `≤` it.
    Edges { edges: Vec<f64> },
}

impl Binner {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        Binner::Uniform { lo, hi, bins }
    }

    /// Equal-frequency bins from the empirical distribution of `values`.
    pub fn quantile(values: &[f64], bins: usize) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let edges = if m == 0 {
            Vec::new()
        } else {
            (1..bins).map(|k| sorted[(k * m / bins).min(m - 1)]).collect()
        };
        Binner::Edges { edges }
    }

    pub fn bins(&self) -> usize {
        match self {
            Binner::Uniform { bins, .. } => *bins,
            Binner::Edges { edges } => edges.len() + 1,
        }
    }

    /// Values outside a uniform range are clamped into the end bins.
    #[inline]
    pub fn bin(&self, v: f64) -> usize {
        match self {
            Binner::Uniform { lo, hi, bins } => {
                if hi <= lo {
                    return 0;
                }
                let t = ((v - lo) / (hi - lo) * *bins as f64).floor();
                t.clamp(0.0, (*bins - 1) as f64) as usize
            }
            Binner::Edges { edges } => edges.partition_point(|e| *e <= v),
        }
    }
}

/// Shannon entropy in bits of a histogram. Counts are summed in sorted
/// order so the result depends only on the multiset of counts.
pub fn entropy_of_counts(counts: &mut Vec<u64>) -> f64 {
    counts.retain(|&c| c > 0);
    counts.sort_unstable();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let s: f64 = counts.iter().map(|&c| c as f64 * (c as f64).log2()).sum();
    (n.log2() - s / n).max(0.0)
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn own_binner(values: &[f64], spec: &HistogramSpec) -> Binner {
    match spec.binning {
        Binning::Quantile => Binner::quantile(values, spec.bin_count),
        Binning::Shared => {
            let (lo, hi) = spec
                .value_range
                .or_else(|| min_max(values.iter().copied()))
                .unwrap_or((0.0, 1.0));
            Binner::uniform(lo, hi, spec.bin_count)
        }
    }
}

/// Entropy in bits of the binned available values of `g`.
pub fn entropy(g: &MaskedGrid, spec: &HistogramSpec) -> Result<f64> {
    spec.validate()?;
    let values = g.available_values();
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let binner = own_binner(&values, spec);
    let mut counts = vec![0u64; binner.bins()];
    for v in values {
        counts[binner.bin(v)] += 1;
    }
    Ok(entropy_of_counts(&mut counts))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmiValue {
    pub value: f64,
    pub overlap: usize,
}

/// `(H(A) + H(B)) / H(A,B)` from joint bin counts; 2 when the joint
/// histogram has a single occupied bin.
pub fn nmi_from_joint(joint: &[u64], bins_a: usize, bins_b: usize) -> f64 {
    let mut ha = vec![0u64; bins_a];
    let mut hb = vec![0u64; bins_b];
    for a in 0..bins_a {
        for b in 0..bins_b {
            let c = joint[a * bins_b + b];
            ha[a] += c;
            hb[b] += c;
        }
    }
    let mut jc = joint.to_vec();
    let hab = entropy_of_counts(&mut jc);
    if hab <= 0.0 {
        return 2.0;
    }
    let sum = entropy_of_counts(&mut ha) + entropy_of_counts(&mut hb);
    // rounding can push the ratio a hair outside its theoretical range
    (sum / hab).clamp(1.0, 2.0)
}

/// Normalized mutual information over the cells available in both grids.
pub fn nmi(a: &MaskedGrid, b: &MaskedGrid, spec: &HistogramSpec) -> Result<NmiValue> {
    spec.validate()?;
    a.geometry().check_same(b.geometry())?;
    let pairs: Vec<(f64, f64)> = a
        .iter_available()
        .filter_map(|(n, va)| b.get_index(n).map(|vb| (va, vb)))
        .collect();
    let overlap = pairs.len();
    if overlap < spec.min_overlap.max(1) {
        return Err(Error::InsufficientOverlap {
            overlap,
            required: spec.min_overlap.max(1),
        });
    }
    let (ba, bb) = match spec.binning {
        Binning::Shared => {
            let (lo, hi) = spec
                .value_range
                .or_else(|| min_max(pairs.iter().flat_map(|&(x, y)| [x, y])))
                .unwrap_or((0.0, 1.0));
            let shared = Binner::uniform(lo, hi, spec.bin_count);
            (shared.clone(), shared)
        }
        Binning::Quantile => {
            let va: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let vb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            (
                Binner::quantile(&va, spec.bin_count),
                Binner::quantile(&vb, spec.bin_count),
            )
        }
    };
    let (na, nb) = (ba.bins(), bb.bins());
    let mut joint = vec![0u64; na * nb];
    for (x, y) in pairs {
        joint[ba.bin(x) * nb + bb.bin(y)] += 1;
    }
    Ok(NmiValue {
        value: nmi_from_joint(&joint, na, nb),
        overlap,
    })
}
