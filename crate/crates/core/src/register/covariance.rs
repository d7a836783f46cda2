use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::NmiSurface;

/// Peak-to-edge weight ratio of the fit.
const PEAK_TO_EDGE: f64 = 100.0;
/// Inflation applied when the maximum sits on the window boundary.
const BOUNDARY_INFLATION: f64 = 10.0;

/// Fits a pose covariance to an NMI surface around candidate `best`.
///
/// Candidates are weighted by `exp(κ·(v − v_max))` with κ chosen so the
/// best boundary candidate gets 1/100 of the peak weight; candidates at or
/// below that level are dropped. A surface whose boundary reaches the peak
/// is treated as flat and weighted uniformly. Each axis variance is floored
/// at `(step/2)²`. When `best` itself lies on the boundary every valid
/// candidate is weighted relative to the minimum instead, the result is
/// inflated tenfold and the second return value is true.
pub fn fit_covariance(surface: &NmiSurface, best: usize) -> (Matrix3<f64>, bool) {
    let valid: Vec<(usize, f64)> = surface
        .candidates
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.nmi.map(|v| (k, v)))
        .collect();
    let Some(peak) = surface.candidates.get(best).and_then(|c| c.nmi) else {
        return (floor_matrix(surface), true);
    };
    let ln = PEAK_TO_EDGE.ln();
    let flagged = surface.on_boundary(best);
    let weights: Vec<(usize, f64)> = if flagged {
        let low = valid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if peak > low {
            let kappa = ln / (peak - low);
            valid.iter().map(|&(k, v)| (k, (kappa * (v - peak)).exp())).collect()
        } else {
            valid.iter().map(|&(k, _)| (k, 1.0)).collect()
        }
    } else {
        let edge = valid
            .iter()
            .filter(|(k, _)| surface.on_boundary(*k))
            .map(|p| p.1)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        match edge {
            None => vec![(best, 1.0)],
            Some(e) if peak > e => {
                let kappa = ln / (peak - e);
                valid
                    .iter()
                    .filter(|&&(_, v)| v > e)
                    .map(|&(k, v)| (k, (kappa * (v - peak)).exp()))
                    .collect()
            }
            Some(_) => valid.iter().map(|&(k, _)| (k, 1.0)).collect(),
        }
    };

    let total: f64 = weights.iter().map(|w| w.1).sum();
    let offset = |k: usize| Vector3::from(surface.candidates[k].offset);
    let mean = weights
        .iter()
        .fold(Vector3::zeros(), |m, &(k, w)| m + offset(k) * w)
        / total;
    let mut r = weights.iter().fold(Matrix3::zeros(), |acc, &(k, w)| {
        let d = offset(k) - mean;
        acc + d * d.transpose() * w
    }) / total;

    let floors = floors(surface);
    for i in 0..3 {
        r[(i, i)] = r[(i, i)].max(floors[i]);
    }
    let min_eig = 0.01 * floors.iter().copied().fold(f64::INFINITY, f64::min);
    let eig = SymmetricEigen::new(r);
    if eig.eigenvalues.min() < min_eig {
        let vals = eig.eigenvalues.map(|l| l.max(min_eig));
        r = eig.eigenvectors * Matrix3::from_diagonal(&vals) * eig.eigenvectors.transpose();
    }
    r = (r + r.transpose()) * 0.5;
    if flagged {
        r *= BOUNDARY_INFLATION;
    }
    (r, flagged)
}

fn floors(surface: &NmiSurface) -> [f64; 3] {
    surface.steps.map(|s| (s / 2.0) * (s / 2.0))
}

fn floor_matrix(surface: &NmiSurface) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::from(floors(surface))) * BOUNDARY_INFLATION
}
