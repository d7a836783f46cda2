//! ℓ1-regularized least-squares denoising of gradient fields by accelerated
//! proximal gradient (FISTA), one component at a time.
//!
//! Each component `y` is replaced by the minimizer of
//! `½‖s − y‖² + λ‖s‖₁` over its available cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GradientField, MaskedGrid};

/// Soft-thresholding: `sign(s)·max(|s| − τ, 0)`.
#[inline]
pub fn soft_threshold(s: f64, tau: f64) -> f64 {
    if s > tau {
        s - tau
    } else if s < -tau {
        s + tau
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub lambda: f64,
    /// Gradient step γ. The threshold is `λ·γ`.
    pub step: f64,
    pub max_iters: usize,
    /// Stop once the relative objective change drops below this.
    pub rel_tol: f64,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            step: 1.0,
            max_iters: 500,
            rel_tol: 1e-6,
        }
    }
}

impl DenoiseConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn threshold(&self) -> f64 {
        self.lambda * self.step
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::Config(format!("rel_tol must be non-negative, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// `½‖s − y‖² + λ‖s‖₁`.
pub fn objective(y: &[f64], s: &[f64], lambda: f64) -> f64 {
    let mut fit = 0.0;
    let mut l1 = 0.0;
    for (a, b) in s.iter().zip(y) {
        fit += (a - b) * (a - b);
        l1 += a.abs();
    }
    0.5 * fit + lambda * l1
}

/// Runs FISTA on one vector starting from `start`. Returns the final prox
/// iterate and the objective after every iteration, starting with the
/// objective at `start`.
pub fn fista_minimize(y: &[f64], start: &[f64], cfg: &DenoiseConfig) -> (Vec<f64>, Vec<f64>) {
    let tau = cfg.threshold();
    let gamma = cfg.step;
    let mut s = start.to_vec();
    let mut z = s.clone();
    let mut next = vec![0.0; y.len()];
    let mut q = 1.0f64;
    let mut history = vec![objective(y, &s, cfg.lambda)];
    for _ in 0..cfg.max_iters {
        for ((n, zi), yi) in next.iter_mut().zip(&z).zip(y) {
            *n = soft_threshold(zi - gamma * (zi - yi), tau);
        }
        let q_next = 0.5 * (1.0 + (1.0 + 4.0 * q * q).sqrt());
        let beta = (q - 1.0) / q_next;
        for ((zi, ni), si) in z.iter_mut().zip(&next).zip(&s) {
            *zi = ni + beta * (ni - si);
        }
        q = q_next;
        std::mem::swap(&mut s, &mut next);
        let f = objective(y, &s, cfg.lambda);
        let prev = *history.last().unwrap();
        history.push(f);
        if (prev - f).abs() <= cfg.rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (s, history)
}

fn denoise_component(g: &MaskedGrid, cfg: &DenoiseConfig) -> (MaskedGrid, Vec<f64>) {
    let (cells, y): (Vec<usize>, Vec<f64>) = g.iter_available().unzip();
    let (s, history) = fista_minimize(&y, &y, cfg);
    let mut out = g.clone();
    for (n, v) in cells.into_iter().zip(s) {
        out.set_index(n, v);
    }
    (out, history)
}

/// Objective histories of both components.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseTrace {
    pub objective_x: Vec<f64>,
    pub objective_y: Vec<f64>,
}

/// Denoises both components of `noisy`. Unavailable cells are left as they
/// are.
pub fn fista_denoise(noisy: &GradientField, cfg: &DenoiseConfig) -> Result<GradientField> {
    fista_denoise_traced(noisy, cfg).map(|(f, _)| f)
}

pub fn fista_denoise_traced(
    noisy: &GradientField,
    cfg: &DenoiseConfig,
) -> Result<(GradientField, DenoiseTrace)> {
    cfg.validate()?;
    let ((dx, hx), (dy, hy)) = rayon::join(
        || denoise_component(&noisy.dx, cfg),
        || denoise_component(&noisy.dy, cfg),
    );
    Ok((
        GradientField { dx, dy },
        DenoiseTrace {
            objective_x: hx,
            objective_y: hy,
        },
    ))
}
