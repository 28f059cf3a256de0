//! Toy denoising diffusion: forward noising and ancestral sampling.
//!
//! Timesteps are 1-based, `t ∈ [1, T]`. The reverse process uses the
//! ε-parameterised mean and a fixed variance `σ_t² = β_t`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

impl DiffusionConfig {
    pub fn schedule(&self) -> Result<NoiseSchedule> {
        NoiseSchedule::linear(self.steps, self.beta_start, self.beta_end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// `β_t` spaced linearly from `beta_start` (t = 1) to `beta_end` (t = T).
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::config("diffusion.steps", "must be at least 1"));
        }
        let betas: Vec<f64> = if steps == 1 {
            vec![beta_start]
        } else {
            (0..steps)
                .map(|i| beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64)
                .collect()
        };
        Self::from_betas(betas)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::config("diffusion.steps", "must be at least 1"));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::config("diffusion.beta_start", format!("every beta must lie in (0, 1), found {b}")));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len());
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alpha_bars })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn check(&self, t: usize) -> Result<usize> {
        if (1..=self.steps()).contains(&t) {
            Ok(t - 1)
        } else {
            Err(Error::Domain(format!("timestep {t} outside [1, {}]", self.steps())))
        }
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        Ok(self.betas[self.check(t)?])
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        Ok(1.0 - self.betas[self.check(t)?])
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        Ok(self.alpha_bars[self.check(t)?])
    }
}

/// `(x_t, t) ↦ ε̂` of the same dimension.
pub trait NoisePredictor {
    fn predict(&self, x_t: &[f64], t: usize) -> Vec<f64>;
}

impl<F: Fn(&[f64], usize) -> Vec<f64>> NoisePredictor for F {
    fn predict(&self, x_t: &[f64], t: usize) -> Vec<f64> {
        self(x_t, t)
    }
}

/// Posterior-mean predictor `ε̂ = √(1 − ᾱ_t) x_t` for standard normal data.
#[derive(Debug, Clone)]
pub struct GaussianOptimal {
    schedule: NoiseSchedule,
}

impl GaussianOptimal {
    pub fn new(schedule: NoiseSchedule) -> Self {
        Self { schedule }
    }
}

impl NoisePredictor for GaussianOptimal {
    fn predict(&self, x_t: &[f64], t: usize) -> Vec<f64> {
        let s = (1.0 - self.schedule.alpha_bars[t - 1]).sqrt();
        x_t.iter().map(|x| s * x).collect()
    }
}

fn normals<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// `√(1 − β_t) x_{t−1} + √β_t ε` for a given `ε`.
pub fn forward_step_with(x_prev: &[f64], t: usize, schedule: &NoiseSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    let beta = schedule.beta(t)?;
    let (a, b) = ((1.0 - beta).sqrt(), beta.sqrt());
    Ok(x_prev.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// One Markov noising step from `x_{t−1}` to `x_t`.
pub fn forward_step<R: Rng + ?Sized>(x_prev: &[f64], t: usize, schedule: &NoiseSchedule, rng: &mut R) -> Result<Vec<f64>> {
    schedule.check(t)?;
    let eps = normals(x_prev.len(), rng);
    forward_step_with(x_prev, t, schedule, &eps)
}

/// `√ᾱ_t x_0 + √(1 − ᾱ_t) ε` for a given `ε`.
pub fn forward_closed_form_with(x0: &[f64], t: usize, schedule: &NoiseSchedule, eps: &[f64]) -> Result<Vec<f64>> {
    let ab = schedule.alpha_bar(t)?;
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

pub fn forward_closed_form<R: Rng + ?Sized>(x0: &[f64], t: usize, schedule: &NoiseSchedule, rng: &mut R) -> Result<Vec<f64>> {
    schedule.check(t)?;
    let eps = normals(x0.len(), rng);
    forward_closed_form_with(x0, t, schedule, &eps)
}

/// `μ = (x_t − (1 − α_t)/√(1 − ᾱ_t) · ε̂) / √α_t`.
pub fn reverse_mean(x_t: &[f64], t: usize, eps_hat: &[f64], schedule: &NoiseSchedule) -> Result<Vec<f64>> {
    if eps_hat.len() != x_t.len() {
        return Err(Error::Dimension {
            what: "noise prediction",
            expected: x_t.len(),
            actual: eps_hat.len(),
        });
    }
    let alpha = schedule.alpha(t)?;
    let ab = schedule.alpha_bar(t)?;
    let coef = (1.0 - alpha) / (1.0 - ab).sqrt();
    let inv = 1.0 / alpha.sqrt();
    Ok(x_t.iter().zip(eps_hat).map(|(x, e)| inv * (x - coef * e)).collect())
}

/// Ancestral sampling from `x_T ~ N(0, I)` down to `x_0`.
pub fn sample<P: NoisePredictor + ?Sized, R: Rng + ?Sized>(
    predictor: &P,
    schedule: &NoiseSchedule,
    dim: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut x = normals(dim, rng);
    for t in (1..=schedule.steps()).rev() {
        let eps_hat = predictor.predict(&x, t);
        let mean = reverse_mean(&x, t, &eps_hat, schedule)?;
        x = if t > 1 {
            let sigma = schedule.beta(t)?.sqrt();
            mean.iter().zip(normals(dim, rng)).map(|(m, z)| m + sigma * z).collect()
        } else {
            mean
        };
    }
    Ok(x)
}
