//! Noise schedule and the closed-form forward-process algebra.
//!
//! Index convention: `t = 0` is the clean state with `alpha_bar(0) = 1`;
//! timesteps `1..=T` carry noise. `beta(t)` and `alpha(t)` are only defined
//! for `t >= 1`.

use crate::error::{Error, Result};

/// Offset of the cosine schedule.
pub const COSINE_OFFSET: f64 = 0.008;
/// Upper clip applied to every beta.
pub const MAX_BETA: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Cosine schedule: `alpha_bar(t) = f(t) / f(0)` with
    /// `f(t) = cos²(((t/T + s) / (1 + s)) · π/2)`, turned into betas
    /// `1 - alpha_bar(t) / alpha_bar(t-1)` clipped to [`MAX_BETA`].
    pub fn cosine(timesteps: usize) -> Result<Self> {
        if timesteps == 0 {
            return Err(Error::Config("schedule needs at least one timestep".into()));
        }
        let total = timesteps as f64;
        let f = |t: usize| {
            let phase = (t as f64 / total + COSINE_OFFSET) / (1.0 + COSINE_OFFSET);
            (phase * std::f64::consts::FRAC_PI_2).cos().powi(2)
        };
        let betas = (1..=timesteps)
            .map(|t| (1.0 - f(t) / f(t - 1)).min(MAX_BETA))
            .collect();
        Self::from_betas(betas)
    }

    /// Builds the schedule from `betas[t - 1] = beta(t)`.
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Config("schedule needs at least one timestep".into()));
        }
        if let Some((i, b)) = betas.iter().enumerate().find(|(_, &b)| !(b > 0.0 && b <= MAX_BETA)) {
            return Err(Error::Config(format!("beta({}) = {b} outside (0, {MAX_BETA}]", i + 1)));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(alphas.len() + 1);
        alpha_bars.push(1.0);
        let mut acc = 1.0;
        for a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alphas, alpha_bars })
    }

    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    /// Panics unless `1 <= t <= T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    /// Panics unless `1 <= t <= T`.
    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    /// Panics unless `t <= T`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn check_noisy(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.timesteps() {
            return Err(Error::Timestep { t, min: 1, max: self.timesteps() });
        }
        Ok(())
    }

    pub fn check_any(&self, t: usize) -> Result<()> {
        if t > self.timesteps() {
            return Err(Error::Timestep { t, min: 0, max: self.timesteps() });
        }
        Ok(())
    }

    /// Forward diffusion `x_t = sqrt(ab) x0 + sqrt(1 - ab) eps`.
    pub fn q_sample(&self, x0: &[f64], t: usize, noise: &[f64]) -> Result<Vec<f64>> {
        self.check_noisy(t)?;
        same_len(x0, noise, "q_sample")?;
        let ab = self.alpha_bar(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        Ok(x0.iter().zip(noise).map(|(x, e)| a * x + b * e).collect())
    }

    /// Noise implied by `x_t` and a clean estimate:
    /// `eps = (x_t - sqrt(ab) x0) / sqrt(1 - ab)`.
    pub fn recover_noise(&self, x_t: &[f64], x0: &[f64], t: usize) -> Result<Vec<f64>> {
        self.check_noisy(t)?;
        same_len(x_t, x0, "recover_noise")?;
        let ab = self.alpha_bar(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        Ok(x_t.iter().zip(x0).map(|(x, c)| (x - a * c) / b).collect())
    }

    /// Clean estimate implied by `x_t` and a noise estimate:
    /// `x0 = (x_t - sqrt(1 - ab) eps) / sqrt(ab)`.
    pub fn predict_x0(&self, x_t: &[f64], noise: &[f64], t: usize) -> Result<Vec<f64>> {
        self.check_noisy(t)?;
        same_len(x_t, noise, "predict_x0")?;
        let ab = self.alpha_bar(t);
        let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
        Ok(x_t.iter().zip(noise).map(|(x, e)| (x - b * e) / a).collect())
    }
}

pub(crate) fn same_len(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("{what}: lengths {} and {}", a.len(), b.len())));
    }
    Ok(())
}
