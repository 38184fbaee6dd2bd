//! Reverse process over the disparity filter.
//!
//! Starting from Gaussian noise, every step gates the base volume with the
//! current filter, lets the matcher predict a disparity map, re-encodes that
//! map as a two-hot volume (the coarse clean estimate), recovers the implied
//! noise and takes a DDIM step to the next timestep. Pixels whose prediction
//! disagrees with the baseline, or whose distribution is too flat, get their
//! filter column reset. The per-step predictions are finally blended with the
//! baseline.
//!
//! State convention: the filter is carried in the signed state (`[-1, 1]`
//! nominal) through the diffusion algebra and converted to the unit state
//! before it gates the volume.

use std::str::FromStr;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::VolumeMatcher;
use crate::rng::NoiseSource;
use crate::schedule::{same_len, NoiseSchedule};
use crate::volume::{
    discretize_two_hot, entropy_map, filter_distribution, filter_volume, rescale_signed, rescale_unit,
    CostVolume, DisparityMap, ProbabilityVolume,
};

/// Per-step integration weights for five steps plus the baseline.
pub const FIVE_STEP_WEIGHTS: [f64; 6] = [0.0, 0.0, 0.0, 0.2, 0.3, 0.5];

/// Amplitude of the sinusoidal time embedding.
pub const EMBEDDING_SCALE: f64 = 0.1;

const STREAM_INIT: u64 = 1;
const STREAM_DDIM: u64 = 1 << 16;
const STREAM_RENEWAL: u64 = 2 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    #[default]
    Zero,
    Sinusoidal,
}

impl FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "sinusoidal" => Ok(Self::Sinusoidal),
            other => Err(Error::Config(format!("unknown time-embedding mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenewalPolicy {
    pub enabled: bool,
    /// Outlier if the step prediction differs from the baseline by more than
    /// this many pixels.
    pub disparity_threshold: f64,
    /// Outlier if the column entropy (nats) of the step's probability volume
    /// exceeds this. `None` means `ln(D) / 2`.
    pub entropy_threshold: Option<f64>,
}

impl Default for RenewalPolicy {
    fn default() -> Self {
        Self { enabled: true, disparity_threshold: 1.0, entropy_threshold: None }
    }
}

impl RenewalPolicy {
    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::default() }
    }

    pub fn entropy_threshold_for(&self, levels: usize) -> f64 {
        self.entropy_threshold.unwrap_or_else(|| (levels as f64).ln() / 2.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.disparity_threshold >= 0.0) {
            return Err(Error::Config("renewal disparity threshold must be >= 0".into()));
        }
        if let Some(e) = self.entropy_threshold {
            if !(e >= 0.0) {
                return Err(Error::Config("renewal entropy threshold must be >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Length of the diffusion chain T.
    pub timesteps: usize,
    /// Number of reverse steps S.
    pub steps: usize,
    /// DDIM stochasticity in `[0, 1]`.
    pub eta: f64,
    /// `steps + 1` non-negative weights summing to one; the last one weights
    /// the baseline. Empty means [`default_weights`].
    pub weights: Vec<f64>,
    pub renewal: RenewalPolicy,
    pub seed: u64,
    pub embedding: EmbeddingMode,
    /// Keep every step's filter in the output.
    pub keep_snapshots: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            timesteps: 1000,
            steps: 5,
            eta: 0.0,
            weights: FIVE_STEP_WEIGHTS.to_vec(),
            renewal: RenewalPolicy::default(),
            seed: 0,
            embedding: EmbeddingMode::Zero,
            keep_snapshots: false,
        }
    }
}

impl SamplerConfig {
    /// Default configuration with `steps` steps and their default weights.
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, weights: default_weights(steps), ..Self::default() }
    }

    /// The configured weights, or the defaults for the step count.
    pub fn resolved_weights(&self) -> Vec<f64> {
        if self.weights.is_empty() {
            default_weights(self.steps)
        } else {
            self.weights.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("at least one sampling step is required".into()));
        }
        if self.steps > self.timesteps {
            return Err(Error::Config(format!(
                "{} steps cannot be spread over {} timesteps",
                self.steps, self.timesteps
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("eta {} outside [0, 1]", self.eta)));
        }
        check_weights(&self.resolved_weights(), self.steps + 1)?;
        self.renewal.validate()
    }
}

/// Integration weights: the baseline keeps 0.5, the last step 0.3 and the
/// second-to-last 0.2 (the last step takes 0.5 when there is only one).
pub fn default_weights(steps: usize) -> Vec<f64> {
    let mut w = vec![0.0; steps + 1];
    w[steps] = 0.5;
    match steps {
        0 => {}
        1 => w[0] = 0.5,
        _ => {
            w[steps - 1] = 0.3;
            w[steps - 2] = 0.2;
        }
    }
    w
}

fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::Config(format!(
            "expected {expected} integration weights, got {}",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::Config(format!("negative integration weight {w}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("integration weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Evenly spaced descending timesteps starting at `T`:
/// `T - j·T/S` for `j = 0..S` (1000, 800, 600, 400, 200 for five steps).
pub fn timestep_grid(timesteps: usize, steps: usize) -> Result<Vec<usize>> {
    if steps == 0 || steps > timesteps {
        return Err(Error::Config(format!("cannot place {steps} steps on {timesteps} timesteps")));
    }
    Ok((0..steps).map(|j| timesteps - j * timesteps / steps).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerOutput {
    /// Timestep of each prediction, descending.
    pub timesteps: Vec<usize>,
    /// One prediction per step, first step first.
    pub predictions: Vec<DisparityMap>,
    /// Dense integration of the predictions and the baseline.
    pub disparity: DisparityMap,
    /// Renewed pixels per step.
    pub outlier_counts: Vec<usize>,
    /// Renewed pixels per step, as masks.
    pub outlier_masks: Vec<Array2<bool>>,
    /// Mean column entropy (nats) of the denoised filter after each step.
    pub entropy_trace: Vec<f64>,
    /// Per-pixel entropy behind [`Self::entropy_trace`].
    pub entropy_maps: Vec<Array2<f64>>,
    /// Initial filter followed by the denoised filter of every step (signed
    /// state, before renewal); empty unless requested.
    pub snapshots: Vec<ProbabilityVolume>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdimCoefficients {
    pub clean: f64,
    pub noise: f64,
    pub sigma: f64,
}

/// Coefficients of `x_prev = clean·x0 + noise·eps + sigma·z` with
/// `sigma = eta · sqrt((1 - ab_t/ab_prev) · (1 - ab_prev)/(1 - ab_t))`.
pub fn ddim_coefficients(schedule: &NoiseSchedule, t: usize, t_prev: usize, eta: f64) -> Result<DdimCoefficients> {
    schedule.check_noisy(t)?;
    schedule.check_any(t_prev)?;
    if t_prev >= t {
        return Err(Error::Config(format!("DDIM step needs t_prev < t, got {t_prev} >= {t}")));
    }
    let ab_t = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar(t_prev);
    let sigma = eta * ((1.0 - ab_t / ab_prev) * (1.0 - ab_prev) / (1.0 - ab_t)).sqrt();
    let radicand = 1.0 - ab_prev - sigma * sigma;
    if radicand < -1e-12 {
        return Err(Error::Config(format!(
            "sigma² = {} exceeds 1 - alpha_bar(t_prev) = {}",
            sigma * sigma,
            1.0 - ab_prev
        )));
    }
    Ok(DdimCoefficients { clean: ab_prev.sqrt(), noise: radicand.max(0.0).sqrt(), sigma })
}

/// One DDIM step from `t` to `t_prev` given the clean estimate `x0` and the
/// noise `eps`; `fresh` supplies the standard normal draws scaled by sigma
/// and is only read when sigma is non-zero.
#[allow(clippy::too_many_arguments)]
pub fn ddim_step(
    schedule: &NoiseSchedule,
    x0: &[f64],
    eps: &[f64],
    t: usize,
    t_prev: usize,
    eta: f64,
    fresh: &[f64],
) -> Result<Vec<f64>> {
    same_len(x0, eps, "ddim_step")?;
    let c = ddim_coefficients(schedule, t, t_prev, eta)?;
    if c.sigma == 0.0 {
        return Ok(x0.iter().zip(eps).map(|(x, e)| c.clean * x + c.noise * e).collect());
    }
    same_len(x0, fresh, "ddim_step fresh noise")?;
    Ok(x0
        .iter()
        .zip(eps)
        .zip(fresh)
        .map(|((x, e), z)| c.clean * x + c.noise * e + c.sigma * z)
        .collect())
}

/// DDPM posterior mean
/// `sqrt(a_t)(1 - ab_{t-1})/(1 - ab_t) · x_t + sqrt(ab_{t-1}) b_t/(1 - ab_t) · x0`.
pub fn ddpm_mean(schedule: &NoiseSchedule, x_t: &[f64], x0: &[f64], t: usize) -> Result<Vec<f64>> {
    schedule.check_noisy(t)?;
    same_len(x_t, x0, "ddpm_mean")?;
    let (a, b, ab, ab_prev) = (
        schedule.alpha(t),
        schedule.beta(t),
        schedule.alpha_bar(t),
        schedule.alpha_bar(t - 1),
    );
    let cx = a.sqrt() * (1.0 - ab_prev) / (1.0 - ab);
    let c0 = ab_prev.sqrt() * b / (1.0 - ab);
    Ok(x_t.iter().zip(x0).map(|(x, c)| cx * x + c0 * c).collect())
}

/// Posterior standard deviation `sqrt(b_t (1 - ab_{t-1}) / (1 - ab_t))`.
pub fn ddpm_sigma(schedule: &NoiseSchedule, t: usize) -> Result<f64> {
    schedule.check_noisy(t)?;
    let (b, ab, ab_prev) = (schedule.beta(t), schedule.alpha_bar(t), schedule.alpha_bar(t - 1));
    Ok((b * (1.0 - ab_prev) / (1.0 - ab)).sqrt())
}

/// One ancestral DDPM step `t -> t-1`: posterior mean plus `sigma_t · fresh`.
pub fn ddpm_step(schedule: &NoiseSchedule, x_t: &[f64], x0: &[f64], t: usize, fresh: &[f64]) -> Result<Vec<f64>> {
    let mean = ddpm_mean(schedule, x_t, x0, t)?;
    same_len(&mean, fresh, "ddpm_step fresh noise")?;
    let sigma = ddpm_sigma(schedule, t)?;
    Ok(mean.iter().zip(fresh).map(|(m, z)| m + sigma * z).collect())
}

/// Time embedding added to the filter before gating. Zero mode returns
/// zeros; sinusoidal mode is the transformer positional encoding of `t`
/// (sin on even, cos on odd entries) scaled by [`EMBEDDING_SCALE`].
pub fn time_embedding(t: usize, levels: usize, mode: EmbeddingMode) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::Config(format!("time embedding needs at least 2 levels, got {levels}")));
    }
    Ok(match mode {
        EmbeddingMode::Zero => vec![0.0; levels],
        EmbeddingMode::Sinusoidal => (0..levels)
            .map(|i| {
                let pair = (i / 2) as f64;
                let freq = 10_000f64.powf(-2.0 * pair / levels as f64);
                let angle = t as f64 * freq;
                EMBEDDING_SCALE * if i % 2 == 0 { angle.sin() } else { angle.cos() }
            })
            .collect(),
    })
}

/// Standard normal volume whose column at pixel `p` is block `p` of `stream`.
fn gaussian_volume(noise: &NoiseSource, stream: u64, levels: usize, h: usize, w: usize) -> Array3<f64> {
    let mut out = Array3::<f64>::zeros((levels, h, w));
    let mut col = vec![0.0; levels];
    for y in 0..h {
        for x in 0..w {
            noise.gaussian_block(stream, (y * w + x) as u64, &mut col);
            for (k, &v) in col.iter().enumerate() {
                out[[k, y, x]] = v;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Renewal {
    pub volume: ProbabilityVolume,
    pub outliers: Array2<bool>,
    pub count: usize,
}

/// Resets the filter column of every outlier pixel to fresh Gaussian draws,
/// min-max rescaled to `[0, 1]` and then mapped to the signed state.
///
/// A pixel is an outlier when `|pred - baseline|` exceeds the disparity
/// threshold or the column entropy of `prob` exceeds the entropy threshold.
pub fn volume_renewal(
    filter: &ProbabilityVolume,
    pred: &DisparityMap,
    baseline: &DisparityMap,
    prob: &ProbabilityVolume,
    policy: &RenewalPolicy,
    noise: &NoiseSource,
    stream: u64,
) -> Result<Renewal> {
    let (levels, h, w) = filter.dim();
    if pred.dim() != (h, w) || baseline.dim() != (h, w) || prob.dim() != (levels, h, w) {
        return Err(Error::Shape(format!(
            "renewal inputs disagree: filter {:?}, prediction {:?}, baseline {:?}, probabilities {:?}",
            filter.dim(),
            pred.dim(),
            baseline.dim(),
            prob.dim()
        )));
    }
    if !policy.enabled {
        return Ok(Renewal { volume: filter.clone(), outliers: Array2::from_elem((h, w), false), count: 0 });
    }
    let entropy = entropy_map(prob)?;
    let max_entropy = policy.entropy_threshold_for(levels);
    let outliers = Array2::from_shape_fn((h, w), |(y, x)| {
        (pred.get(y, x) - baseline.get(y, x)).abs() > policy.disparity_threshold
            || entropy[[y, x]] > max_entropy
    });
    let mut volume = filter.clone();
    let mut col = vec![0.0; levels];
    let mut count = 0;
    for ((y, x), _) in outliers.indexed_iter().filter(|(_, &o)| o) {
        count += 1;
        noise.gaussian_block(stream, (y * w + x) as u64, &mut col);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for (k, &v) in col.iter().enumerate() {
            let unit = if span > 0.0 { (v - lo) / span } else { 0.5 };
            volume.values_mut()[[k, y, x]] = 2.0 * unit - 1.0;
        }
    }
    Ok(Renewal { volume, outliers, count })
}

/// Pixel-wise convex combination; the last weight applies to the baseline.
pub fn dense_integration(preds: &[DisparityMap], baseline: &DisparityMap, weights: &[f64]) -> Result<DisparityMap> {
    check_weights(weights, preds.len() + 1)?;
    if let Some(p) = preds.iter().find(|p| p.dim() != baseline.dim()) {
        return Err(Error::Shape(format!(
            "prediction {:?} does not match baseline {:?}",
            p.dim(),
            baseline.dim()
        )));
    }
    let mut values = baseline.values() * weights[preds.len()];
    let mut mask = baseline.mask().clone();
    for (p, &w) in preds.iter().zip(weights) {
        if w != 0.0 {
            values.scaled_add(w, p.values());
        }
        mask.zip_mut_with(p.mask(), |m, &v| *m &= v);
    }
    DisparityMap::new(values, mask)
}

fn clamp_levels(pred: &DisparityMap, levels: usize) -> Result<DisparityMap> {
    let max = (levels - 1) as f64;
    DisparityMap::new(pred.values().mapv(|v| v.clamp(0.0, max)), pred.mask().clone())
}

/// Runs the full reverse process on `base` (the unfiltered volume) with
/// `baseline` being the matcher's unfiltered prediction on it.
pub fn run_reverse<M: VolumeMatcher + ?Sized>(
    base: &CostVolume,
    matcher: &M,
    baseline: &DisparityMap,
    config: &SamplerConfig,
) -> Result<SamplerOutput> {
    config.validate()?;
    let (_, levels, h, w) = base.dim();
    if matcher.levels() != levels {
        return Err(Error::Shape(format!(
            "matcher expects {} levels, volume has {levels}",
            matcher.levels()
        )));
    }
    if baseline.dim() != (h, w) {
        return Err(Error::Shape(format!(
            "baseline {:?} does not match volume {:?}",
            baseline.dim(),
            (h, w)
        )));
    }
    let schedule = NoiseSchedule::cosine(config.timesteps)?;
    let grid = timestep_grid(config.timesteps, config.steps)?;
    let weights = config.resolved_weights();
    let noise = NoiseSource::new(config.seed);

    let mut filter = ProbabilityVolume::from_array(gaussian_volume(&noise, STREAM_INIT, levels, h, w))?;
    let mut out = SamplerOutput {
        timesteps: grid.clone(),
        predictions: Vec::with_capacity(config.steps),
        disparity: baseline.clone(),
        outlier_counts: Vec::with_capacity(config.steps),
        outlier_masks: Vec::with_capacity(config.steps),
        entropy_trace: Vec::with_capacity(config.steps),
        entropy_maps: Vec::with_capacity(config.steps),
        snapshots: Vec::new(),
    };
    if config.keep_snapshots {
        out.snapshots.push(filter.clone());
    }

    for (step, &t) in grid.iter().enumerate() {
        let t_prev = grid.get(step + 1).copied().unwrap_or(0);
        let embedding = time_embedding(t, levels, config.embedding)?;
        let filtered = filter_volume(base, &rescale_unit(&filter), &embedding)?;
        let (prob, pred) = matcher.predict(&filtered)?;

        let coarse = rescale_signed(&discretize_two_hot(&clamp_levels(&pred, levels)?, levels)?);
        let eps = schedule.recover_noise(filter.as_slice(), coarse.as_slice(), t)?;
        let fresh = if config.eta > 0.0 {
            gaussian_volume(&noise, STREAM_DDIM + step as u64, levels, h, w).into_raw_vec_and_offset().0
        } else {
            Vec::new()
        };
        let next = ddim_step(&schedule, coarse.as_slice(), &eps, t, t_prev, config.eta, &fresh)?;
        let denoised = ProbabilityVolume::from_vec(levels, h, w, next)?;

        let entropy = entropy_map(&filter_distribution(&denoised))?;
        out.entropy_trace.push(entropy.mean().unwrap_or(0.0));
        out.entropy_maps.push(entropy);
        if config.keep_snapshots {
            out.snapshots.push(denoised.clone());
        }

        let renewal = volume_renewal(
            &denoised,
            &pred,
            baseline,
            &prob,
            &config.renewal,
            &noise,
            STREAM_RENEWAL + step as u64,
        )?;
        out.outlier_counts.push(renewal.count);
        out.outlier_masks.push(renewal.outliers);
        filter = renewal.volume;
        out.predictions.push(pred);
    }

    out.disparity = dense_integration(&out.predictions, baseline, &weights)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{ClassicalMatcher, ImagePair, MatcherConfig};
    use ndarray::arr2;
    use proptest::prelude::*;

    fn cosine() -> NoiseSchedule {
        NoiseSchedule::cosine(1000).unwrap()
    }

    #[test]
    fn grid_for_five_steps() {
        assert_eq!(timestep_grid(1000, 5).unwrap(), vec![1000, 800, 600, 400, 200]);
        assert_eq!(timestep_grid(1000, 1).unwrap(), vec![1000]);
        let g = timestep_grid(10, 3).unwrap();
        assert_eq!(g, vec![10, 7, 4]);
        assert!(timestep_grid(3, 4).is_err());
        let g = timestep_grid(7, 7).unwrap();
        assert!(g.windows(2).all(|p| p[0] > p[1]) && *g.last().unwrap() >= 1);
    }

    #[test]
    fn default_weight_rules() {
        assert_eq!(default_weights(5), FIVE_STEP_WEIGHTS.to_vec());
        assert_eq!(default_weights(1), vec![0.5, 0.5]);
        assert_eq!(default_weights(2), vec![0.2, 0.3, 0.5]);
        for s in 1..12 {
            check_weights(&default_weights(s), s + 1).unwrap();
        }
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        let bad = SamplerConfig { steps: 4, ..SamplerConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SamplerConfig { weights: vec![0.1, 0.0, 0.0, 0.2, 0.3, 0.5], ..SamplerConfig::default() };
        assert!(bad.validate().is_err());
        let bad = SamplerConfig { eta: 1.5, ..SamplerConfig::default() };
        assert!(bad.validate().is_err());
        let ok = SamplerConfig { steps: 3, weights: Vec::new(), ..SamplerConfig::default() };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn ddim_eta_zero_is_deterministic() {
        let s = cosine();
        let c = ddim_coefficients(&s, 800, 600, 0.0).unwrap();
        assert_eq!(c.sigma, 0.0);
        let x0 = [0.5, -1.0];
        let eps = [0.3, 1.1];
        let a = ddim_step(&s, &x0, &eps, 800, 600, 0.0, &[]).unwrap();
        let b = ddim_step(&s, &x0, &eps, 800, 600, 0.0, &[9.0, 9.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ddim_to_clean_state_returns_estimate() {
        let s = cosine();
        let c = ddim_coefficients(&s, 200, 0, 0.0).unwrap();
        assert_eq!((c.clean, c.noise, c.sigma), (1.0, 0.0, 0.0));
        let x0 = [0.25, -0.75, 1.0];
        assert_eq!(ddim_step(&s, &x0, &[3.0, -2.0, 0.1], 200, 0, 0.0, &[]).unwrap(), x0.to_vec());
    }

    #[test]
    fn ddim_rejects_bad_order_and_large_sigma() {
        let s = cosine();
        assert!(ddim_coefficients(&s, 400, 400, 0.0).is_err());
        assert!(ddim_coefficients(&s, 400, 600, 0.0).is_err());
        assert!(ddim_coefficients(&s, 1001, 0, 0.0).is_err());
        assert!(matches!(ddim_coefficients(&s, 600, 400, 3.0), Err(Error::Config(_))));
        assert!(ddim_coefficients(&s, 600, 400, 1.0).is_ok());
    }

    #[test]
    fn ddim_deterministic_chain_lands_on_x0() {
        let s = cosine();
        let x0 = vec![0.6, -0.2, -1.0, 1.0];
        let eps = vec![-0.4, 1.3, 0.2, -2.0];
        for grid in [vec![1000, 800, 600, 400, 200], vec![999, 500, 3], vec![700]] {
            let mut x = s.q_sample(&x0, grid[0], &eps).unwrap();
            for (i, &t) in grid.iter().enumerate() {
                let t_prev = grid.get(i + 1).copied().unwrap_or(0);
                let e = s.recover_noise(&x, &x0, t).unwrap();
                x = ddim_step(&s, &x0, &e, t, t_prev, 0.0, &[]).unwrap();
                if t_prev > 0 {
                    let direct = s.q_sample(&x0, t_prev, &eps).unwrap();
                    for (a, b) in x.iter().zip(&direct) {
                        assert!((a - b).abs() < 1e-9);
                    }
                }
            }
            for (a, b) in x.iter().zip(&x0) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ddpm_zero_noise_is_mean() {
        let s = cosine();
        let xt = [0.3, -0.9];
        let x0 = [1.0, -1.0];
        assert_eq!(ddpm_step(&s, &xt, &x0, 300, &[0.0, 0.0]).unwrap(), ddpm_mean(&s, &xt, &x0, 300).unwrap());
        assert!(ddpm_step(&s, &xt, &x0, 0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn ddpm_first_step_is_clean_estimate() {
        let s = cosine();
        // At t = 1 the coefficient of x0 is beta_1 / (1 - ab_1) = 1 and the
        // coefficient of x_t vanishes.
        let m = ddpm_mean(&s, &[5.0], &[0.7], 1).unwrap();
        assert!((m[0] - 0.7).abs() < 1e-12);
        assert_eq!(ddpm_sigma(&s, 1).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn ddim_eta_one_matches_ddpm_mean(
            x_t in -3.0f64..3.0,
            x0 in -1.0f64..1.0,
            t in 1usize..=1000,
        ) {
            let s = cosine();
            let eps = s.recover_noise(&[x_t], &[x0], t).unwrap();
            let ddim = ddim_step(&s, &[x0], &eps, t, t - 1, 1.0, &[0.0]).unwrap();
            let ddpm = ddpm_mean(&s, &[x_t], &[x0], t).unwrap();
            prop_assert!((ddim[0] - ddpm[0]).abs() < 1e-9, "{} vs {}", ddim[0], ddpm[0]);
            let c = ddim_coefficients(&s, t, t - 1, 1.0).unwrap();
            prop_assert!((c.sigma - ddpm_sigma(&s, t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn embedding_modes() {
        assert_eq!(time_embedding(600, 8, EmbeddingMode::Zero).unwrap(), vec![0.0; 8]);
        let e = time_embedding(0, 6, EmbeddingMode::Sinusoidal).unwrap();
        assert_eq!(e, vec![0.0, 0.1, 0.0, 0.1, 0.0, 0.1]);
        assert!(time_embedding(5, 1, EmbeddingMode::Zero).is_err());
        assert!("cubic".parse::<EmbeddingMode>().is_err());
        assert_eq!("sinusoidal".parse::<EmbeddingMode>().unwrap(), EmbeddingMode::Sinusoidal);
    }

    #[test]
    fn embedding_distinct_on_grid() {
        let grid = timestep_grid(1000, 5).unwrap();
        let embs: Vec<Vec<f64>> =
            grid.iter().map(|&t| time_embedding(t, 32, EmbeddingMode::Sinusoidal).unwrap()).collect();
        for i in 0..embs.len() {
            for j in i + 1..embs.len() {
                let dist: f64 = embs[i].iter().zip(&embs[j]).map(|(a, b)| (a - b).powi(2)).sum();
                assert!(dist > 1e-6, "steps {i} and {j} collide");
            }
        }
    }

    fn one_hot_prob(levels: usize, h: usize, w: usize, level: usize) -> ProbabilityVolume {
        let mut v = Array3::zeros((levels, h, w));
        v.index_axis_mut(ndarray::Axis(0), level).fill(1.0);
        ProbabilityVolume::from_array(v).unwrap()
    }

    #[test]
    fn renewal_cases() {
        let (levels, h, w) = (6, 2, 3);
        let filter = ProbabilityVolume::from_array(Array3::from_elem((levels, h, w), 0.2)).unwrap();
        let base = DisparityMap::constant(h, w, 2.0).unwrap();
        let prob = one_hot_prob(levels, h, w, 2);
        let noise = NoiseSource::new(3);
        let policy = RenewalPolicy::default();

        let r = volume_renewal(&filter, &base, &base, &prob, &policy, &noise, 0).unwrap();
        assert_eq!(r.count, 0);
        assert_eq!(r.volume, filter);

        let mut vals = base.values().clone();
        vals[[1, 2]] = 4.0;
        let pred = DisparityMap::dense(vals).unwrap();
        let r = volume_renewal(&filter, &pred, &base, &prob, &policy, &noise, 0).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.outliers[[1, 2]]);
        let col = r.volume.column(1, 2).to_vec();
        assert!(col.iter().all(|v| (-1.0..=1.0).contains(v)));
        assert!(col.iter().any(|&v| v == -1.0) && col.contains(&1.0));
        for y in 0..h {
            for x in 0..w {
                if (y, x) != (1, 2) {
                    assert_eq!(r.volume.column(y, x), filter.column(y, x));
                }
            }
        }

        let off = volume_renewal(&filter, &pred, &base, &prob, &RenewalPolicy::disabled(), &noise, 0).unwrap();
        assert_eq!(off.count, 0);
        assert_eq!(off.volume, filter);
    }

    #[test]
    fn renewal_flags_flat_distributions() {
        let (levels, h, w) = (8, 1, 2);
        let filter = ProbabilityVolume::from_array(Array3::zeros((levels, h, w))).unwrap();
        let base = DisparityMap::constant(h, w, 3.5).unwrap();
        let mut prob = Array3::from_elem((levels, h, w), 1.0 / levels as f64);
        prob.slice_mut(ndarray::s![.., 0, 0]).fill(0.0);
        prob[[3, 0, 0]] = 1.0;
        let prob = ProbabilityVolume::from_array(prob).unwrap();
        let r = volume_renewal(&filter, &base, &base, &prob, &RenewalPolicy::default(), &NoiseSource::new(1), 0)
            .unwrap();
        assert_eq!(r.outliers, arr2(&[[false, true]]));
    }

    #[test]
    fn integration_cases() {
        let a = DisparityMap::dense(arr2(&[[1.0, 2.0]])).unwrap();
        let b = DisparityMap::dense(arr2(&[[3.0, 6.0]])).unwrap();
        let base = DisparityMap::dense(arr2(&[[5.0, 4.0]])).unwrap();
        assert_eq!(dense_integration(&[a.clone(), b.clone()], &base, &[0.0, 0.0, 1.0]).unwrap(), base);
        let same = dense_integration(&[a.clone(), a.clone()], &a, &[0.2, 0.3, 0.5]).unwrap();
        for (x, y) in same.values().iter().zip(a.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let mix = dense_integration(&[a.clone(), b.clone()], &base, &[0.25, 0.25, 0.5]).unwrap();
        assert_eq!(mix.values(), &arr2(&[[3.5, 4.0]]));
        assert!(dense_integration(std::slice::from_ref(&a), &base, &[0.2, 0.3, 0.5]).is_err());
        assert!(dense_integration(std::slice::from_ref(&a), &base, &[-0.5, 1.5]).is_err());
        assert!(dense_integration(&[a], &base, &[0.5, 0.6]).is_err());
    }

    fn small_scene() -> (CostVolume, ClassicalMatcher, DisparityMap) {
        let noise = NoiseSource::new(21);
        let (h, w, k) = (20, 40, 3);
        let wide = Array2::from_shape_vec((h, w + k), noise.uniform_field(0, 1, h * (w + k))).unwrap();
        let left = wide.slice(ndarray::s![.., ..w]).to_owned();
        let right = Array2::from_shape_fn((h, w), |(y, x)| wide[[y, x + k]]);
        let pair = ImagePair::new(left, right).unwrap();
        let m = ClassicalMatcher::new(MatcherConfig { max_disparity: 8, ..MatcherConfig::default() }).unwrap();
        let base = m.base_volume(&pair).unwrap();
        let (_, baseline) = m.predict(&base).unwrap();
        (base, m, baseline)
    }

    #[test]
    fn single_step_with_unit_weight_returns_prediction() {
        let (base, m, baseline) = small_scene();
        let cfg = SamplerConfig { steps: 1, weights: vec![1.0, 0.0], ..SamplerConfig::default() };
        let out = run_reverse(&base, &m, &baseline, &cfg).unwrap();
        assert_eq!(out.predictions.len(), 1);
        assert_eq!(out.timesteps, vec![1000]);
        for (a, b) in out.disparity.values().iter().zip(out.predictions[0].values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_output_shape_and_determinism() {
        let (base, m, baseline) = small_scene();
        let cfg = SamplerConfig { seed: 5, keep_snapshots: true, ..SamplerConfig::default() };
        let a = run_reverse(&base, &m, &baseline, &cfg).unwrap();
        let b = run_reverse(&base, &m, &baseline, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predictions.len(), 5);
        assert_eq!(a.outlier_counts.len(), 5);
        assert_eq!(a.entropy_trace.len(), 5);
        assert_eq!(a.snapshots.len(), 6);
        let c = run_reverse(&base, &m, &baseline, &SamplerConfig { seed: 6, ..cfg.clone() }).unwrap();
        assert_ne!(a.predictions[0], c.predictions[0]);

        let stochastic = SamplerConfig { eta: 1.0, ..cfg };
        let s1 = run_reverse(&base, &m, &baseline, &stochastic).unwrap();
        let s2 = run_reverse(&base, &m, &baseline, &stochastic).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn reverse_rejects_mismatched_baseline() {
        let (base, m, _) = small_scene();
        let wrong = DisparityMap::constant(3, 3, 1.0).unwrap();
        assert!(run_reverse(&base, &m, &wrong, &SamplerConfig::default()).is_err());
    }
}
