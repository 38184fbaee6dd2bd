//! Stereo evaluation metrics.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::DisparityMap;

/// Default per-output weights of the multi-output L1 loss.
pub const DEFAULT_LOSS_WEIGHTS: [f64; 3] = [0.5, 0.7, 1.0];

fn errors(pred: &DisparityMap, gt: &DisparityMap, mask: &Array2<bool>) -> Result<Vec<(f64, f64)>> {
    if pred.dim() != gt.dim() || mask.dim() != gt.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?}, ground truth {:?} and mask {:?} must match",
            pred.dim(),
            gt.dim(),
            mask.dim()
        )));
    }
    let out: Vec<(f64, f64)> = pred
        .values()
        .iter()
        .zip(gt.values().iter())
        .zip(mask.iter())
        .filter(|(_, &m)| m)
        .map(|((&p, &g), _)| ((p - g).abs(), g))
        .collect();
    if out.is_empty() {
        return Err(Error::Input("evaluation mask selects no pixels".into()));
    }
    Ok(out)
}

/// Mean absolute disparity error over the masked pixels.
pub fn epe(pred: &DisparityMap, gt: &DisparityMap, mask: &Array2<bool>) -> Result<f64> {
    let errs = errors(pred, gt, mask)?;
    Ok(errs.iter().map(|(e, _)| e).sum::<f64>() / errs.len() as f64)
}

/// Percentage of masked pixels whose error is strictly larger than `threshold`.
pub fn bad_p(pred: &DisparityMap, gt: &DisparityMap, threshold: f64, mask: &Array2<bool>) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::Input(format!("bad-pixel threshold {threshold} must be positive")));
    }
    let errs = errors(pred, gt, mask)?;
    let bad = errs.iter().filter(|(e, _)| *e > threshold).count();
    Ok(100.0 * bad as f64 / errs.len() as f64)
}

/// Percentage of outliers with error > 3 px and > 5 % of the ground truth.
pub fn d1(pred: &DisparityMap, gt: &DisparityMap, mask: &Array2<bool>) -> Result<f64> {
    let errs = errors(pred, gt, mask)?;
    let bad = errs.iter().filter(|(e, g)| *e > 3.0 && *e > 0.05 * g).count();
    Ok(100.0 * bad as f64 / errs.len() as f64)
}

/// `sum_i weights[i] · mean|gt - preds[i]|` over masked pixels.
pub fn weighted_l1_loss(
    preds: &[DisparityMap],
    gt: &DisparityMap,
    weights: &[f64],
    mask: &Array2<bool>,
) -> Result<f64> {
    if preds.len() != weights.len() {
        return Err(Error::Input(format!(
            "{} predictions but {} loss weights",
            preds.len(),
            weights.len()
        )));
    }
    preds
        .iter()
        .zip(weights)
        .try_fold(0.0, |acc, (p, w)| Ok(acc + w * epe(p, gt, mask)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub epe: f64,
    pub bad_1: f64,
    pub bad_2: f64,
    pub bad_3: f64,
    pub d1_all: f64,
    pub pixels: usize,
}

impl MetricReport {
    pub fn compute(pred: &DisparityMap, gt: &DisparityMap, mask: &Array2<bool>) -> Result<Self> {
        Ok(Self {
            epe: epe(pred, gt, mask)?,
            bad_1: bad_p(pred, gt, 1.0, mask)?,
            bad_2: bad_p(pred, gt, 2.0, mask)?,
            bad_3: bad_p(pred, gt, 3.0, mask)?,
            d1_all: d1(pred, gt, mask)?,
            pixels: mask.iter().filter(|&&m| m).count(),
        })
    }

    /// Evaluates on the ground truth's own validity mask.
    pub fn against(pred: &DisparityMap, gt: &DisparityMap) -> Result<Self> {
        Self::compute(pred, gt, gt.mask())
    }

    /// Pixel-weighted mean of several reports.
    pub fn pooled(reports: &[MetricReport]) -> Option<Self> {
        let total: usize = reports.iter().map(|r| r.pixels).sum();
        if total == 0 {
            return None;
        }
        let avg = |f: fn(&MetricReport) -> f64| {
            reports.iter().map(|r| f(r) * r.pixels as f64).sum::<f64>() / total as f64
        };
        Some(Self {
            epe: avg(|r| r.epe),
            bad_1: avg(|r| r.bad_1),
            bad_2: avg(|r| r.bad_2),
            bad_3: avg(|r| r.bad_3),
            d1_all: avg(|r| r.d1_all),
            pixels: total,
        })
    }

    /// One `key=value` line per field.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "epe={:.6}", self.epe);
        let _ = writeln!(s, "bad_1={:.4}", self.bad_1);
        let _ = writeln!(s, "bad_2={:.4}", self.bad_2);
        let _ = writeln!(s, "bad_3={:.4}", self.bad_3);
        let _ = writeln!(s, "d1_all={:.4}", self.d1_all);
        let _ = writeln!(s, "pixels={}", self.pixels);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
