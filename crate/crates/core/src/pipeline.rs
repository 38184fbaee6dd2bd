//! End-to-end runs: baseline matching, the reverse process, evaluation.

use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{gen_stereogram, SceneSpec};
use crate::error::{Error, Result};
use crate::matcher::{ClassicalMatcher, ImagePair, VolumeMatcher};
use crate::metrics::MetricReport;
use crate::sampler::{run_reverse, time_embedding, EmbeddingMode, SamplerConfig, SamplerOutput};
use crate::volume::{
    discretize_two_hot, downsample_disparity, filter_volume, upsample_disparity, CostVolume, DisparityMap,
};

/// Result of running one stereo pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    /// Unfiltered matcher prediction at full resolution.
    pub baseline: DisparityMap,
    /// Integrated prediction at full resolution.
    pub disparity: DisparityMap,
    /// Sampler trace at the working resolution.
    pub sampler: SamplerOutput,
}

fn to_full(map: &DisparityMap, factor: usize, h: usize, w: usize) -> Result<DisparityMap> {
    if factor == 1 {
        Ok(map.clone())
    } else {
        upsample_disparity(map, factor, h, w)
    }
}

/// Baseline plus reverse process on `pair`.
pub fn run_pair(pair: &ImagePair, matcher: &ClassicalMatcher, sampler: &SamplerConfig) -> Result<PairRun> {
    let base = matcher.base_volume(pair)?;
    run_on_volume(pair, &base, matcher, sampler)
}

fn run_on_volume(
    pair: &ImagePair,
    base: &CostVolume,
    matcher: &ClassicalMatcher,
    sampler: &SamplerConfig,
) -> Result<PairRun> {
    let (_, baseline) = matcher.predict(base)?;
    let out = run_reverse(base, matcher, &baseline, sampler)?;
    let f = matcher.config().downsample;
    let (h, w) = (pair.height(), pair.width());
    Ok(PairRun {
        baseline: to_full(&baseline, f, h, w)?,
        disparity: to_full(&out.disparity, f, h, w)?,
        sampler: out,
    })
}

/// Prediction on the base volume gated by the two-hot ground truth (unit
/// state, zero embedding), at full resolution.
pub fn ground_truth_filter_prediction(
    base: &CostVolume,
    matcher: &ClassicalMatcher,
    gt: &DisparityMap,
) -> Result<DisparityMap> {
    let f = matcher.config().downsample;
    let levels = matcher.levels();
    let low = downsample_disparity(gt, f)?;
    let max = (levels - 1) as f64;
    let clipped = DisparityMap::new(low.values().mapv(|v| v.clamp(0.0, max)), low.mask().clone())?;
    let filter = discretize_two_hot(&clipped, levels)?;
    let filtered = filter_volume(base, &filter, &time_embedding(0, levels, EmbeddingMode::Zero)?)?;
    let (_, pred) = matcher.predict(&filtered)?;
    to_full(&pred, f, gt.height(), gt.width())
}

/// Per-scene evaluation of the baseline, the integrated result and the
/// ground-truth filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneReport {
    pub index: usize,
    pub baseline: MetricReport,
    pub diffusion: MetricReport,
    pub gt_filter: MetricReport,
    /// EPE of every individual step prediction.
    pub step_epe: Vec<f64>,
    pub outlier_counts: Vec<usize>,
    pub entropy_trace: Vec<f64>,
}

/// A scene evaluation together with the heavy per-pixel data.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRun {
    pub report: SceneReport,
    pub ground_truth: DisparityMap,
    pub run: PairRun,
}

pub fn evaluate_scene(
    index: usize,
    spec: &SceneSpec,
    matcher: &ClassicalMatcher,
    sampler: &SamplerConfig,
) -> Result<SceneRun> {
    if matcher.config().max_disparity < spec.max_disparity {
        return Err(Error::Config(format!(
            "scene {index} needs {} disparity levels, matcher searches {}",
            spec.max_disparity,
            matcher.config().max_disparity
        )));
    }
    let (pair, gt) = gen_stereogram(spec)?;
    let base = matcher.base_volume(&pair)?;
    let run = run_on_volume(&pair, &base, matcher, sampler)?;
    let gt_pred = ground_truth_filter_prediction(&base, matcher, &gt)?;
    let f = matcher.config().downsample;
    let step_epe = run
        .sampler
        .predictions
        .iter()
        .map(|p| Ok(MetricReport::against(&to_full(p, f, gt.height(), gt.width())?, &gt)?.epe))
        .collect::<Result<Vec<_>>>()?;
    let report = SceneReport {
        index,
        baseline: MetricReport::against(&run.baseline, &gt)?,
        diffusion: MetricReport::against(&run.disparity, &gt)?,
        gt_filter: MetricReport::against(&gt_pred, &gt)?,
        step_epe,
        outlier_counts: run.sampler.outlier_counts.clone(),
        entropy_trace: run.sampler.entropy_trace.clone(),
    };
    Ok(SceneRun { report, ground_truth: gt, run })
}

/// Evaluates every scene in parallel; results keep the input order.
pub fn evaluate_suite(specs: &[SceneSpec], matcher: &ClassicalMatcher, sampler: &SamplerConfig) -> Result<Vec<SceneRun>> {
    specs
        .par_iter()
        .enumerate()
        .map(|(i, s)| evaluate_scene(i, s, matcher, sampler))
        .collect()
}

/// Suite-level aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub baseline: MetricReport,
    pub diffusion: MetricReport,
    pub gt_filter: MetricReport,
    /// Mean over scenes of `(baseline EPE - diffusion EPE) / baseline EPE`.
    pub mean_relative_improvement: f64,
    /// Renewed pixels per step, summed over scenes.
    pub outlier_counts: Vec<usize>,
}

impl SuiteSummary {
    pub fn from_reports(reports: &[SceneReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::Input("no scenes to summarize".into()));
        }
        let pool = |f: fn(&SceneReport) -> MetricReport| {
            MetricReport::pooled(&reports.iter().map(f).collect::<Vec<_>>())
                .ok_or_else(|| Error::Input("scenes contain no valid pixels".into()))
        };
        let steps = reports.iter().map(|r| r.outlier_counts.len()).max().unwrap_or(0);
        let mut outlier_counts = vec![0; steps];
        for r in reports {
            for (acc, c) in outlier_counts.iter_mut().zip(&r.outlier_counts) {
                *acc += c;
            }
        }
        let rel: f64 = reports
            .iter()
            .map(|r| {
                if r.baseline.epe > 0.0 {
                    (r.baseline.epe - r.diffusion.epe) / r.baseline.epe
                } else {
                    0.0
                }
            })
            .sum::<f64>()
            / reports.len() as f64;
        Ok(Self {
            baseline: pool(|r| r.baseline)?,
            diffusion: pool(|r| r.diffusion)?,
            gt_filter: pool(|r| r.gt_filter)?,
            mean_relative_improvement: rel,
            outlier_counts,
        })
    }
}

/// Fixed-width comparison of baseline and filtered results per scene.
pub fn comparison_table(reports: &[SceneReport]) -> Result<String> {
    let summary = SuiteSummary::from_reports(reports)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>10} {:>10} {:>10} {:>9} {:>9} {:>9}",
        "scene", "epe_base", "epe_diff", "epe_gt", "bad1_base", "bad1_diff", "d1_diff"
    );
    let row = |s: &mut String, name: &str, b: &MetricReport, d: &MetricReport, g: &MetricReport| {
        let _ = writeln!(
            s,
            "{:>5} {:>10.4} {:>10.4} {:>10.4} {:>9.2} {:>9.2} {:>9.2}",
            name, b.epe, d.epe, g.epe, b.bad_1, d.bad_1, d.d1_all
        );
    };
    for r in reports {
        row(&mut s, &r.index.to_string(), &r.baseline, &r.diffusion, &r.gt_filter);
    }
    row(&mut s, "all", &summary.baseline, &summary.diffusion, &summary.gt_filter);
    let _ = writeln!(s, "mean relative improvement: {:.2}%", 100.0 * summary.mean_relative_improvement);
    let counts: Vec<String> = summary.outlier_counts.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(s, "renewed pixels per step: {}", counts.join(" "));
    Ok(s)
}

/// Per-step entropy at the requested `(x, y)` pixels (working resolution),
/// one row per pixel.
pub fn entropy_at(output: &SamplerOutput, pixels: &[(usize, usize)]) -> Result<Vec<Vec<f64>>> {
    let Some(first) = output.entropy_maps.first() else {
        return Ok(vec![Vec::new(); pixels.len()]);
    };
    let (h, w) = first.dim();
    pixels
        .iter()
        .map(|&(x, y)| {
            if x >= w || y >= h {
                return Err(Error::Input(format!("probe pixel (x={x}, y={y}) outside {w}x{h}")));
            }
            Ok(output.entropy_maps.iter().map(|m| m[[y, x]]).collect())
        })
        .collect()
}

/// Fraction of pixels whose entropy strictly decreases across all steps.
pub fn decreasing_fraction(maps: &[Array2<f64>], mask: Option<&Array2<bool>>) -> f64 {
    let Some(first) = maps.first() else {
        return 0.0;
    };
    let mut total = 0usize;
    let mut hits = 0usize;
    for ((y, x), _) in first.indexed_iter() {
        if mask.is_some_and(|m| !m[[y, x]]) {
            continue;
        }
        total += 1;
        if maps.windows(2).all(|p| p[1][[y, x]] < p[0][[y, x]]) {
            hits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Per-step entropy maps averaged over scenes of equal working size.
pub fn mean_entropy_maps(runs: &[SceneRun]) -> Result<Vec<Array2<f64>>> {
    let Some(first) = runs.first() else {
        return Err(Error::Input("no scenes to average".into()));
    };
    let mut acc = first.run.sampler.entropy_maps.clone();
    for r in &runs[1..] {
        let maps = &r.run.sampler.entropy_maps;
        if maps.len() != acc.len() || maps.iter().zip(&acc).any(|(a, b)| a.dim() != b.dim()) {
            return Err(Error::Shape(format!("scene {} entropy maps differ in shape", r.report.index)));
        }
        for (a, m) in acc.iter_mut().zip(maps) {
            *a += m;
        }
    }
    let n = runs.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}
