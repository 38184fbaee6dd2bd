//! Classical volume-based stereo matcher.
//!
//! Patch features stand in for learned features, the concatenation and
//! group-wise correlation volumes are built exactly as in the usual deep
//! pipelines, and aggregation is a channel mean followed by a spatial box
//! filter and a per-pixel softmax over disparity levels.
//!
//! Disparity convention: the left pixel at column `x` matches the right pixel
//! at column `x - d`. Levels with `x - d < 0` are zero-filled.

use ndarray::{s, Array2, Array3, Array4, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{soft_argmin, CostVolume, DisparityMap, ProbabilityVolume};

/// Contrast floor (intensity standard deviation) used when standardizing
/// patch features; flat patches therefore produce near-zero features.
pub const CONTRAST_FLOOR: f64 = 0.05;

/// Rectified grayscale stereo pair with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    left: Array2<f64>,
    right: Array2<f64>,
}

impl ImagePair {
    pub fn new(left: Array2<f64>, right: Array2<f64>) -> Result<Self> {
        if left.dim() != right.dim() {
            return Err(Error::Shape(format!(
                "left image {:?} and right image {:?} differ",
                left.dim(),
                right.dim()
            )));
        }
        if left.is_empty() {
            return Err(Error::Shape("empty image pair".into()));
        }
        if left.iter().chain(right.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("image contains NaN or Inf".into()));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &Array2<f64> {
        &self.left
    }

    pub fn right(&self) -> &Array2<f64> {
        &self.right
    }

    pub fn height(&self) -> usize {
        self.left.nrows()
    }

    pub fn width(&self) -> usize {
        self.left.ncols()
    }

    /// The pair viewed from the other camera, both images mirrored
    /// horizontally so the disparity direction stays positive.
    pub fn swapped_mirrored(&self) -> Self {
        Self {
            left: self.right.slice(s![.., ..;-1]).to_owned(),
            right: self.left.slice(s![.., ..;-1]).to_owned(),
        }
    }
}

/// N_c × H × W per-pixel descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    values: Array3<f64>,
}

impl FeatureMap {
    pub fn from_array(values: Array3<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("feature map contains NaN or Inf".into()));
        }
        Ok(Self { values })
    }

    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn height(&self) -> usize {
        self.values.dim().1
    }

    pub fn width(&self) -> usize {
        self.values.dim().2
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatcherConfig {
    /// Disparity search range at full resolution, in pixels.
    pub max_disparity: usize,
    /// Resolution reduction applied before matching (1 or 4).
    pub downsample: usize,
    /// Patch radius of the features; N_c = (2r + 1)².
    pub census_radius: usize,
    /// Correlation groups N_g; must divide N_c.
    pub groups: usize,
    /// Box-filter radius of the aggregation.
    pub aggregation_radius: usize,
    /// Softmax temperature.
    pub temperature: f64,
    /// Scale each patch to unit variance (with [`CONTRAST_FLOOR`]).
    pub standardize: bool,
    /// Weight of the concatenation-derived similarity in the base volume.
    pub concat_weight: f64,
    /// Constant added to every in-range entry of the base volume. With
    /// similarities bounded below by `-offset`, a zero filter weight then
    /// ranks a level below every surviving one instead of lifting it.
    pub similarity_offset: f64,
    /// Clamp negative base-volume entries to zero.
    pub rectify: bool,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            max_disparity: 64,
            downsample: 1,
            census_radius: 3,
            groups: 7,
            aggregation_radius: 1,
            temperature: 0.0075,
            standardize: true,
            concat_weight: 0.0,
            similarity_offset: 0.15,
            rectify: false,
        }
    }
}

impl MatcherConfig {
    pub fn feature_channels(&self) -> usize {
        let side = 2 * self.census_radius + 1;
        side * side
    }

    /// Disparity levels of the volumes, `max_disparity / downsample`.
    pub fn levels(&self) -> usize {
        self.max_disparity / self.downsample.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.downsample == 0 {
            return Err(Error::Config("downsample factor must be positive".into()));
        }
        if self.max_disparity == 0 || !self.max_disparity.is_multiple_of(self.downsample) {
            return Err(Error::Config(format!(
                "max disparity {} must be a positive multiple of the downsample factor {}",
                self.max_disparity, self.downsample
            )));
        }
        let channels = self.feature_channels();
        if self.groups == 0 || !channels.is_multiple_of(self.groups) {
            return Err(Error::Config(format!(
                "{} groups do not divide {channels} feature channels",
                self.groups
            )));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if !(0.0..=1.0).contains(&self.concat_weight) {
            return Err(Error::Config(format!(
                "concat weight {} outside [0, 1]",
                self.concat_weight
            )));
        }
        if !(self.similarity_offset >= 0.0 && self.similarity_offset.is_finite()) {
            return Err(Error::Config(format!(
                "similarity offset {} must be finite and >= 0",
                self.similarity_offset
            )));
        }
        Ok(())
    }
}

/// Centered (and optionally standardized) intensities of the
/// `(2r+1)×(2r+1)` window around every pixel, edges replicated.
pub fn extract_features(image: &Array2<f64>, config: &MatcherConfig) -> Result<FeatureMap> {
    let (h, w) = image.dim();
    let r = config.census_radius;
    let side = 2 * r + 1;
    if side > h || side > w {
        return Err(Error::Input(format!(
            "{side}x{side} feature window larger than {h}x{w} image"
        )));
    }
    let n = side * side;
    let mut out = Array3::<f64>::zeros((n, h, w));
    let mut patch = vec![0.0; n];
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    for y in 0..h {
        for x in 0..w {
            let mut i = 0;
            for dy in -(r as isize)..=(r as isize) {
                let yy = clamp(y as isize + dy, h);
                for dx in -(r as isize)..=(r as isize) {
                    patch[i] = image[[yy, clamp(x as isize + dx, w)]];
                    i += 1;
                }
            }
            let mean = patch.iter().sum::<f64>() / n as f64;
            let scale = if config.standardize {
                let var = patch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                1.0 / (var + CONTRAST_FLOOR * CONTRAST_FLOOR).sqrt()
            } else {
                1.0
            };
            for (c, v) in patch.iter().enumerate() {
                out[[c, y, x]] = (v - mean) * scale;
            }
        }
    }
    FeatureMap::from_array(out)
}

fn check_pair(left: &FeatureMap, right: &FeatureMap, levels: usize) -> Result<()> {
    if left.dim() != right.dim() {
        return Err(Error::Shape(format!(
            "left features {:?} and right features {:?} differ",
            left.dim(),
            right.dim()
        )));
    }
    if levels == 0 || levels > left.width() {
        return Err(Error::Config(format!(
            "{levels} disparity levels invalid for width {}",
            left.width()
        )));
    }
    Ok(())
}

/// Concatenation volume: channels `0..N_c` hold the left features, channels
/// `N_c..2N_c` the right features shifted by the level.
pub fn build_concat_volume(left: &FeatureMap, right: &FeatureMap, levels: usize) -> Result<CostVolume> {
    check_pair(left, right, levels)?;
    let (nc, h, w) = left.dim();
    let mut out = Array4::<f64>::zeros((2 * nc, levels, h, w));
    for d in 0..levels {
        for c in 0..nc {
            out.slice_mut(s![c, d, .., ..]).assign(&left.values.slice(s![c, .., ..]));
            out.slice_mut(s![nc + c, d, .., d..])
                .assign(&right.values.slice(s![c, .., ..w - d]));
        }
    }
    CostVolume::from_array(out)
}

/// Group-wise correlation volume:
/// `C[g, d, y, x] = (N_g / N_c) · <F_l^g(y, x), F_r^g(y, x - d)>`.
pub fn build_group_corr_volume(
    left: &FeatureMap,
    right: &FeatureMap,
    levels: usize,
    groups: usize,
) -> Result<CostVolume> {
    check_pair(left, right, levels)?;
    let (nc, h, w) = left.dim();
    if groups == 0 || nc % groups != 0 {
        return Err(Error::Config(format!("{groups} groups do not divide {nc} channels")));
    }
    let per_group = nc / groups;
    let norm = groups as f64 / nc as f64;
    let mut out = Array4::<f64>::zeros((groups, levels, h, w));
    for g in 0..groups {
        let lg = left.values.slice(s![g * per_group..(g + 1) * per_group, .., ..]);
        let rg = right.values.slice(s![g * per_group..(g + 1) * per_group, .., ..]);
        for d in 0..levels {
            let mut plane = out.slice_mut(s![g, d, .., d..]);
            for c in 0..per_group {
                let l = lg.slice(s![c, .., d..]);
                let r = rg.slice(s![c, .., ..w - d]);
                plane.zip_mut_with(&(&l * &r), |acc, v| *acc += v);
            }
            plane *= norm;
        }
    }
    CostVolume::from_array(out)
}

/// Similarity derived from a concatenation volume:
/// `-(1/N_c) · ||left half - right half||²`, zero where the right half is
/// out of range.
pub fn concat_similarity(concat: &CostVolume) -> Result<Array3<f64>> {
    let (c2, d, h, w) = concat.dim();
    if c2 % 2 != 0 {
        return Err(Error::Shape(format!("concatenation volume has odd channel count {c2}")));
    }
    let nc = c2 / 2;
    let v = concat.values();
    let mut out = Array3::<f64>::zeros((d, h, w));
    for k in 0..d {
        for c in 0..nc {
            let l = v.slice(s![c, k, .., k..]);
            let r = v.slice(s![nc + c, k, .., k..]);
            out.slice_mut(s![k, .., k..])
                .zip_mut_with(&(&l - &r), |acc, diff| *acc -= diff * diff);
        }
        out.slice_mut(s![k, .., ..]).mapv_inplace(|x| x / nc as f64);
    }
    Ok(out)
}

/// Base volume: the correlation volume blended with the concatenation-derived
/// similarity, `(1 - w) · corr + w · concat_similarity` (broadcast over groups).
pub fn fuse_volumes(corr: &CostVolume, concat: &CostVolume, weight: f64) -> Result<CostVolume> {
    let (g, d, h, w) = corr.dim();
    let (_, cd, ch, cw) = concat.dim();
    if (d, h, w) != (cd, ch, cw) {
        return Err(Error::Shape(format!(
            "correlation {:?} and concatenation {:?} volumes differ",
            corr.dim(),
            concat.dim()
        )));
    }
    if weight == 0.0 {
        return Ok(corr.clone());
    }
    let sim = concat_similarity(concat)?;
    let mut out = corr.values().to_owned() * (1.0 - weight);
    for gi in 0..g {
        out.slice_mut(s![gi, .., .., ..]).scaled_add(weight, &sim);
    }
    CostVolume::from_array(out)
}

/// Mean over channels, box filter of radius `r` per level (window clipped at
/// the borders), then softmax over levels at temperature `τ`.
pub fn aggregate(volume: &CostVolume, config: &MatcherConfig) -> Result<ProbabilityVolume> {
    if !(config.temperature > 0.0) {
        return Err(Error::Config("temperature must be positive".into()));
    }
    let (_, levels, h, w) = volume.dim();
    let mean = volume.values().mean_axis(Axis(0)).expect("non-empty channel axis");
    let mut scores = Array3::<f64>::zeros((levels, h, w));
    for k in 0..levels {
        let filtered = box_filter(&mean.index_axis(Axis(0), k).to_owned(), config.aggregation_radius);
        scores.index_axis_mut(Axis(0), k).assign(&filtered);
    }
    let inv_t = 1.0 / config.temperature;
    for y in 0..h {
        for x in 0..w {
            let mut col = scores.slice_mut(s![.., y, x]);
            let max = col.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            col.mapv_inplace(|v| ((v - max) * inv_t).exp());
            let sum = col.sum();
            col.mapv_inplace(|v| v / sum);
        }
    }
    ProbabilityVolume::from_array(scores)
}

/// Mean over the `(2r+1)²` window, clipped at the borders.
pub fn box_filter(plane: &Array2<f64>, radius: usize) -> Array2<f64> {
    if radius == 0 {
        return plane.clone();
    }
    let (h, w) = plane.dim();
    // Summed-area table with a zero first row/column.
    let mut sat = Array2::<f64>::zeros((h + 1, w + 1));
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += plane[[y, x]];
            sat[[y + 1, x + 1]] = sat[[y, x + 1]] + row;
        }
    }
    Array2::from_shape_fn((h, w), |(y, x)| {
        let (y0, y1) = (y.saturating_sub(radius), (y + radius + 1).min(h));
        let (x0, x1) = (x.saturating_sub(radius), (x + radius + 1).min(w));
        let sum = sat[[y1, x1]] - sat[[y0, x1]] - sat[[y1, x0]] + sat[[y0, x0]];
        sum / ((y1 - y0) * (x1 - x0)) as f64
    })
}

/// Aggregation followed by soft-argmin regression.
pub fn base_predict(volume: &CostVolume, config: &MatcherConfig) -> Result<(ProbabilityVolume, DisparityMap)> {
    let prob = aggregate(volume, config)?;
    let disparity = soft_argmin(&prob)?;
    Ok((prob, disparity))
}

/// Contract for any matcher that can be driven through a filtered volume.
///
/// `predict` must accept the base volume or any filtered copy of it and
/// return a normalized probability volume with the same level count, together
/// with its soft-argmin disparity (in the volume's own resolution and units).
pub trait VolumeMatcher {
    fn levels(&self) -> usize;

    fn predict(&self, volume: &CostVolume) -> Result<(ProbabilityVolume, DisparityMap)>;
}

/// Patch features, group correlation (optionally fused with concatenation)
/// and box-filter aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMatcher {
    config: MatcherConfig,
}

impl ClassicalMatcher {
    pub fn new(config: MatcherConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &MatcherConfig {
        &self.config
    }

    /// Base volume at the working resolution (`1/downsample` of the input).
    pub fn base_volume(&self, pair: &ImagePair) -> Result<CostVolume> {
        let f = self.config.downsample;
        let (left, right) = if f == 1 {
            (pair.left().clone(), pair.right().clone())
        } else {
            (downsample_image(pair.left(), f), downsample_image(pair.right(), f))
        };
        let fl = extract_features(&left, &self.config)?;
        let fr = extract_features(&right, &self.config)?;
        let levels = self.config.levels();
        let corr = build_group_corr_volume(&fl, &fr, levels, self.config.groups)?;
        let fused = if self.config.concat_weight == 0.0 {
            corr
        } else {
            let concat = build_concat_volume(&fl, &fr, levels)?;
            fuse_volumes(&corr, &concat, self.config.concat_weight)?
        };
        let shifted = offset_in_range(fused, self.config.similarity_offset);
        if !self.config.rectify {
            return Ok(shifted);
        }
        CostVolume::from_array(shifted.into_array().mapv_into(|v| v.max(0.0)))
    }
}

impl VolumeMatcher for ClassicalMatcher {
    fn levels(&self) -> usize {
        self.config.levels()
    }

    fn predict(&self, volume: &CostVolume) -> Result<(ProbabilityVolume, DisparityMap)> {
        if volume.levels() != self.levels() {
            return Err(Error::Shape(format!(
                "volume has {} levels, matcher expects {}",
                volume.levels(),
                self.levels()
            )));
        }
        base_predict(volume, &self.config)
    }
}

/// Adds `offset` to every entry whose level is in range (`x >= d`).
pub fn offset_in_range(volume: CostVolume, offset: f64) -> CostVolume {
    if offset == 0.0 {
        return volume;
    }
    let mut v = volume.into_array();
    let (_, levels, _, _) = v.dim();
    for d in 0..levels {
        v.slice_mut(s![.., d, .., d..]).mapv_inplace(|x| x + offset);
    }
    CostVolume::from_array(v).expect("offset keeps the volume finite")
}

/// Box average over `factor × factor` blocks; partial blocks at the
/// bottom/right edges average what is available.
pub fn downsample_image(image: &Array2<f64>, factor: usize) -> Array2<f64> {
    let (h, w) = image.dim();
    let (oh, ow) = (h.div_ceil(factor), w.div_ceil(factor));
    Array2::from_shape_fn((oh, ow), |(y, x)| {
        let block = image.slice(s![y * factor..((y + 1) * factor).min(h), x * factor..((x + 1) * factor).min(w)]);
        block.mean().unwrap_or(0.0)
    })
}
