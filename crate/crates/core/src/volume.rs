//! Disparity maps, per-pixel disparity distributions and matching-cost volumes,
//! plus the conversions between them.
//!
//! Layout conventions: a [`ProbabilityVolume`] is indexed `[level, row, col]`
//! and a [`CostVolume`] is indexed `[channel, level, row, col]`. Rows are `y`,
//! columns are `x`.

use ndarray::{Array2, Array3, Array4, ArrayView1, Axis, Zip};

use crate::error::{Error, Result};

/// Tolerance used by [`soft_argmin`] when checking column normalization.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-4;

/// H×W grid of disparities in pixels with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    values: Array2<f64>,
    mask: Array2<bool>,
}

impl DisparityMap {
    pub fn new(values: Array2<f64>, mask: Array2<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::Shape(format!(
                "disparity values {:?} vs mask {:?}",
                values.dim(),
                mask.dim()
            )));
        }
        let (h, w) = values.dim();
        if h == 0 || w == 0 {
            return Err(Error::Shape("disparity map must be non-empty".into()));
        }
        for (((y, x), &v), &m) in values.indexed_iter().zip(mask.iter()) {
            if m && !v.is_finite() {
                return Err(Error::Input(format!(
                    "non-finite disparity {v} at valid pixel (x={x}, y={y})"
                )));
            }
        }
        Ok(Self { values, mask })
    }

    /// Every pixel valid.
    pub fn dense(values: Array2<f64>) -> Result<Self> {
        let mask = Array2::from_elem(values.dim(), true);
        Self::new(values, mask)
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::dense(Array2::from_elem((height, width), value))
    }

    pub fn height(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.values[[y, x]]
    }

    pub fn is_valid(&self, y: usize, x: usize) -> bool {
        self.mask[[y, x]]
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn into_parts(self) -> (Array2<f64>, Array2<bool>) {
        (self.values, self.mask)
    }

    /// Same values, different mask.
    pub fn with_mask(&self, mask: Array2<bool>) -> Result<Self> {
        Self::new(self.values.clone(), mask)
    }

    /// Largest valid value, or `None` when nothing is valid.
    pub fn max_valid(&self) -> Option<f64> {
        self.values
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }
}

/// D×H×W grid of per-pixel weights over disparity levels.
///
/// The same container holds the probability state (non-negative columns that
/// sum to one) and the signed state used by the diffusion algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume {
    values: Array3<f64>,
}

impl ProbabilityVolume {
    pub fn from_array(values: Array3<f64>) -> Result<Self> {
        let (d, h, w) = values.dim();
        if d == 0 || h == 0 || w == 0 {
            return Err(Error::Shape(format!("empty volume {:?}", values.dim())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("volume contains NaN or Inf".into()));
        }
        Ok(Self { values: values.as_standard_layout().into_owned() })
    }

    /// Wraps a flat `[level, row, col]` buffer.
    pub fn from_vec(levels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        let values = Array3::from_shape_vec((levels, height, width), data)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::from_array(values)
    }

    pub fn uniform(levels: usize, height: usize, width: usize) -> Result<Self> {
        Self::from_array(Array3::from_elem((levels, height, width), 1.0 / levels as f64))
    }

    pub fn levels(&self) -> usize {
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

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn into_array(self) -> Array3<f64> {
        self.values
    }

    /// Contiguous `[level, row, col]` data.
    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice().expect("standard layout")
    }

    pub fn column(&self, y: usize, x: usize) -> ArrayView1<'_, f64> {
        self.values.slice(ndarray::s![.., y, x])
    }

    /// Fails with [`Error::NotNormalized`] on the first column whose sum is
    /// further than `tolerance` from one.
    pub fn check_normalized(&self, tolerance: f64) -> Result<()> {
        let sums = self.values.sum_axis(Axis(0));
        for ((y, x), &sum) in sums.indexed_iter() {
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::NotNormalized { x, y, sum });
            }
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.mapv(f) }
    }
}

/// C×D×H×W matching volume, similarity convention (higher is a better match).
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    values: Array4<f64>,
}

impl CostVolume {
    pub fn from_array(values: Array4<f64>) -> Result<Self> {
        let (c, d, h, w) = values.dim();
        if c == 0 || d == 0 || h == 0 || w == 0 {
            return Err(Error::Shape(format!("empty cost volume {:?}", values.dim())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("cost volume contains NaN or Inf".into()));
        }
        Ok(Self { values: values.as_standard_layout().into_owned() })
    }

    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn levels(&self) -> usize {
        self.values.dim().1
    }

    pub fn height(&self) -> usize {
        self.values.dim().2
    }

    pub fn width(&self) -> usize {
        self.values.dim().3
    }

    pub fn dim(&self) -> (usize, usize, usize, usize) {
        self.values.dim()
    }

    pub fn values(&self) -> &Array4<f64> {
        &self.values
    }

    pub fn into_array(self) -> Array4<f64> {
        self.values
    }
}

/// Two-hot encoding of a disparity map over `levels` integer levels.
///
/// A valid disparity `d` puts `1 - frac(d)` on `floor(d)` and `frac(d)` on
/// `floor(d) + 1`. Invalid pixels receive a uniform column.
pub fn discretize_two_hot(disparity: &DisparityMap, levels: usize) -> Result<ProbabilityVolume> {
    if levels == 0 {
        return Err(Error::Config("level count must be positive".into()));
    }
    let (h, w) = disparity.dim();
    let max = (levels - 1) as f64;
    let mut out = Array3::<f64>::zeros((levels, h, w));
    let uniform = 1.0 / levels as f64;
    for y in 0..h {
        for x in 0..w {
            if !disparity.is_valid(y, x) {
                out.slice_mut(ndarray::s![.., y, x]).fill(uniform);
                continue;
            }
            let d = disparity.get(y, x);
            if !(0.0..=max).contains(&d) {
                return Err(Error::DisparityRange { x, y, value: d, max });
            }
            let lo = d.floor();
            let frac = d - lo;
            let lo = lo as usize;
            if frac > 0.0 {
                out[[lo, y, x]] = 1.0 - frac;
                out[[lo + 1, y, x]] = frac;
            } else {
                out[[lo, y, x]] = 1.0;
            }
        }
    }
    ProbabilityVolume::from_array(out)
}

/// Expected disparity level per pixel: `sum_k k * P(k)`.
pub fn soft_argmin(volume: &ProbabilityVolume) -> Result<DisparityMap> {
    volume.check_normalized(NORMALIZATION_TOLERANCE)?;
    let (levels, h, w) = volume.dim();
    let mut out = Array2::<f64>::zeros((h, w));
    for k in 0..levels {
        let plane = volume.values.index_axis(Axis(0), k);
        let level = k as f64;
        Zip::from(&mut out).and(&plane).for_each(|o, &p| *o += level * p);
    }
    DisparityMap::dense(out)
}

/// Maps `[0, 1]` onto `[-1, 1]` via `2x - 1`. No clamping.
pub fn rescale_signed(volume: &ProbabilityVolume) -> ProbabilityVolume {
    volume.map(|v| 2.0 * v - 1.0)
}

/// Inverse of [`rescale_signed`]: `(x + 1) / 2`. No clamping.
pub fn rescale_unit(volume: &ProbabilityVolume) -> ProbabilityVolume {
    volume.map(|v| (v + 1.0) / 2.0)
}

/// Per-pixel Shannon entropy in nats, with `0 log 0 = 0`.
pub fn entropy_map(volume: &ProbabilityVolume) -> Result<Array2<f64>> {
    let (levels, h, w) = volume.dim();
    let mut out = Array2::<f64>::zeros((h, w));
    for k in 0..levels {
        for y in 0..h {
            for x in 0..w {
                let p = volume.values[[k, y, x]];
                if p < 0.0 {
                    return Err(Error::NegativeProbability { x, y, value: p });
                }
                if p > 0.0 {
                    out[[y, x]] -= p * p.ln();
                }
            }
        }
    }
    Ok(out)
}

/// Turns an arbitrary (signed-state) filter into per-pixel distributions:
/// rescale to unit state, clamp negatives to zero and normalize each column.
/// All-zero columns become uniform.
pub fn filter_distribution(signed: &ProbabilityVolume) -> ProbabilityVolume {
    let (levels, h, w) = signed.dim();
    let mut out = rescale_unit(signed).into_array().mapv_into(|v| v.max(0.0));
    for y in 0..h {
        for x in 0..w {
            let mut col = out.slice_mut(ndarray::s![.., y, x]);
            let sum: f64 = col.sum();
            if sum > 0.0 {
                col.mapv_inplace(|v| v / sum);
            } else {
                col.fill(1.0 / levels as f64);
            }
        }
    }
    ProbabilityVolume { values: out }
}

/// Element-wise filtering of a cost volume:
/// `out[c, k, y, x] = base[c, k, y, x] * (filter[k, y, x] + embedding[k])`.
pub fn filter_volume(
    base: &CostVolume,
    filter: &ProbabilityVolume,
    embedding: &[f64],
) -> Result<CostVolume> {
    let (_, d, h, w) = base.dim();
    if filter.dim() != (d, h, w) {
        return Err(Error::Shape(format!(
            "filter {:?} does not match cost volume levels/height/width {:?}",
            filter.dim(),
            (d, h, w)
        )));
    }
    if embedding.len() != d {
        return Err(Error::Shape(format!(
            "time embedding has length {}, expected {d}",
            embedding.len()
        )));
    }
    let mut gate = filter.values.clone();
    for (k, mut plane) in gate.axis_iter_mut(Axis(0)).enumerate() {
        plane += embedding[k];
    }
    let mut out = base.values.clone();
    for mut channel in out.axis_iter_mut(Axis(0)) {
        channel *= &gate;
    }
    Ok(CostVolume { values: out })
}

/// Nearest sampling at stride `factor`, values divided by `factor`.
///
/// Sizes that are not multiples of `factor` round up, which is the same as
/// edge-padding the input to the next multiple.
pub fn downsample_disparity(disparity: &DisparityMap, factor: usize) -> Result<DisparityMap> {
    if factor == 0 {
        return Err(Error::Config("downsample factor must be positive".into()));
    }
    if factor == 1 {
        return Ok(disparity.clone());
    }
    let (h, w) = disparity.dim();
    let (oh, ow) = (h.div_ceil(factor), w.div_ceil(factor));
    let scale = factor as f64;
    let values = Array2::from_shape_fn((oh, ow), |(y, x)| disparity.get(y * factor, x * factor) / scale);
    let mask = Array2::from_shape_fn((oh, ow), |(y, x)| disparity.is_valid(y * factor, x * factor));
    DisparityMap::new(values, mask)
}

/// Nearest upsampling by `factor` with values scaled back to full-resolution
/// pixel units, cropped to `height` × `width`.
pub fn upsample_disparity(
    disparity: &DisparityMap,
    factor: usize,
    height: usize,
    width: usize,
) -> Result<DisparityMap> {
    if factor == 0 {
        return Err(Error::Config("upsample factor must be positive".into()));
    }
    let (h, w) = disparity.dim();
    if height.div_ceil(factor) != h || width.div_ceil(factor) != w {
        return Err(Error::Shape(format!(
            "cannot upsample {h}x{w} by {factor} to {height}x{width}"
        )));
    }
    let scale = factor as f64;
    let values =
        Array2::from_shape_fn((height, width), |(y, x)| disparity.get(y / factor, x / factor) * scale);
    let mask = Array2::from_shape_fn((height, width), |(y, x)| disparity.is_valid(y / factor, x / factor));
    DisparityMap::new(values, mask)
}
