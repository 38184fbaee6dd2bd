//! Seeded random-dot stereograms with analytic ground truth.
//!
//! The ground truth is a left-view field: a background plane with optional
//! rectangular planar patches (later patches are in front). The right image
//! is rendered by solving, for every right pixel, which left surface point
//! lands on it; the nearest (largest disparity) wins and pixels no surface
//! reaches are filled with fresh texture.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::ImagePair;
use crate::rng::NoiseSource;
use crate::volume::DisparityMap;

const STREAM_TEXTURE: u64 = 1;
const STREAM_FILL: u64 = 2;
const STREAM_NOISE_LEFT: u64 = 3;
const STREAM_NOISE_RIGHT: u64 = 4;
const STREAM_SUITE: u64 = 5;

/// Grey level of pixels without a dot.
pub const BACKGROUND_LEVEL: f64 = 0.5;

/// Largest accepted horizontal slope; keeps the left-to-right mapping monotone.
pub const MAX_SLOPE: f64 = 0.5;

/// `d(x, y) = a·x + b·y + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Plane {
    pub fn constant(c: f64) -> Self {
        Self { a: 0.0, b: 0.0, c }
    }

    pub fn at(&self, x: f64, y: f64) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

/// Planar patch covering columns `x0..x1` and rows `y0..y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub plane: Plane,
}

impl Patch {
    fn covers_row(&self, y: usize) -> bool {
        (self.y0..self.y1).contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisparityModel {
    Constant { disparity: f64 },
    Planar { background: Plane, patches: Vec<Patch> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    /// Number of disparity levels the scene is meant for; the field stays
    /// inside `[0, max_disparity - 1]`.
    pub max_disparity: usize,
    pub model: DisparityModel,
    /// Fraction of textured pixels, in `(0, 1]`.
    pub texture_density: f64,
    /// Standard deviation of the additive image noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SceneSpec {
    fn surfaces(&self) -> (Plane, &[Patch]) {
        match &self.model {
            DisparityModel::Constant { disparity } => (Plane::constant(*disparity), &[]),
            DisparityModel::Planar { background, patches } => (*background, patches.as_slice()),
        }
    }

    /// Surface visible at continuous column `x` of row `y` in the left view.
    /// Pixel `x` belongs to a patch when `x0 <= x < x1`, so the continuous
    /// extent is `[x0 - 0.5, x1 - 0.5)`.
    fn plane_at(&self, x: f64, y: usize) -> Plane {
        let (background, patches) = self.surfaces();
        patches
            .iter()
            .rev()
            .find(|p| p.covers_row(y) && x >= p.x0 as f64 - 0.5 && x < p.x1 as f64 - 0.5)
            .map(|p| p.plane)
            .unwrap_or(background)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("scene must be at least 1x1".into()));
        }
        if self.max_disparity < 2 {
            return Err(Error::Config("scene needs at least 2 disparity levels".into()));
        }
        if !(self.texture_density > 0.0 && self.texture_density <= 1.0) {
            return Err(Error::Config(format!("texture density {} outside (0, 1]", self.texture_density)));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::Config(format!("noise sigma {} must be finite and >= 0", self.noise_sigma)));
        }
        let (background, patches) = self.surfaces();
        for plane in std::iter::once(&background).chain(patches.iter().map(|p| &p.plane)) {
            if !(plane.a.abs() < MAX_SLOPE) || !plane.b.is_finite() || !plane.c.is_finite() {
                return Err(Error::Config(format!("plane {plane:?} must be finite with |a| < {MAX_SLOPE}")));
            }
        }
        for p in patches {
            if p.x0 >= p.x1 || p.y0 >= p.y1 || p.x1 > self.width || p.y1 > self.height {
                return Err(Error::Config(format!(
                    "patch {:?} is empty or leaves the {}x{} frame",
                    (p.x0, p.y0, p.x1, p.y1),
                    self.width,
                    self.height
                )));
            }
        }
        let max = (self.max_disparity - 1) as f64;
        let field = self.field();
        if let Some(((y, x), v)) = field.indexed_iter().find(|(_, v)| !(0.0..=max).contains(*v)) {
            return Err(Error::Config(format!(
                "ground truth {v} at (x={x}, y={y}) outside [0, {max}]"
            )));
        }
        Ok(())
    }

    fn field(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.height, self.width), |(y, x)| {
            self.plane_at(x as f64, y).at(x as f64, y as f64)
        })
    }

    /// Left-view ground truth. Pixels whose match falls left of the right
    /// frame (`x - d < 0`) are marked invalid.
    pub fn ground_truth(&self) -> Result<DisparityMap> {
        self.validate()?;
        let values = self.field();
        let mask = Array2::from_shape_fn(values.dim(), |(y, x)| x as f64 - values[[y, x]] >= 0.0);
        DisparityMap::new(values, mask)
    }

    /// Right-view disparity: right pixel `x` shows left point `x + d_R(x)`.
    /// Invalid where no left surface point maps onto the pixel.
    pub fn right_disparity(&self) -> Result<DisparityMap> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let mut values = Array2::zeros((h, w));
        let mut mask = Array2::from_elem((h, w), false);
        let (_, patches) = self.surfaces();
        for y in 0..h {
            // Elementary intervals of the row on which a single plane applies.
            let mut cuts = vec![-0.5, w as f64 - 0.5];
            for p in patches.iter().filter(|p| p.covers_row(y)) {
                cuts.push(p.x0 as f64 - 0.5);
                cuts.push(p.x1 as f64 - 0.5);
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let segments: Vec<(f64, f64, Plane)> = cuts
                .windows(2)
                .map(|c| (c[0], c[1], self.plane_at(0.5 * (c[0] + c[1]), y)))
                .collect();
            for x in 0..w {
                let xr = x as f64;
                let mut best: Option<f64> = None;
                for &(lo, hi, plane) in &segments {
                    // x' - d(x') = xr  =>  x' = (xr + b·y + c) / (1 - a)
                    let k = plane.b * y as f64 + plane.c;
                    let xl = (xr + k) / (1.0 - plane.a);
                    if xl >= lo && xl < hi && xl >= 0.0 && xl <= (w - 1) as f64 {
                        let d = xl - xr;
                        if best.is_none_or(|b| d > b) {
                            best = Some(d);
                        }
                    }
                }
                if let Some(d) = best {
                    values[[y, x]] = d;
                    mask[[y, x]] = true;
                }
            }
        }
        DisparityMap::new(values, mask)
    }
}

/// Random-dot texture: each pixel is a dot of uniform intensity with
/// probability `density`, otherwise [`BACKGROUND_LEVEL`].
pub fn random_dot_texture(height: usize, width: usize, density: f64, noise: &NoiseSource, stream: u64) -> Array2<f64> {
    let u = noise.uniform_field(stream, height * width, 2);
    Array2::from_shape_fn((height, width), |(y, x)| {
        let i = 2 * (y * width + x);
        if u[i] < density {
            u[i + 1]
        } else {
            BACKGROUND_LEVEL
        }
    })
}

/// Renders the right view: `right(y, x) = left(y, x + d)` with linear
/// interpolation along the row. Pixels with an invalid disparity, or whose
/// source leaves the frame, take the value of `fill`.
pub fn warp_with_disparity(left: &Array2<f64>, disparity: &DisparityMap, fill: &Array2<f64>) -> Result<Array2<f64>> {
    if disparity.dim() != left.dim() || fill.dim() != left.dim() {
        return Err(Error::Shape(format!(
            "image {:?}, disparity {:?} and fill {:?} must match",
            left.dim(),
            disparity.dim(),
            fill.dim()
        )));
    }
    let w = left.ncols();
    Ok(Array2::from_shape_fn(left.dim(), |(y, x)| {
        let src = x as f64 + disparity.get(y, x);
        if !disparity.is_valid(y, x) || !(src >= 0.0 && src <= (w - 1) as f64) {
            return fill[[y, x]];
        }
        let i = src.floor() as usize;
        let f = src - i as f64;
        if f == 0.0 || i + 1 >= w {
            left[[y, i]]
        } else {
            (1.0 - f) * left[[y, i]] + f * left[[y, i + 1]]
        }
    }))
}

fn add_noise(img: &mut Array2<f64>, sigma: f64, noise: &NoiseSource, stream: u64) {
    if sigma == 0.0 {
        return;
    }
    let n = noise.gaussian_field(stream, 1, img.len());
    for (v, z) in img.iter_mut().zip(n) {
        *v = (*v + sigma * z).clamp(0.0, 1.0);
    }
}

/// Renders the stereo pair and its left-view ground truth.
pub fn gen_stereogram(spec: &SceneSpec) -> Result<(ImagePair, DisparityMap)> {
    let gt = spec.ground_truth()?;
    let right_d = spec.right_disparity()?;
    let noise = NoiseSource::new(spec.seed);
    let (h, w) = (spec.height, spec.width);
    let mut left = random_dot_texture(h, w, spec.texture_density, &noise, STREAM_TEXTURE);
    let fill = random_dot_texture(h, w, spec.texture_density, &noise, STREAM_FILL);
    let mut right = warp_with_disparity(&left, &right_d, &fill)?;
    add_noise(&mut left, spec.noise_sigma, &noise, STREAM_NOISE_LEFT);
    add_noise(&mut right, spec.noise_sigma, &noise, STREAM_NOISE_RIGHT);
    Ok((ImagePair::new(left, right)?, gt))
}

/// Parameters of [`default_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub scenes: usize,
    pub width: usize,
    pub height: usize,
    pub max_disparity: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { scenes: 20, width: 64, height: 64, max_disparity: 32, noise_sigma: 0.01, seed: 2024 }
    }
}

/// Texture densities cycled over the suite.
pub const SUITE_DENSITIES: [f64; 3] = [1.0, 0.5, 0.1];

/// Evaluation suite: even scenes have constant disparity, odd scenes a
/// tilted background with one or two fronto-tilted patches in front.
/// Densities cycle through [`SUITE_DENSITIES`]. Disparities stay within the
/// lower 90 % of the level range.
pub fn default_suite(config: &SuiteConfig) -> Result<Vec<SceneSpec>> {
    if config.max_disparity < 8 || config.width < 8 || config.height < 8 {
        return Err(Error::Config("suite scenes need at least 8x8 pixels and 8 levels".into()));
    }
    let noise = NoiseSource::new(config.seed);
    let top = 0.9 * (config.max_disparity - 1) as f64;
    let (w, h) = (config.width as f64, config.height as f64);
    let (cx, cy) = (0.5 * (w - 1.0), 0.5 * (h - 1.0));
    // Slopes bounded so a plane varies by at most 10 % of the range over the frame.
    let max_slope = 0.05 * top / w.max(h);
    let specs = (0..config.scenes)
        .map(|i| {
            let mut u = [0.0; 16];
            noise.uniform_block(STREAM_SUITE, i as u64, &mut u);
            let plane = |c0: f64, ua: f64, ub: f64| {
                let a = max_slope * (2.0 * ua - 1.0);
                let b = max_slope * (2.0 * ub - 1.0);
                Plane { a, b, c: c0 - a * cx - b * cy }
            };
            let model = if i % 2 == 0 {
                DisparityModel::Constant { disparity: 1.0 + u[0] * (top - 1.0) }
            } else {
                let background = plane(0.15 * top + u[0] * 0.25 * top, u[1], u[2]);
                let count = 1 + (u[3] < 0.5) as usize;
                let patches = (0..count)
                    .map(|j| {
                        let o = 4 + 6 * j;
                        let pw = ((0.25 + 0.25 * u[o]) * w) as usize;
                        let ph = ((0.25 + 0.25 * u[o + 1]) * h) as usize;
                        let x0 = (u[o + 2] * (config.width - pw) as f64) as usize;
                        let y0 = (u[o + 3] * (config.height - ph) as f64) as usize;
                        let center = 0.6 * top + u[o + 4] * 0.3 * top;
                        let mut p = plane(center, u[o + 5], 0.5);
                        // Re-centre on the patch so its own range stays in bounds.
                        let (px, py) = (x0 as f64 + 0.5 * pw as f64, y0 as f64 + 0.5 * ph as f64);
                        p.c = center - p.a * px - p.b * py;
                        Patch { x0, y0, x1: x0 + pw, y1: y0 + ph, plane: p }
                    })
                    .collect();
                DisparityModel::Planar { background, patches }
            };
            SceneSpec {
                width: config.width,
                height: config.height,
                max_disparity: config.max_disparity,
                model,
                texture_density: SUITE_DENSITIES[i % SUITE_DENSITIES.len()],
                noise_sigma: config.noise_sigma,
                seed: config.seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            }
        })
        .collect::<Vec<_>>();
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}
