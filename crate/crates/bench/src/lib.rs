//! Fixtures shared by the benchmarks.

use voldiff::datagen::{gen_stereogram, DisparityModel, Patch, Plane, SceneSpec};
use voldiff::{ClassicalMatcher, ImagePair, MatcherConfig};

/// A square planar scene with one foreground patch.
pub fn scene(size: usize, max_disparity: usize) -> SceneSpec {
    let top = 0.8 * max_disparity as f64;
    SceneSpec {
        width: size,
        height: size,
        max_disparity,
        model: DisparityModel::Planar {
            background: Plane { a: 0.0, b: 0.0, c: 0.3 * top },
            patches: vec![Patch { x0: size / 4, y0: size / 4, x1: size / 2, y1: size / 2, plane: Plane::constant(top) }],
        },
        texture_density: 0.5,
        noise_sigma: 0.01,
        seed: 1,
    }
}

pub fn pair(size: usize, max_disparity: usize) -> ImagePair {
    gen_stereogram(&scene(size, max_disparity)).expect("valid scene").0
}

pub fn matcher(max_disparity: usize) -> ClassicalMatcher {
    ClassicalMatcher::new(MatcherConfig { max_disparity, ..MatcherConfig::default() }).expect("valid config")
}
