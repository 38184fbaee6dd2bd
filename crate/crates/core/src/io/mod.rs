//! File formats and run configuration.

mod config;
mod pfm;
mod raster;

pub use config::{EmitFlags, InputSource, PairInput, RunConfig};
pub use pfm::{decode_pfm, encode_pfm, read_disparity_pfm, read_pfm, write_disparity_pfm, write_pfm};
pub use raster::{
    decode_pgm, encode_pgm, read_intensity, read_pgm, read_png, render_disparity, turbo, write_disparity_png,
    write_pgm, write_png_gray,
};
