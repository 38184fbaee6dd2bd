//! Grayscale images and colour-mapped disparity renderings.

use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, RgbImage};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::volume::DisparityMap;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

/// Binary PGM (`P5`), 8 or 16 bit, normalized by the header's maxval.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<Array2<f64>> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == start {
            return Err(format_err(path, "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(Error::Unsupported {
            path: path.to_path_buf(),
            reason: format!("magic {:?}; only binary grayscale P5 is read", fields[0]),
        });
    }
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format_err(path, format!("bad {what}")));
    let w = parse(&fields[1], "width")?;
    let h = parse(&fields[2], "height")?;
    let maxval = parse(&fields[3], "maxval")?;
    if w == 0 || h == 0 {
        return Err(format_err(path, "zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Unsupported { path: path.to_path_buf(), reason: format!("maxval {maxval}") });
    }
    if pos >= bytes.len() {
        return Err(format_err(path, "missing payload"));
    }
    pos += 1;
    let depth = if maxval < 256 { 1 } else { 2 };
    let payload = &bytes[pos..];
    if payload.len() < depth * w * h {
        return Err(format_err(path, format!("payload has {} bytes, expected {}", payload.len(), depth * w * h)));
    }
    let scale = maxval as f64;
    Ok(Array2::from_shape_fn((h, w), |(y, x)| {
        let i = depth * (y * w + x);
        let v = if depth == 1 { payload[i] as f64 } else { u16::from_be_bytes([payload[i], payload[i + 1]]) as f64 };
        (v / scale).min(1.0)
    }))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    decode_pgm(&fs::read(path)?, path)
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

/// Intensities in `[0, 1]` (clamped) as `P5` with the given bit depth.
pub fn encode_pgm(image: &Array2<f64>, bits: u8) -> Result<Vec<u8>> {
    let max = match bits {
        8 => 255.0,
        16 => 65535.0,
        _ => return Err(Error::Config(format!("PGM bit depth {bits} must be 8 or 16"))),
    };
    let (h, w) = image.dim();
    let mut out = format!("P5\n{w} {h}\n{max}\n").into_bytes();
    for &v in image {
        let q = quantize(v, max);
        if bits == 8 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        }
    }
    Ok(out)
}

pub fn write_pgm(path: impl AsRef<Path>, image: &Array2<f64>, bits: u8) -> Result<()> {
    fs::write(path, encode_pgm(image, bits)?)?;
    Ok(())
}

/// 8 or 16 bit grayscale PNG, normalized to `[0, 1]`. Colour images are
/// rejected rather than converted.
pub fn read_png(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let img = image::open(path)?;
    let to_grid = |w: u32, h: u32, f: &dyn Fn(u32, u32) -> f64| {
        Array2::from_shape_fn((h as usize, w as usize), |(y, x)| f(x as u32, y as u32))
    };
    match img {
        DynamicImage::ImageLuma8(g) => Ok(to_grid(g.width(), g.height(), &|x, y| g.get_pixel(x, y)[0] as f64 / 255.0)),
        DynamicImage::ImageLuma16(g) => {
            Ok(to_grid(g.width(), g.height(), &|x, y| g.get_pixel(x, y)[0] as f64 / 65535.0))
        }
        other => Err(Error::Unsupported {
            path: path.to_path_buf(),
            reason: format!("{:?} PNG; only 8/16-bit grayscale is read", other.color()),
        }),
    }
}

pub fn write_png_gray(path: impl AsRef<Path>, image: &Array2<f64>, bits: u8) -> Result<()> {
    let (h, w) = image.dim();
    match bits {
        8 => {
            let buf: GrayImage =
                ImageBuffer::from_fn(w as u32, h as u32, |x, y| Luma([quantize(image[[y as usize, x as usize]], 255.0) as u8]));
            buf.save(path)?;
        }
        16 => {
            let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                Luma([quantize(image[[y as usize, x as usize]], 65535.0) as u16])
            });
            buf.save(path)?;
        }
        _ => return Err(Error::Config(format!("PNG bit depth {bits} must be 8 or 16"))),
    }
    Ok(())
}

/// Reads a grayscale image, choosing the decoder by extension
/// (`pgm`, `png`, or `pfm` taken as-is).
pub fn read_intensity(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("pgm") => read_pgm(path),
        Some("png") => read_png(path),
        Some("pfm") => Ok(super::pfm::read_pfm(path)?.mapv(f64::from)),
        _ => Err(Error::Unsupported { path: path.to_path_buf(), reason: "expected .pgm, .png or .pfm".into() }),
    }
}

/// Polynomial fit of the Turbo colormap (Mikhailov 2019, approximation by
/// R. Du). `t` is clamped to `[0, 1]`; returns 8-bit RGB.
pub fn turbo(t: f64) -> [u8; 3] {
    let x = t.clamp(0.0, 1.0);
    let poly = |c: [f64; 6]| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * (c[4] + x * c[5]))));
    let r = poly([0.13572138, 4.61539260, -42.66032258, 132.13108234, -152.94239396, 59.28637943]);
    let g = poly([0.09140261, 2.19418839, 4.84296658, -14.18503333, 4.27729857, 2.82956604]);
    let b = poly([0.10667330, 12.64194608, -60.58204836, 110.36276771, -89.90310912, 27.34824973]);
    [r, g, b].map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8)
}

/// Renders disparities with [`turbo`] over `[0, max_disparity]`; invalid
/// pixels are black.
pub fn render_disparity(map: &DisparityMap, max_disparity: f64) -> Result<RgbImage> {
    if !(max_disparity > 0.0) {
        return Err(Error::Config(format!("colormap range {max_disparity} must be positive")));
    }
    let (h, w) = map.dim();
    Ok(ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (x as usize, y as usize);
        if map.is_valid(y, x) {
            Rgb(turbo(map.get(y, x) / max_disparity))
        } else {
            Rgb([0, 0, 0])
        }
    }))
}

pub fn write_disparity_png(path: impl AsRef<Path>, map: &DisparityMap, max_disparity: f64) -> Result<()> {
    render_disparity(map, max_disparity)?.save(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::random_dot_texture;
    use crate::rng::NoiseSource;
    use ndarray::arr2;

    #[test]
    fn pgm_8_bit_extremes() {
        let g = decode_pgm(b"P5\n2 1\n255\n\xff\x00", Path::new("x")).unwrap();
        assert_eq!(g, arr2(&[[1.0, 0.0]]));
    }

    #[test]
    fn pgm_16_bit_and_comments() {
        let g = decode_pgm(b"P5\n# made by hand\n2 1\n65535\n\x00\x00\xff\xff", Path::new("x")).unwrap();
        assert_eq!(g, arr2(&[[0.0, 1.0]]));
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let img = random_dot_texture(20, 30, 0.5, &NoiseSource::new(3), 0);
        for (bits, step) in [(8u8, 1.0 / 255.0), (16, 1.0 / 65535.0)] {
            let back = decode_pgm(&encode_pgm(&img, bits).unwrap(), Path::new("x")).unwrap();
            let worst = img.iter().zip(back.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= step, "{bits}: {worst}");
        }
    }

    #[test]
    fn pgm_rejects() {
        let p = Path::new("x");
        assert!(matches!(decode_pgm(b"P2\n1 1\n255\n0", p), Err(Error::Unsupported { .. })));
        assert!(matches!(decode_pgm(b"P5\n1 1\n70000\n\0\0", p), Err(Error::Unsupported { .. })));
        assert!(matches!(decode_pgm(b"P5\n2 2\n255\n\0", p), Err(Error::Format { .. })));
        assert!(matches!(decode_pgm(b"P5\n2", p), Err(Error::Format { .. })));
        assert!(encode_pgm(&arr2(&[[0.0]]), 12).is_err());
    }

    #[test]
    fn png_gray_round_trip_and_colour_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let img = arr2(&[[0.0, 0.5], [1.0, 0.25]]);
        for bits in [8u8, 16] {
            let p = dir.path().join(format!("g{bits}.png"));
            write_png_gray(&p, &img, bits).unwrap();
            let back = read_intensity(&p).unwrap();
            let worst = img.iter().zip(back.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst <= 1.0 / 255.0);
        }
        let p = dir.path().join("c.png");
        let d = DisparityMap::dense(arr2(&[[1.0, 2.0]])).unwrap();
        write_disparity_png(&p, &d, 4.0).unwrap();
        assert!(matches!(read_png(&p), Err(Error::Unsupported { .. })));
        assert!(read_intensity(dir.path().join("x.bmp")).is_err());
    }

    #[test]
    fn turbo_endpoints() {
        // Near-black at the low end, green in the middle, red at the top.
        let lo = turbo(0.0);
        let mid = turbo(0.5);
        let hi = turbo(1.0);
        assert!(lo.iter().map(|&c| c as u32).sum::<u32>() < 120);
        assert!(mid[1] > mid[0] && mid[1] > mid[2]);
        assert!(hi[0] > hi[1] && hi[0] > hi[2]);
        assert_eq!(turbo(-1.0), lo);
        assert_eq!(turbo(2.0), hi);
    }

    #[test]
    fn invalid_pixels_black() {
        let d = DisparityMap::new(arr2(&[[1.0, 2.0]]), arr2(&[[true, false]])).unwrap();
        let img = render_disparity(&d, 4.0).unwrap();
        assert_eq!(img.get_pixel(1, 0).0, [0, 0, 0]);
        assert_eq!(img.get_pixel(0, 0).0, turbo(0.25));
        assert!(render_disparity(&d, 0.0).is_err());
    }
}
