//! Grayscale image buffers in [0,1], NetPBM P5 I/O, PSNR, seeded noise, and
//! a synthetic ground-truth generator for desk-scale restoration runs.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::io::{Read as _, Write as _};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    /// Row-major pixel values in [0,1].
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} image with {} pixels",
                data.len()
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Image {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Writes binary NetPBM P5 (8-bit, maxval 255); value -> round(value*255)
/// after clamping to [0,1].
pub fn write_pgm(img: &Image, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", img.width, img.height)?;
    let bytes: Vec<u8> = img
        .data
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads binary NetPBM P5 with maxval 255; pixel value = byte/255 exactly.
pub fn read_pgm(path: &Path) -> Result<Image> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut pos = 0usize;
    let mut token = |buf: &[u8]| -> Result<String> {
        loop {
            while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < buf.len() && buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::ConfigParse("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
    };
    let magic = token(&buf)?;
    if magic != "P5" {
        return Err(Error::ConfigParse(format!("expected P5, got {magic}")));
    }
    let width: usize = token(&buf)?
        .parse()
        .map_err(|e| Error::ConfigParse(format!("PGM width: {e}")))?;
    let height: usize = token(&buf)?
        .parse()
        .map_err(|e| Error::ConfigParse(format!("PGM height: {e}")))?;
    let maxval: usize = token(&buf)?
        .parse()
        .map_err(|e| Error::ConfigParse(format!("PGM maxval: {e}")))?;
    if maxval != 255 {
        return Err(Error::ConfigParse(format!("unsupported maxval {maxval}")));
    }
    pos += 1; // single whitespace byte after maxval
    let need = width * height;
    if buf.len() < pos + need {
        return Err(Error::ConfigParse("truncated PGM payload".into()));
    }
    let data = buf[pos..pos + need]
        .iter()
        .map(|b| *b as f64 / 255.0)
        .collect();
    Image::new(height, width, data)
}

/// Writes pixel values as CSV floats, one image row per line.
pub fn write_csv(img: &Image, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for row in img.data.chunks(img.width) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Image> {
    let text = std::fs::read_to_string(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut height = 0usize;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|e| Error::ConfigParse(format!("CSV pixel: {e}")))
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::ShapeMismatch("ragged CSV image".into()))
            }
            _ => {}
        }
        height += 1;
        data.extend(row);
    }
    Image::new(height, width.unwrap_or(0), data)
}

/// `10 log10(peak^2 / MSE)`; +infinity when the images are identical.
pub fn psnr(reference: &Image, candidate: &Image, peak: f64) -> Result<f64> {
    if reference.height != candidate.height || reference.width != candidate.width {
        return Err(Error::ShapeMismatch(format!(
            "psnr: {}x{} vs {}x{}",
            reference.height, reference.width, candidate.height, candidate.width
        )));
    }
    let mse: f64 = reference
        .data
        .iter()
        .zip(&candidate.data)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Adds i.i.d. `N(0, sigma^2)` noise from a seeded generator.
pub fn add_gaussian_noise(img: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma finite and nonnegative");
    let data = img
        .data
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    Image {
        height: img.height,
        width: img.width,
        data,
    }
}

pub fn add_gaussian_noise_vec(v: &[f64], sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma finite and nonnegative");
    v.iter().map(|x| x + normal.sample(&mut rng)).collect()
}

/// Deterministic piecewise-smooth test scene: a bright disc and a dark
/// rectangle over a smooth ramp, plus seeded low-amplitude texture.
pub fn synthetic_ground_truth(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(height * width);
    let (hc, wc) = (height as f64 * 0.38, width as f64 * 0.42);
    let radius = height.min(width) as f64 * 0.22;
    for r in 0..height {
        for c in 0..width {
            let ramp = 0.25 + 0.3 * (r as f64 / height as f64);
            let dr = r as f64 - hc;
            let dc = c as f64 - wc;
            let mut v = ramp;
            if (dr * dr + dc * dc).sqrt() < radius {
                v = 0.9;
            }
            if r > height * 2 / 3 && r < height * 9 / 10 && c > width / 2 && c < width * 5 / 6 {
                v = 0.1;
            }
            v += rng.gen_range(-0.02..0.02);
            data.push(v.clamp(0.0, 1.0));
        }
    }
    Image {
        height,
        width,
        data,
    }
}
