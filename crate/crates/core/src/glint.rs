//! Continuous sun-glint mask from HSV saturation and value, and the
//! four-channel early-fusion tensor file.
//!
//! The mask ramps linearly from 0 at `t_lo` to 1 at `t_hi` on the score
//! `v · (1 − s)`, which is high only for bright, de-saturated pixels.

use std::path::Path;

use image::{DynamicImage, GrayImage, Luma, Rgb32FImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EF_MAGIC: &[u8; 4] = b"SUEF";
pub const EF_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskParams {
    pub t_lo: f64,
    pub t_hi: f64,
}

impl Default for MaskParams {
    fn default() -> Self {
        Self { t_lo: 0.70, t_hi: 0.90 }
    }
}

impl MaskParams {
    pub fn new(t_lo: f64, t_hi: f64) -> Result<Self> {
        let p = Self { t_lo, t_hi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.t_lo && self.t_lo < self.t_hi && self.t_hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mask thresholds must satisfy 0 <= t_lo < t_hi <= 1 (got {}, {})",
                self.t_lo, self.t_hi
            )));
        }
        Ok(())
    }

    /// Piecewise-linear ramp with breakpoints at `t_lo` and `t_hi`.
    pub fn ramp(&self, score: f64) -> f64 {
        if score >= self.t_hi {
            1.0
        } else if score <= self.t_lo {
            0.0
        } else {
            ((score - self.t_lo) / (self.t_hi - self.t_lo)).clamp(0.0, 1.0)
        }
    }
}

/// Hexcone RGB → HSV. Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [f64; 3]) -> [f64; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h >= 360.0 { h - 360.0 } else { h };
    [h, s, max]
}

pub fn hsv_to_rgb(hsv: [f64; 3]) -> [f64; 3] {
    let [h, s, v] = hsv;
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// Glint likelihood of a pixel: bright and colourless scores high.
#[inline]
pub fn glint_score(s: f64, v: f64) -> f64 {
    v * (1.0 - s)
}

/// Per-pixel mask in `[0, 1]` with the source image's dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GlintMask {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f32>,
}

impl GlintMask {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; (width * height) as usize],
        }
    }

    /// Fraction of pixels at full glint (`m = 1`).
    pub fn saturated_fraction(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|&&m| m >= 1.0).count() as f64 / self.values.len() as f64
    }

    /// 8-bit grayscale rendering, `round(255 · m)`.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            let m = self.values[(y * self.width + x) as usize];
            Luma([(255.0 * m as f64).round() as u8])
        })
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            values: img.pixels().map(|p| p.0[0] as f32 / 255.0).collect(),
        }
    }
}

/// Mask of one RGB pixel with components in `[0, 1]`.
pub fn mask_pixel(rgb: [f64; 3], params: &MaskParams) -> f64 {
    let [_, s, v] = rgb_to_hsv(rgb.map(|c| c.clamp(0.0, 1.0)));
    params.ramp(glint_score(s, v))
}

pub fn compute_mask(image: &Rgb32FImage, params: &MaskParams) -> Result<GlintMask> {
    params.validate()?;
    Ok(GlintMask {
        width: image.width(),
        height: image.height(),
        values: image
            .pixels()
            .map(|p| mask_pixel(p.0.map(f64::from), params) as f32)
            .collect(),
    })
}

/// Mask of an 8- or 16-bit image, normalized to `[0, 1]` first.
pub fn compute_mask_dynamic(image: &DynamicImage, params: &MaskParams) -> Result<GlintMask> {
    compute_mask(&image.to_rgb32f(), params)
}

/// Serializes RGB + mask as the planar float32 early-fusion tensor.
pub fn pack_ef(image: &Rgb32FImage, mask: &GlintMask) -> Result<Vec<u8>> {
    let (w, h) = image.dimensions();
    if (w, h) != (mask.width, mask.height) {
        return Err(Error::DimensionMismatch(format!(
            "image is {w}x{h}, mask is {}x{}",
            mask.width, mask.height
        )));
    }
    let n = (w * h) as usize;
    let mut out = Vec::with_capacity(EF_HEADER_LEN + 4 * n * 4);
    out.extend_from_slice(EF_MAGIC);
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&4u32.to_le_bytes());
    for channel in 0..3 {
        for p in image.pixels() {
            out.extend_from_slice(&p.0[channel].to_le_bytes());
        }
    }
    for m in &mask.values {
        out.extend_from_slice(&m.to_le_bytes());
    }
    Ok(out)
}

/// Decoded early-fusion tensor: channel planes in R, G, B, M order.
#[derive(Debug, Clone, PartialEq)]
pub struct EfTensor {
    pub width: u32,
    pub height: u32,
    pub planes: Vec<Vec<f32>>,
}

impl EfTensor {
    pub fn image(&self) -> Rgb32FImage {
        let (w, h) = (self.width, self.height);
        Rgb32FImage::from_fn(w, h, |x, y| {
            let i = (y * w + x) as usize;
            image::Rgb([self.planes[0][i], self.planes[1][i], self.planes[2][i]])
        })
    }

    pub fn mask(&self) -> GlintMask {
        GlintMask {
            width: self.width,
            height: self.height,
            values: self.planes[3].clone(),
        }
    }
}

pub fn unpack_ef(bytes: &[u8]) -> std::result::Result<EfTensor, String> {
    if bytes.len() < EF_HEADER_LEN || &bytes[..4] != EF_MAGIC {
        return Err("missing SUEF header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (w, h, c) = (word(4), word(8), word(12));
    if c != 4 {
        return Err(format!("expected 4 channels, found {c}"));
    }
    let n = w as usize * h as usize;
    let expected = EF_HEADER_LEN + 4 * n * c as usize;
    if bytes.len() != expected {
        return Err(format!("payload is {} bytes, expected {expected}", bytes.len()));
    }
    let planes = (0..c as usize)
        .map(|k| {
            let base = EF_HEADER_LEN + k * n * 4;
            bytes[base..base + n * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok(EfTensor {
        width: w,
        height: h,
        planes,
    })
}

pub fn write_ef(path: &Path, image: &Rgb32FImage, mask: &GlintMask) -> Result<()> {
    let bytes = pack_ef(image, mask)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_ef(path: &Path) -> Result<EfTensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    unpack_ef(&bytes).map_err(|m| Error::format(path, m))
}
