//! Image quality metrics: PSNR, luminance SSIM, Laplacian sharpness and
//! histogram entropy, plus a directory-level report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GenericImageView};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Single-channel plane on the 0–255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} plane holds {} values",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[inline]
pub fn luma601(r: f64, g: f64, b: f64) -> f64 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Scale factor from the image's native range to 0–255.
fn to_255_scale(img: &DynamicImage) -> f64 {
    match img {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => 255.0 / 65535.0,
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => 255.0,
        _ => 1.0,
    }
}

fn is_gray(img: &DynamicImage) -> bool {
    matches!(
        img,
        DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
    )
}

/// ITU-R 601 luma of an image, on the 0–255 scale. Grayscale images are used as-is.
pub fn luma_plane(img: &DynamicImage) -> Plane {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let scale = to_255_scale(img);
    let data = if is_gray(img) {
        match img {
            DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => img
                .to_luma16()
                .pixels()
                .map(|p| p.0[0] as f64 * scale)
                .collect(),
            _ => img.to_luma8().pixels().map(|p| p.0[0] as f64).collect(),
        }
    } else {
        rgb_values(img)
            .chunks_exact(3)
            .map(|c| luma601(c[0], c[1], c[2]))
            .collect()
    };
    Plane { width: w, height: h, data }
}

/// Interleaved RGB samples on the 0–255 scale.
pub fn rgb_values(img: &DynamicImage) -> Vec<f64> {
    let scale = to_255_scale(img);
    match img {
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => img
            .to_rgb32f()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 * scale)
            .collect(),
        _ if scale != 1.0 => img
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 * scale)
            .collect(),
        _ => img.to_rgb8().into_raw().into_iter().map(f64::from).collect(),
    }
}

/// `10·log10(max² / MSE)`; `f64::INFINITY` when the inputs are identical.
pub fn psnr(a: &[f64], b: &[f64], max_value: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} samples",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("empty images".into()));
    }
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if sse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse / a.len() as f64;
    Ok(10.0 * (max_value * max_value / mse).log10())
}

/// PSNR over all RGB channels on the 8-bit scale.
pub fn psnr_images(a: &DynamicImage, b: &DynamicImage) -> Result<f64> {
    check_dims(a, b)?;
    psnr(&rgb_values(a), &rgb_values(b), 255.0)
}

fn check_dims(a: &DynamicImage, b: &DynamicImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Normalized 1-D Gaussian kernel.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let k: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filter: output is `(w − k + 1) × (h − k + 1)`.
fn filter_valid(p: &Plane, k: &[f64]) -> Plane {
    let n = k.len();
    let ow = p.width + 1 - n;
    let oh = p.height + 1 - n;
    let mut tmp = vec![0.0; ow * p.height];
    for y in 0..p.height {
        let row = &p.data[y * p.width..(y + 1) * p.width];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut s = 0.0;
            for (j, kv) in k.iter().enumerate() {
                s += kv * tmp[(y + j) * ow + x];
            }
            out[y * ow + x] = s;
        }
    }
    Plane {
        width: ow,
        height: oh,
        data: out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: SSIM_WINDOW,
            sigma: SSIM_SIGMA,
            k1: SSIM_K1,
            k2: SSIM_K2,
            data_range: 255.0,
        }
    }
}

/// Mean Gaussian-windowed SSIM over the valid region.
pub fn ssim_planes(a: &Plane, b: &Plane, params: &SsimParams) -> Result<f64> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    if a.width < params.window || a.height < params.window {
        return Err(Error::InvalidArgument(format!(
            "{}x{} image is smaller than the {} px SSIM window",
            a.width, a.height, params.window
        )));
    }
    let k = gaussian_kernel(params.window, params.sigma);
    let prod = |f: fn(f64, f64) -> f64| Plane {
        width: a.width,
        height: a.height,
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect(),
    };
    let mu_a = filter_valid(a, &k);
    let mu_b = filter_valid(b, &k);
    let e_aa = filter_valid(&prod(|x, _| x * x), &k);
    let e_bb = filter_valid(&prod(|_, y| y * y), &k);
    let e_ab = filter_valid(&prod(|x, y| x * y), &k);
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);
    let mut sum = 0.0;
    for i in 0..mu_a.data.len() {
        let (ma, mb) = (mu_a.data[i], mu_b.data[i]);
        let va = e_aa.data[i] - ma * ma;
        let vb = e_bb.data[i] - mb * mb;
        let cov = e_ab.data[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        sum += num / den;
    }
    Ok(sum / mu_a.data.len() as f64)
}

pub fn ssim_images(a: &DynamicImage, b: &DynamicImage) -> Result<f64> {
    check_dims(a, b)?;
    ssim_planes(&luma_plane(a), &luma_plane(b), &SsimParams::default())
}

/// Variance of the 4-neighbour Laplacian over the interior.
pub fn sharpness_plane(p: &Plane) -> f64 {
    if p.width < 3 || p.height < 3 {
        return 0.0;
    }
    let mut resp = Vec::with_capacity((p.width - 2) * (p.height - 2));
    for y in 1..p.height - 1 {
        for x in 1..p.width - 1 {
            resp.push(
                4.0 * p.get(x, y) - p.get(x - 1, y) - p.get(x + 1, y) - p.get(x, y - 1) - p.get(x, y + 1),
            );
        }
    }
    let n = resp.len() as f64;
    let mean = resp.iter().sum::<f64>() / n;
    resp.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n
}

pub fn sharpness(img: &DynamicImage) -> f64 {
    sharpness_plane(&luma_plane(img))
}

/// Shannon entropy in bits of the 256-bin histogram of `round(luma)`.
pub fn entropy_plane(p: &Plane) -> f64 {
    if p.data.is_empty() {
        return 0.0;
    }
    let mut hist = [0u64; 256];
    for v in &p.data {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    let n = p.data.len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy(img: &DynamicImage) -> f64 {
    entropy_plane(&luma_plane(img))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub id: String,
    pub ssim: Option<f64>,
    pub psnr_db: Option<f64>,
    pub sharpness: f64,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricMeans {
    pub ssim: Option<f64>,
    /// Mean over finite PSNR values; infinite if every pair was identical.
    pub psnr_db: Option<f64>,
    pub psnr_inf_count: usize,
    pub sharpness: f64,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub records: Vec<MetricRecord>,
    pub means: MetricMeans,
    /// Stems present in only one of the two directories.
    pub unmatched: Vec<String>,
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x:.digits$}"),
    }
}

impl MetricReport {
    pub fn from_records(records: Vec<MetricRecord>, unmatched: Vec<String>) -> Self {
        let n = records.len().max(1) as f64;
        let ssim = records
            .iter()
            .map(|r| r.ssim)
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64);
        let psnr_all = records
            .iter()
            .map(|r| r.psnr_db)
            .collect::<Option<Vec<_>>>()
            .filter(|v| !v.is_empty());
        let psnr_inf_count = psnr_all
            .as_ref()
            .map_or(0, |v| v.iter().filter(|p| p.is_infinite()).count());
        let psnr_db = psnr_all.map(|v| {
            let finite: Vec<f64> = v.into_iter().filter(|p| p.is_finite()).collect();
            if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            }
        });
        let means = MetricMeans {
            ssim,
            psnr_db,
            psnr_inf_count,
            sharpness: records.iter().map(|r| r.sharpness).sum::<f64>() / n,
            entropy_bits: records.iter().map(|r| r.entropy_bits).sum::<f64>() / n,
        };
        Self {
            records,
            means,
            unmatched,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,ssim,psnr_db,sharpness,entropy_bits\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6}",
                r.id,
                fmt_opt(r.ssim, 6),
                fmt_opt(r.psnr_db, 6),
                r.sharpness,
                r.entropy_bits
            );
        }
        let m = &self.means;
        let _ = writeln!(
            s,
            "mean,{},{},{:.6},{:.6}",
            fmt_opt(m.ssim, 6),
            fmt_opt(m.psnr_db, 6),
            m.sharpness,
            m.entropy_bits
        );
        s
    }

    pub fn to_text(&self) -> String {
        let m = &self.means;
        let mut s = format!("{:<24}  {:>8}  {:>10}  {:>12}  {:>8}\n", "Image", "SSIM", "PSNR (dB)", "Sharpness", "Entropy");
        let mut row = |id: &str, ssim: Option<f64>, psnr: Option<f64>, sh: f64, en: f64| {
            let _ = writeln!(
                s,
                "{id:<24}  {:>8}  {:>10}  {sh:>12.3}  {en:>8.3}",
                fmt_opt(ssim, 3),
                fmt_opt(psnr, 3)
            );
        };
        for r in &self.records {
            row(&r.id, r.ssim, r.psnr_db, r.sharpness, r.entropy_bits);
        }
        row("mean", m.ssim, m.psnr_db, m.sharpness, m.entropy_bits);
        if m.psnr_inf_count > 0 {
            let _ = writeln!(s, "identical pairs (PSNR = inf): {}", m.psnr_inf_count);
        }
        for u in &self.unmatched {
            let _ = writeln!(s, "unmatched: {u}");
        }
        s
    }
}

const IMAGE_EXTENSIONS: [&str; 6] = ["png", "jpg", "jpeg", "tif", "tiff", "bmp"];

/// Image files of a directory keyed by file stem.
pub fn list_images(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if !ext.is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

pub fn load_image(path: &Path) -> Result<DynamicImage> {
    image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn image_metrics(id: &str, restored: &DynamicImage, reference: Option<&DynamicImage>) -> Result<MetricRecord> {
    let (ssim, psnr_db) = match reference {
        Some(r) => (Some(ssim_images(restored, r)?), Some(psnr_images(restored, r)?)),
        None => (None, None),
    };
    let luma = luma_plane(restored);
    Ok(MetricRecord {
        id: id.to_string(),
        ssim,
        psnr_db,
        sharpness: sharpness_plane(&luma),
        entropy_bits: entropy_plane(&luma),
    })
}

/// Metrics for every image in `restored_dir`, paired by stem with
/// `reference_dir` when given.
pub fn metric_table(restored_dir: &Path, reference_dir: Option<&Path>) -> Result<MetricReport> {
    let restored = list_images(restored_dir)?;
    let reference = reference_dir.map(list_images).transpose()?;
    let mut unmatched = Vec::new();
    let mut jobs: Vec<(String, PathBuf, Option<PathBuf>)> = Vec::new();
    match &reference {
        Some(refs) => {
            for (stem, path) in &restored {
                match refs.get(stem) {
                    Some(r) => jobs.push((stem.clone(), path.clone(), Some(r.clone()))),
                    None => unmatched.push(format!("{stem} (restored only)")),
                }
            }
            for stem in refs.keys().filter(|s| !restored.contains_key(*s)) {
                unmatched.push(format!("{stem} (reference only)"));
            }
        }
        None => jobs.extend(restored.iter().map(|(s, p)| (s.clone(), p.clone(), None))),
    }
    let records = jobs
        .par_iter()
        .map(|(id, path, ref_path)| {
            let img = load_image(path)?;
            let ref_img = ref_path.as_deref().map(load_image).transpose()?;
            image_metrics(id, &img, ref_img.as_ref())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport::from_records(records, unmatched))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma, RgbImage};

    #[test]
    fn psnr_one_step() {
        let a = vec![10.0; 300];
        let b = vec![11.0; 300];
        let p = psnr(&a, &b, 255.0).unwrap();
        assert!((p - 20.0 * 255f64.log10()).abs() < 1e-9);
        assert_eq!(psnr(&a, &a, 255.0).unwrap(), f64::INFINITY);
        assert!(psnr(&a, &b[..10], 255.0).is_err());
    }

    #[test]
    fn ssim_identity_exact() {
        let img = DynamicImage::ImageRgb8(RgbImage::from_fn(32, 20, |x, y| {
            image::Rgb([(x * 7) as u8, (y * 11) as u8, ((x ^ y) * 5) as u8])
        }));
        assert_eq!(ssim_images(&img, &img).unwrap(), 1.0);
    }

    #[test]
    fn ssim_small_image_rejected() {
        let img = DynamicImage::ImageLuma8(GrayImage::new(10, 40));
        assert!(ssim_images(&img, &img).is_err());
    }

    #[test]
    fn constant_image_stats() {
        let img = DynamicImage::ImageLuma8(GrayImage::from_pixel(16, 16, Luma([77])));
        assert_eq!(sharpness(&img), 0.0);
        assert_eq!(entropy(&img), 0.0);
    }

    #[test]
    fn uniform_histogram_is_eight_bits() {
        let img = DynamicImage::ImageLuma8(GrayImage::from_fn(16, 16, |x, y| Luma([(y * 16 + x) as u8])));
        assert!((entropy(&img) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_normalized() {
        let k = gaussian_kernel(11, 1.5);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[10]);
    }
}
