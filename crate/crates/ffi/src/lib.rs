//! C ABI over the `sea_undistort` crate.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an
//! [`SuStatus`]; on failure a message is available from
//! [`su_last_error_message`] on the same thread. Image buffers are
//! interleaved 8-bit RGB, row-major, without padding.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sea_undistort::bathy::{bin_counts, depth_errors, BinSpec, DsmRaster};
use sea_undistort::dataset::split_sizes;
use sea_undistort::glint::{compute_mask, pack_ef, GlintMask, MaskParams};
use sea_undistort::metrics::{entropy, psnr_images, sharpness, ssim_images};
use sea_undistort::params::{compute_gsd, metadata_json, parse_metadata_json, sample_scene, GeneratorConfig};
use sea_undistort::render::{render_pair, ImagePair, RenderOptions};
use sea_undistort::{Error, SceneParams};

use image::{DynamicImage, RgbImage};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    NoOverlap = 6,
    Config = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Sampled scene parameters.
pub struct SuScene(SceneParams);

/// A rendered clean/distorted image pair.
pub struct SuPair(ImagePair);

/// A depth raster.
pub struct SuDsm(DsmRaster);

/// Depth error statistics of a prediction against a reference raster.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuErrorStats {
    pub rmse_m: f64,
    pub mae_m: f64,
    pub std_m: f64,
    pub bias_m: f64,
    pub n: u64,
}

/// Which image of a pair to access.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuImageKind {
    Clean = 0,
    Distorted = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Failure(SuStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) => SuStatus::Config,
            Error::InvalidArgument(_) => SuStatus::InvalidArgument,
            Error::DimensionMismatch(_) => SuStatus::DimensionMismatch,
            Error::NoOverlap => SuStatus::NoOverlap,
            Error::Io { .. } => SuStatus::Io,
            _ => SuStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: SuStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> SuStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SuStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SuStatus::Panic
        }
    }
}

unsafe fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(SuStatus::NullPointer, format!("{what} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(SuStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SuStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(fail(SuStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn rgb8_image(rgb: *const u8, width: u32, height: u32) -> Result<DynamicImage, Failure> {
    if rgb.is_null() {
        return Err(fail(SuStatus::NullPointer, "image buffer is null"));
    }
    let len = width as usize * height as usize * 3;
    let data = std::slice::from_raw_parts(rgb, len).to_vec();
    RgbImage::from_raw(width, height, data)
        .map(DynamicImage::ImageRgb8)
        .ok_or_else(|| fail(SuStatus::InvalidArgument, "bad image dimensions"))
}

/// Copies `bytes` plus a NUL terminator into `buf` if it fits. `required`
/// (optional) receives the needed size including the terminator.
unsafe fn copy_c_string(text: &str, buf: *mut c_char, len: usize, required: *mut usize) -> FfiResult {
    let need = text.len() + 1;
    if !required.is_null() {
        *required = need;
    }
    if buf.is_null() || len < need {
        return Err(fail(SuStatus::BufferTooSmall, format!("{need} bytes required")));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    *buf.add(text.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn su_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn su_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Ground sampling distance in meters.
#[no_mangle]
pub extern "C" fn su_compute_gsd(altitude_m: f64, focal_mm: f64, sensor_width_mm: f64, pixel_width: u32) -> f64 {
    compute_gsd(altitude_m, focal_mm, sensor_width_mm, pixel_width)
}

/// Samples scene parameters with the default generator ranges.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn su_scene_sample(seed: u64, out: *mut *mut SuScene) -> SuStatus {
    guard(|| put(out, SuScene(sample_scene(seed, &GeneratorConfig::default())?)))
}

/// Parses a per-image metadata JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn su_scene_from_json(json: *const c_char, out: *mut *mut SuScene) -> SuStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        put(out, SuScene(parse_metadata_json(text)?))
    })
}

/// Writes the scene's metadata JSON into `buf`.
///
/// # Safety
/// `scene` must be a live handle; `buf` null or `len` writable bytes;
/// `required` null or writable.
#[no_mangle]
pub unsafe extern "C" fn su_scene_to_json(
    scene: *const SuScene,
    buf: *mut c_char,
    len: usize,
    required: *mut usize,
) -> SuStatus {
    guard(|| {
        let scene = non_null(scene, "scene")?;
        copy_c_string(&metadata_json(&scene.0), buf, len, required)
    })
}

/// GSD of the scene's camera, or NaN for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn su_scene_gsd(scene: *const SuScene) -> f64 {
    scene.as_ref().map_or(f64::NAN, |s| s.0.camera.gsd_m())
}

/// Mean seabed depth of the scene (negative meters), or NaN for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn su_scene_depth(scene: *const SuScene) -> f64 {
    scene.as_ref().map_or(f64::NAN, |s| s.0.water.avg_depth_m)
}

/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su_scene_free(scene: *mut SuScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Renders the 8-bit clean/distorted pair of a scene.
///
/// # Safety
/// `scene` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn su_render_pair(scene: *const SuScene, samples_per_pixel: u32, out: *mut *mut SuPair) -> SuStatus {
    guard(|| {
        let scene = non_null(scene, "scene")?;
        let opts = RenderOptions {
            samples_per_pixel,
            output_bit_depth: 8,
            ..RenderOptions::default()
        };
        put(out, SuPair(render_pair(&scene.0, &opts)?))
    })
}

/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn su_pair_width(pair: *const SuPair) -> u32 {
    pair.as_ref().map_or(0, |p| p.0.clean.width())
}

/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn su_pair_height(pair: *const SuPair) -> u32 {
    pair.as_ref().map_or(0, |p| p.0.clean.height())
}

/// Copies one image of the pair as RGB8 into `buf` (`width · height · 3` bytes).
///
/// # Safety
/// `pair` must be a live handle and `buf` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn su_pair_copy_rgb8(pair: *const SuPair, kind: SuImageKind, buf: *mut u8, len: usize) -> SuStatus {
    guard(|| {
        let pair = non_null(pair, "pair")?;
        let img = match kind {
            SuImageKind::Clean => &pair.0.clean,
            SuImageKind::Distorted => &pair.0.distorted,
        };
        let raw = img.to_rgb8().into_raw();
        if buf.is_null() || len < raw.len() {
            return Err(fail(SuStatus::BufferTooSmall, format!("{} bytes required", raw.len())));
        }
        ptr::copy_nonoverlapping(raw.as_ptr(), buf, raw.len());
        Ok(())
    })
}

/// Writes `<stem>_clean.png`, `<stem>_distorted.png` and `<stem>.json` into `dir`.
///
/// # Safety
/// `pair` must be a live handle; `dir` and `stem` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn su_pair_save(pair: *const SuPair, dir: *const c_char, stem: *const c_char) -> SuStatus {
    guard(|| {
        let pair = non_null(pair, "pair")?;
        let dir = Path::new(c_str(dir, "dir")?);
        let stem = c_str(stem, "stem")?;
        for (img, suffix) in [(&pair.0.clean, "clean"), (&pair.0.distorted, "distorted")] {
            let path = dir.join(format!("{stem}_{suffix}.png"));
            img.save_with_format(&path, image::ImageFormat::Png)
                .map_err(|source| Error::Image { path, source })?;
        }
        let path = dir.join(format!("{stem}.json"));
        std::fs::write(&path, metadata_json(&pair.0.metadata))
            .map_err(|e| fail(SuStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// # Safety
/// `pair` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su_pair_free(pair: *mut SuPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Glint mask of an RGB8 image into `mask` (`width · height` floats in `[0, 1]`).
///
/// # Safety
/// `rgb` must hold `width · height · 3` bytes and `mask` `width · height` floats.
#[no_mangle]
pub unsafe extern "C" fn su_glint_mask_rgb8(
    rgb: *const u8,
    width: u32,
    height: u32,
    t_lo: f64,
    t_hi: f64,
    mask: *mut f32,
) -> SuStatus {
    guard(|| {
        let img = rgb8_image(rgb, width, height)?;
        let m = compute_mask(&img.to_rgb32f(), &MaskParams::new(t_lo, t_hi)?)?;
        if mask.is_null() {
            return Err(fail(SuStatus::NullPointer, "mask buffer is null"));
        }
        ptr::copy_nonoverlapping(m.values.as_ptr(), mask, m.values.len());
        Ok(())
    })
}

/// Serializes an RGB8 image and its mask as the planar float32 early-fusion
/// tensor. `required` (optional) receives the byte size.
///
/// # Safety
/// `rgb` must hold `width · height · 3` bytes, `mask` `width · height`
/// floats, `out` null or `len` writable bytes, `required` null or writable.
#[no_mangle]
pub unsafe extern "C" fn su_pack_ef_rgb8(
    rgb: *const u8,
    mask: *const f32,
    width: u32,
    height: u32,
    out: *mut u8,
    len: usize,
    required: *mut usize,
) -> SuStatus {
    guard(|| {
        let img = rgb8_image(rgb, width, height)?;
        if mask.is_null() {
            return Err(fail(SuStatus::NullPointer, "mask buffer is null"));
        }
        let values = std::slice::from_raw_parts(mask, width as usize * height as usize).to_vec();
        let bytes = pack_ef(&img.to_rgb32f(), &GlintMask { width, height, values })?;
        if !required.is_null() {
            *required = bytes.len();
        }
        if out.is_null() || len < bytes.len() {
            return Err(fail(SuStatus::BufferTooSmall, format!("{} bytes required", bytes.len())));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
        Ok(())
    })
}

unsafe fn pair_metric(
    a: *const u8,
    b: *const u8,
    width: u32,
    height: u32,
    out: *mut f64,
    f: fn(&DynamicImage, &DynamicImage) -> sea_undistort::Result<f64>,
) -> SuStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(SuStatus::NullPointer, "output is null"));
        }
        *out = f(&rgb8_image(a, width, height)?, &rgb8_image(b, width, height)?)?;
        Ok(())
    })
}

unsafe fn single_metric(rgb: *const u8, width: u32, height: u32, out: *mut f64, f: fn(&DynamicImage) -> f64) -> SuStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(SuStatus::NullPointer, "output is null"));
        }
        *out = f(&rgb8_image(rgb, width, height)?);
        Ok(())
    })
}

/// PSNR in dB over all channels; `INFINITY` for identical images.
///
/// # Safety
/// `a` and `b` must hold `width · height · 3` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su_psnr_rgb8(a: *const u8, b: *const u8, width: u32, height: u32, out: *mut f64) -> SuStatus {
    pair_metric(a, b, width, height, out, psnr_images)
}

/// Mean luminance SSIM (11-px Gaussian window, σ = 1.5).
///
/// # Safety
/// `a` and `b` must hold `width · height · 3` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su_ssim_rgb8(a: *const u8, b: *const u8, width: u32, height: u32, out: *mut f64) -> SuStatus {
    pair_metric(a, b, width, height, out, ssim_images)
}

/// Variance of the Laplacian of the luma.
///
/// # Safety
/// `rgb` must hold `width · height · 3` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su_sharpness_rgb8(rgb: *const u8, width: u32, height: u32, out: *mut f64) -> SuStatus {
    single_metric(rgb, width, height, out, sharpness)
}

/// Shannon entropy of the luma histogram, in bits.
///
/// # Safety
/// `rgb` must hold `width · height · 3` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn su_entropy_rgb8(rgb: *const u8, width: u32, height: u32, out: *mut f64) -> SuStatus {
    single_metric(rgb, width, height, out, entropy)
}

/// Reads a `.dsm` or ESRI ASCII raster.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn su_dsm_read(path: *const c_char, out: *mut *mut SuDsm) -> SuStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        put(out, SuDsm(DsmRaster::read(Path::new(path))?))
    })
}

/// Builds a raster from `width · height` row-major values.
///
/// # Safety
/// `values` must hold `width · height` floats; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn su_dsm_from_values(
    width: u32,
    height: u32,
    cell_size_m: f64,
    values: *const f32,
    nodata: f32,
    out: *mut *mut SuDsm,
) -> SuStatus {
    guard(|| {
        if values.is_null() {
            return Err(fail(SuStatus::NullPointer, "values is null"));
        }
        let n = width as usize * height as usize;
        let v = std::slice::from_raw_parts(values, n).to_vec();
        put(
            out,
            SuDsm(DsmRaster::new(width as usize, height as usize, cell_size_m, v, nodata)?),
        )
    })
}

/// # Safety
/// `dsm` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn su_dsm_write(dsm: *const SuDsm, path: *const c_char) -> SuStatus {
    guard(|| {
        let dsm = non_null(dsm, "dsm")?;
        Ok(dsm.0.write(Path::new(c_str(path, "path")?))?)
    })
}

/// # Safety
/// `dsm` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn su_dsm_free(dsm: *mut SuDsm) {
    if !dsm.is_null() {
        drop(Box::from_raw(dsm));
    }
}

/// Per-bin cell counts. With `edges` null the default bins 0, −2, …, −20 m
/// are used. `counts` receives `n_edges − 1` values (10 for the default).
/// `out_of_range` and `nodata` are optional.
///
/// # Safety
/// `dsm` must be a live handle, `edges` null or `n_edges` doubles, `counts`
/// `n_counts` writable values, the remaining outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn su_dsm_bin_counts(
    dsm: *const SuDsm,
    edges: *const f64,
    n_edges: usize,
    counts: *mut u64,
    n_counts: usize,
    out_of_range: *mut u64,
    nodata: *mut u64,
) -> SuStatus {
    guard(|| {
        let dsm = non_null(dsm, "dsm")?;
        let bins = if edges.is_null() {
            BinSpec::default()
        } else {
            BinSpec::new(std::slice::from_raw_parts(edges, n_edges).to_vec())?
        };
        let c = bin_counts(&dsm.0, &bins);
        if counts.is_null() || n_counts < c.counts.len() {
            return Err(fail(
                SuStatus::BufferTooSmall,
                format!("{} counts required", c.counts.len()),
            ));
        }
        ptr::copy_nonoverlapping(c.counts.as_ptr(), counts, c.counts.len());
        if !out_of_range.is_null() {
            *out_of_range = c.out_of_range;
        }
        if !nodata.is_null() {
            *nodata = c.nodata;
        }
        Ok(())
    })
}

/// Depth error statistics of `pred − reference` over cells valid in both.
///
/// # Safety
/// `pred` and `reference` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn su_depth_errors(pred: *const SuDsm, reference: *const SuDsm, out: *mut SuErrorStats) -> SuStatus {
    guard(|| {
        let pred = non_null(pred, "pred")?;
        let reference = non_null(reference, "reference")?;
        if out.is_null() {
            return Err(fail(SuStatus::NullPointer, "output is null"));
        }
        let e = depth_errors(&pred.0, &reference.0)?;
        *out = SuErrorStats {
            rmse_m: e.rmse_m,
            mae_m: e.mae_m,
            std_m: e.std_m,
            bias_m: e.bias_m,
            n: e.n,
        };
        Ok(())
    })
}

/// Train/val/test sizes for `n` entries (val and test floored, remainder to train).
///
/// # Safety
/// `out` must point to three writable values.
#[no_mangle]
pub unsafe extern "C" fn su_split_sizes(n: usize, train: f64, val: f64, test: f64, out: *mut usize) -> SuStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(SuStatus::NullPointer, "output is null"));
        }
        let sizes = split_sizes(n, [train, val, test])?;
        ptr::copy_nonoverlapping(sizes.as_ptr(), out, 3);
        Ok(())
    })
}
