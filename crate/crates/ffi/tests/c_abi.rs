use std::ffi::{CStr, CString};
use std::ptr;

use sea_undistort_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    unsafe {
        su_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(su_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn gsd_matches_formula() {
    let g = su_compute_gsd(100.0, 20.0, 36.0, 4000);
    assert!((g - 100.0 * 0.009 / 20.0).abs() < 1e-15);
}

#[test]
fn scene_json_round_trip() {
    unsafe {
        let mut scene = ptr::null_mut();
        assert_eq!(su_scene_sample(42, &mut scene), SuStatus::Ok);
        let gsd = su_scene_gsd(scene);
        assert!((0.014..=0.063).contains(&gsd));
        let depth = su_scene_depth(scene);
        assert!((-8.0..=-0.5).contains(&depth));

        let mut need = 0usize;
        assert_eq!(
            su_scene_to_json(scene, ptr::null_mut(), 0, &mut need),
            SuStatus::BufferTooSmall
        );
        let mut buf = vec![0 as std::ffi::c_char; need];
        assert_eq!(su_scene_to_json(scene, buf.as_mut_ptr(), need, ptr::null_mut()), SuStatus::Ok);

        let mut back = ptr::null_mut();
        assert_eq!(su_scene_from_json(buf.as_ptr(), &mut back), SuStatus::Ok);
        assert_eq!(su_scene_gsd(back), gsd);
        su_scene_free(back);
        su_scene_free(scene);
    }
}

#[test]
fn bad_json_reports_error() {
    let text = CString::new("{not json").unwrap();
    let mut scene = ptr::null_mut();
    let status = unsafe { su_scene_from_json(text.as_ptr(), &mut scene) };
    assert_ne!(status, SuStatus::Ok);
    assert!(scene.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        assert_eq!(su_scene_sample(1, ptr::null_mut()), SuStatus::NullPointer);
        assert!(su_scene_gsd(ptr::null()).is_nan());
        let mut out = SuErrorStats::default();
        assert_eq!(su_depth_errors(ptr::null(), ptr::null(), &mut out), SuStatus::NullPointer);
        su_scene_free(ptr::null_mut());
        su_pair_free(ptr::null_mut());
        su_dsm_free(ptr::null_mut());
    }
}

#[test]
fn metrics_on_buffers() {
    let (w, h) = (16u32, 16u32);
    let a = vec![100u8; (w * h * 3) as usize];
    let b = vec![101u8; (w * h * 3) as usize];
    let mut v = 0.0;
    unsafe {
        assert_eq!(su_psnr_rgb8(a.as_ptr(), b.as_ptr(), w, h, &mut v), SuStatus::Ok);
        assert!((v - 48.1308).abs() < 1e-3);
        assert_eq!(su_ssim_rgb8(a.as_ptr(), a.as_ptr(), w, h, &mut v), SuStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(su_entropy_rgb8(a.as_ptr(), w, h, &mut v), SuStatus::Ok);
        assert_eq!(v, 0.0);
        assert_eq!(su_sharpness_rgb8(a.as_ptr(), w, h, &mut v), SuStatus::Ok);
        assert_eq!(v, 0.0);
    }
}

#[test]
fn mask_and_ef_packing() {
    let (w, h) = (4u32, 2u32);
    let mut rgb = vec![255u8; (w * h * 3) as usize];
    rgb[..3].copy_from_slice(&[200, 30, 30]);
    let mut mask = vec![0f32; (w * h) as usize];
    unsafe {
        assert_eq!(
            su_glint_mask_rgb8(rgb.as_ptr(), w, h, 0.7, 0.9, mask.as_mut_ptr()),
            SuStatus::Ok
        );
        assert_eq!(mask[0], 0.0);
        assert!(mask[1..].iter().all(|&m| m == 1.0));
        assert_eq!(
            su_glint_mask_rgb8(rgb.as_ptr(), w, h, 0.9, 0.7, mask.as_mut_ptr()),
            SuStatus::InvalidArgument
        );

        let mut need = 0usize;
        assert_eq!(
            su_pack_ef_rgb8(rgb.as_ptr(), mask.as_ptr(), w, h, ptr::null_mut(), 0, &mut need),
            SuStatus::BufferTooSmall
        );
        assert_eq!(need, 16 + 4 * 4 * (w * h) as usize);
        let mut out = vec![0u8; need];
        assert_eq!(
            su_pack_ef_rgb8(rgb.as_ptr(), mask.as_ptr(), w, h, out.as_mut_ptr(), need, ptr::null_mut()),
            SuStatus::Ok
        );
        assert_eq!(&out[..4], b"SUEF");
    }
}

#[test]
fn dsm_bins_and_errors() {
    let mut values = vec![-3.0f32; 30];
    values.extend(vec![-9999.0; 20]);
    values.extend(vec![-15.0; 50]);
    unsafe {
        let mut dsm = ptr::null_mut();
        assert_eq!(
            su_dsm_from_values(10, 10, 0.25, values.as_ptr(), -9999.0, &mut dsm),
            SuStatus::Ok
        );
        let mut counts = [0u64; 10];
        let (mut oor, mut nodata) = (0u64, 0u64);
        assert_eq!(
            su_dsm_bin_counts(dsm, ptr::null(), 0, counts.as_mut_ptr(), 10, &mut oor, &mut nodata),
            SuStatus::Ok
        );
        assert_eq!(counts[1], 30);
        assert_eq!(counts[7], 50);
        assert_eq!((oor, nodata), (0, 20));

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("a.dsm").to_str().unwrap()).unwrap();
        assert_eq!(su_dsm_write(dsm, path.as_ptr()), SuStatus::Ok);
        let mut read = ptr::null_mut();
        assert_eq!(su_dsm_read(path.as_ptr(), &mut read), SuStatus::Ok);

        let mut stats = SuErrorStats::default();
        assert_eq!(su_depth_errors(read, dsm, &mut stats), SuStatus::Ok);
        assert_eq!((stats.rmse_m, stats.n), (0.0, 80));

        let other = [-1.0f32; 12];
        let mut small = ptr::null_mut();
        assert_eq!(su_dsm_from_values(4, 3, 0.25, other.as_ptr(), -9999.0, &mut small), SuStatus::Ok);
        assert_eq!(su_depth_errors(small, dsm, &mut stats), SuStatus::DimensionMismatch);

        let missing = CString::new(dir.path().join("missing.dsm").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(su_dsm_read(missing.as_ptr(), &mut none), SuStatus::Io);

        su_dsm_free(small);
        su_dsm_free(read);
        su_dsm_free(dsm);
    }
}

#[test]
fn split_sizes_for_retained_corpus() {
    let mut out = [0usize; 3];
    unsafe {
        assert_eq!(su_split_sizes(1002, 0.8, 0.1, 0.1, out.as_mut_ptr()), SuStatus::Ok);
        assert_eq!(out, [802, 100, 100]);
        assert_eq!(su_split_sizes(10, 0.5, 0.5, 0.5, out.as_mut_ptr()), SuStatus::InvalidArgument);
    }
}

#[test]
fn render_small_pair() {
    unsafe {
        let mut scene = ptr::null_mut();
        assert_eq!(su_scene_sample(3, &mut scene), SuStatus::Ok);
        let mut pair = ptr::null_mut();
        assert_eq!(su_render_pair(scene, 1, &mut pair), SuStatus::Ok);
        let (w, h) = (su_pair_width(pair), su_pair_height(pair));
        assert_eq!((w, h), (512, 512));
        let mut clean = vec![0u8; (w * h * 3) as usize];
        let mut distorted = clean.clone();
        assert_eq!(
            su_pair_copy_rgb8(pair, SuImageKind::Clean, clean.as_mut_ptr(), clean.len()),
            SuStatus::Ok
        );
        assert_eq!(
            su_pair_copy_rgb8(pair, SuImageKind::Distorted, distorted.as_mut_ptr(), distorted.len()),
            SuStatus::Ok
        );
        assert_ne!(clean, distorted);
        assert_eq!(
            su_pair_copy_rgb8(pair, SuImageKind::Clean, clean.as_mut_ptr(), 10),
            SuStatus::BufferTooSmall
        );

        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        let stem = CString::new("s").unwrap();
        assert_eq!(su_pair_save(pair, d.as_ptr(), stem.as_ptr()), SuStatus::Ok);
        assert!(dir.path().join("s_clean.png").exists());
        assert!(dir.path().join("s.json").exists());
        su_pair_free(pair);
        su_scene_free(scene);
    }
}
