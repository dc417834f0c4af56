use std::path::Path;
use std::process::{Command, Output};

use sea_undistort::bathy::DsmRaster;
use sea_undistort::dataset::{DatasetManifest, MANIFEST_FILE};

const SMALL_CONFIG: &str = "[generator]\ncrop_px = 48\nallow_out_of_range = true\n\n[render]\nsamples_per_pixel = 1\n";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sea-undistort"))
        .args(args)
        .env("SEA_UNDISTORT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn small_dataset(dir: &Path, count: usize) {
    let config = dir.join("small.toml");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let out = dir.join("data");
    ok(&[
        "generate",
        "--count",
        &count.to_string(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
    ]);
}

#[test]
fn generate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pairs");
    let text = ok(&["generate", "--count", "2", "--seed", "7", "--spp", "1", "--out", out.to_str().unwrap()]);
    assert!(text.contains("generated 2 pairs"));
    let manifest = DatasetManifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.entries.len(), 2);
    for e in &manifest.entries {
        for p in [&e.clean_path, &e.distorted_path, &e.mask_path, &e.metadata_path] {
            assert!(out.join(p).is_file(), "{p}");
        }
        let img = image::open(out.join(&e.clean_path)).unwrap();
        assert_eq!((img.width(), img.height()), (512, 512));
    }
}

#[test]
fn toml_config_shapes_output() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 3);
    let data = dir.path().join("data");
    let img = image::open(data.join("scene_00000_distorted.png")).unwrap();
    assert_eq!((img.width(), img.height()), (48, 48));
    let listing = ok(&["inspect", data.to_str().unwrap()]);
    assert!(listing.contains("3 entries"), "{listing}");
}

#[test]
fn bad_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[generator]\nno_such_field = 1\n").unwrap();
    let out = dir.path().join("data");
    let o = run(&["generate", "--count", "1", "--out", out.to_str().unwrap(), "--config", config.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn metrics_self_comparison() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 2);
    let data = dir.path().join("data");
    let csv = dir.path().join("metrics.csv");
    let text = ok(&[
        "metrics",
        "--restored",
        data.to_str().unwrap(),
        "--reference",
        data.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    let mean = text.lines().find(|l| l.starts_with("mean")).unwrap();
    assert!(mean.contains("1.000"), "{mean}");
    assert!(text.contains("identical pairs (PSNR = inf): 6"), "{text}");
    let table = std::fs::read_to_string(csv).unwrap();
    assert!(table.starts_with("id,ssim,psnr_db,sharpness,entropy_bits\n"));
    assert_eq!(table.lines().filter(|l| l.contains(",1.000000,inf,")).count(), 7, "{table}");
}

#[test]
fn metrics_without_reference() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 1);
    let text = ok(&["metrics", "--restored", dir.path().join("data").to_str().unwrap()]);
    let mean = text.lines().find(|l| l.starts_with("mean")).unwrap();
    assert_eq!(mean.split_whitespace().count(), 3, "{mean}");
}

fn write_raster(path: &Path, values: Vec<f32>) {
    DsmRaster::new(4, 3, 0.5, values, -9999.0).unwrap().write(path).unwrap();
}

#[test]
fn bathy_errors_self_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("pred.dsm");
    write_raster(&p, (0..12).map(|i| -0.7 * i as f32).collect());
    let text = ok(&["bathy-errors", "--pred", p.to_str().unwrap(), "--ref", p.to_str().unwrap()]);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields, ["pred", "0.000", "0.000", "0.000", "12"]);
}

#[test]
fn bathy_errors_against_shifted_reference() {
    let dir = tempfile::tempdir().unwrap();
    let (p, r, csv) = (dir.path().join("p.asc"), dir.path().join("r.dsm"), dir.path().join("e.csv"));
    write_raster(&p, vec![-1.0; 12]);
    write_raster(&r, vec![-1.5; 12]);
    ok(&["bathy-errors", "--pred", p.to_str().unwrap(), "--ref", r.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    let table = std::fs::read_to_string(csv).unwrap();
    assert_eq!(table.lines().next(), Some("name,rmse_m,mae_m,std_m,mse_m2,bias_m,n"));
    assert_eq!(table.lines().nth(1), Some("p,0.5,0.5,0,0.25,0.5,12"));
}

#[test]
fn bathy_bins_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, csv) = (dir.path().join("a.dsm"), dir.path().join("b.asc"), dir.path().join("bins.csv"));
    write_raster(&a, vec![-1.0, -2.0, -3.0, -19.0, -20.0, -25.0, 0.0, 1.0, -9999.0, -5.0, -5.0, -5.0]);
    write_raster(&b, vec![-1.0; 12]);
    let text = ok(&["bathy-bins", a.to_str().unwrap(), b.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(text.starts_with("Depth Bin (m)"));
    let table = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "depth_bin_m,a,b");
    assert_eq!(lines[1], "0 to -2,2,12");
    assert_eq!(lines[2], "-2 to -4,2,0");
    assert_eq!(lines[3], "-4 to -6,3,0");
    assert_eq!(lines[10], "-18 to -20,1,0");
}

#[test]
fn mask_and_pack_ef() {
    let dir = tempfile::tempdir().unwrap();
    let img = image::RgbImage::from_fn(16, 8, |x, _| if x < 4 { image::Rgb([255, 255, 255]) } else { image::Rgb([10, 60, 90]) });
    let input = dir.path().join("in.png");
    img.save(&input).unwrap();
    let mask = dir.path().join("mask.png");
    let text = ok(&["mask", "--input", input.to_str().unwrap(), "--out", mask.to_str().unwrap()]);
    assert!(text.contains("saturated glint fraction 0.250000"), "{text}");
    let m = image::open(&mask).unwrap().to_luma8();
    assert_eq!(m.get_pixel(0, 0).0, [255]);
    assert_eq!(m.get_pixel(8, 0).0, [0]);

    let ef = dir.path().join("in.ef");
    ok(&["pack-ef", "--input", input.to_str().unwrap(), "--mask-image", mask.to_str().unwrap(), "--out", ef.to_str().unwrap()]);
    let desc = ok(&["inspect", ef.to_str().unwrap()]);
    assert!(desc.contains("16x8x4"), "{desc}");
    assert!(desc.contains("0.250000"), "{desc}");

    let computed = dir.path().join("computed.ef");
    ok(&["pack-ef", "--input", input.to_str().unwrap(), "--out", computed.to_str().unwrap()]);
    assert_eq!(std::fs::read(&ef).unwrap(), std::fs::read(&computed).unwrap());
}

#[test]
fn split_assigns_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 10);
    let data = dir.path().join("data");
    let text = ok(&["split", data.to_str().unwrap(), "--seed", "3", "--discard-threshold", "1.0"]);
    assert_eq!(text.trim(), "train 8  val 1  test 1  discarded 0");
    let m = DatasetManifest::read(&data.join(MANIFEST_FILE)).unwrap();
    assert!(m.entries.iter().all(|e| e.split.is_some()));
    let again = ok(&["split", data.to_str().unwrap(), "--seed", "3", "--discard-threshold", "1.0"]);
    assert_eq!(again, text);
    assert_eq!(DatasetManifest::read(&data.join(MANIFEST_FILE)).unwrap(), m);
}

#[test]
fn inspect_files() {
    let dir = tempfile::tempdir().unwrap();
    small_dataset(dir.path(), 1);
    let data = dir.path().join("data");
    let meta = ok(&["inspect", data.join("scene_00000.json").to_str().unwrap()]);
    assert!(meta.starts_with("scene seed"), "{meta}");
    let img = ok(&["inspect", data.join("scene_00000_clean.png").to_str().unwrap()]);
    assert!(img.starts_with("image 48x48"), "{img}");
    let r = dir.path().join("r.dsm");
    write_raster(&r, vec![-2.0; 12]);
    let desc = ok(&["inspect", r.to_str().unwrap()]);
    assert!(desc.contains("valid cells 12"), "{desc}");
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["generate", "--count", "1", "--out", "x", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_input_exits_two() {
    let o = run(&["bathy-errors", "--pred", "/nonexistent/a.dsm", "--ref", "/nonexistent/b.dsm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = run(&["split", "/nonexistent/dir"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_threads_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sea-undistort"))
        .args(["generate", "--count", "1", "--out", dir.path().join("d").to_str().unwrap()])
        .env("SEA_UNDISTORT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
