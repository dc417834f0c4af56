//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bathy::{bin_report, depth_errors, error_csv, error_table, BinSpec, DsmRaster};
use crate::dataset::{
    auto_discard, generate_dataset, split_dataset, threads_from_env, with_threads, DatasetManifest, PipelineConfig,
    DEFAULT_DISCARD_THRESHOLD, MANIFEST_FILE,
};
use crate::error::{Error, Result};
use crate::glint::{compute_mask_dynamic, read_ef, write_ef, GlintMask, MaskParams};
use crate::metrics::{entropy, load_image, metric_table, sharpness};
use crate::params::parse_metadata_json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sea-undistort", version, about = "Synthetic through-water image pairs, glint masks and evaluation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a dataset of clean/distorted pairs with masks and metadata.
    Generate(GenerateArgs),
    /// Compute the glint mask of an image.
    Mask(MaskArgs),
    /// Pack an image and its glint mask into a four-channel float tensor file.
    PackEf(PackEfArgs),
    /// Image quality metrics for a directory, optionally against references.
    Metrics(MetricsArgs),
    /// Count DSM cells per depth bin.
    BathyBins(BathyBinsArgs),
    /// Depth error statistics of a DSM against a reference.
    BathyErrors(BathyErrorsArgs),
    /// Discard glint-dominated pairs and assign train/val/test splits.
    Split(SplitArgs),
    /// Describe a dataset directory, manifest, raster, tensor, metadata or image file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct MaskOpts {
    /// Lower ramp threshold on v·(1 − s).
    #[arg(long)]
    t_lo: Option<f64>,
    /// Upper ramp threshold on v·(1 − s).
    #[arg(long)]
    t_hi: Option<f64>,
}

impl MaskOpts {
    fn apply(&self, base: MaskParams) -> Result<MaskParams> {
        MaskParams::new(self.t_lo.unwrap_or(base.t_lo), self.t_hi.unwrap_or(base.t_hi))
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// TOML or JSON file with `generator`, `render` and `mask` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Samples per pixel.
    #[arg(long)]
    spp: Option<u32>,
    /// Output PNG bit depth (8 or 16).
    #[arg(long)]
    bit_depth: Option<u8>,
    #[command(flatten)]
    mask: MaskOpts,
    /// Also flag pairs whose saturated-glint fraction exceeds this value.
    #[arg(long)]
    discard_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mask: MaskOpts,
}

#[derive(Debug, Args)]
struct PackEfArgs {
    #[arg(long)]
    input: PathBuf,
    /// Precomputed 8-bit mask; computed from the image when omitted.
    #[arg(long)]
    mask_image: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mask: MaskOpts,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    restored: PathBuf,
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Write the per-image table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BathyBinsArgs {
    /// One or more `.dsm` or ESRI ASCII rasters; each becomes a column.
    #[arg(required = true)]
    rasters: Vec<PathBuf>,
    /// `top:bottom:step` or comma-separated descending edges.
    #[arg(long, default_value = "0:-20:2")]
    bins: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BathyErrorsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Dataset directory containing `manifest.json`.
    dir: PathBuf,
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DISCARD_THRESHOLD)]
    discard_threshold: f64,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
}

/// Runs the CLI with `argv` (including the program name) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Mask(a) => {
            let params = a.mask.apply(MaskParams::default())?;
            let mask = compute_mask_dynamic(&load_image(&a.input)?, &params)?;
            mask.to_gray().save(&a.out).map_err(|source| Error::Image {
                path: a.out.clone(),
                source,
            })?;
            emit(
                out,
                &format!("saturated glint fraction {:.6}\n", mask.saturated_fraction()),
            )
        }
        Command::PackEf(a) => {
            let img = load_image(&a.input)?;
            let mask = match &a.mask_image {
                Some(p) => GlintMask::from_gray(&load_image(p)?.to_luma8()),
                None => compute_mask_dynamic(&img, &a.mask.apply(MaskParams::default())?)?,
            };
            write_ef(&a.out, &img.to_rgb32f(), &mask)?;
            emit(out, &format!("wrote {}\n", a.out.display()))
        }
        Command::Metrics(a) => {
            let threads = threads_from_env()?;
            let report = with_threads(threads, || metric_table(&a.restored, a.reference.as_deref()))??;
            if let Some(p) = &a.csv {
                write_file(p, &report.to_csv())?;
            }
            emit(out, &report.to_text())
        }
        Command::BathyBins(a) => {
            let bins = BinSpec::parse(&a.bins)?;
            let rasters = a
                .rasters
                .iter()
                .map(|p| Ok((stem(p), DsmRaster::read(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = bin_report(&rasters, &bins);
            if let Some(p) = &a.csv {
                write_file(p, &report.to_csv())?;
            }
            emit(out, &report.to_text())
        }
        Command::BathyErrors(a) => {
            let pred = DsmRaster::read(&a.pred)?;
            let reference = DsmRaster::read(&a.reference)?;
            let stats = vec![(stem(&a.pred), depth_errors(&pred, &reference)?)];
            if let Some(p) = &a.csv {
                write_file(p, &error_csv(&stats))?;
            }
            emit(out, &error_table(&stats))
        }
        Command::Split(a) => {
            let ratios = parse_ratios(&a.ratios)?;
            let path = a.dir.join(MANIFEST_FILE);
            let manifest = auto_discard(DatasetManifest::read(&path)?, a.discard_threshold);
            let manifest = split_dataset(manifest, ratios, a.seed)?;
            manifest.write(&path)?;
            let c = manifest.counts;
            emit(
                out,
                &format!(
                    "train {}  val {}  test {}  discarded {}\n",
                    c.train, c.val, c.test, c.discarded
                ),
            )
        }
        Command::Inspect(a) => emit(out, &inspect(&a.path)?),
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(spp) = a.spp {
        config.render.samples_per_pixel = spp;
    }
    if let Some(b) = a.bit_depth {
        config.render.output_bit_depth = b;
    }
    config.mask = a.mask.apply(config.mask)?;
    let threads = threads_from_env()?;
    let mut manifest = generate_dataset(a.count, a.seed, &a.out, &config, threads)?;
    if let Some(t) = a.discard_threshold {
        manifest = auto_discard(manifest, t);
        manifest.write(&a.out.join(MANIFEST_FILE))?;
    }
    emit(
        out,
        &format!(
            "generated {} pairs in {} ({} discarded)\n",
            manifest.entries.len(),
            a.out.display(),
            manifest.counts.discarded
        ),
    )
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse ratios '{s}'")))?;
    parts
        .try_into()
        .map_err(|_| Error::InvalidArgument(format!("ratios '{s}' must have three values")))
}

fn inspect(path: &Path) -> Result<String> {
    if path.is_dir() {
        return inspect(&path.join(MANIFEST_FILE));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    if name == MANIFEST_FILE {
        let m = DatasetManifest::read(path)?;
        let c = m.counts;
        return Ok(format!(
            "manifest v{}: {} entries (generator seed {})\ntrain {}  val {}  test {}  discarded {}  unassigned {}\n",
            m.version,
            m.entries.len(),
            m.generator_seed,
            c.train,
            c.val,
            c.test,
            c.discarded,
            c.unassigned
        ));
    }
    match ext.as_str() {
        "dsm" | "asc" => {
            let r = DsmRaster::read(path)?;
            let valid: Vec<f32> = r.values.iter().copied().filter(|&v| r.is_valid(v)).collect();
            let (lo, hi) = valid
                .iter()
                .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            Ok(format!(
                "raster {}x{} cell {} m origin ({}, {})\nvalid cells {}  depth range [{lo}, {hi}] m\n",
                r.width,
                r.height,
                r.cell_size_m,
                r.origin[0],
                r.origin[1],
                valid.len()
            ))
        }
        "ef" => {
            let t = read_ef(path)?;
            let m = t.mask();
            Ok(format!(
                "early-fusion tensor {}x{}x{}\nsaturated glint fraction {:.6}\n",
                t.width,
                t.height,
                t.planes.len(),
                m.saturated_fraction()
            ))
        }
        "json" => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let scene = parse_metadata_json(&text).map_err(|e| Error::format(path, e.to_string()))?;
            Ok(format!(
                "scene seed {}  class {}  depth {:.3} m  gsd {:.4} m  tilt {:.2} deg  sun elevation {:.2} deg\n",
                scene.seed,
                scene.seabed_class,
                scene.water.avg_depth_m,
                scene.camera.gsd_m(),
                scene.camera.tilt_deg,
                scene.sun.elevation_deg
            ))
        }
        _ => {
            let img = load_image(path)?;
            Ok(format!(
                "image {}x{} {:?}\nsharpness {:.3}  entropy {:.3} bits\n",
                img.width(),
                img.height(),
                img.color(),
                sharpness(&img),
                entropy(&img)
            ))
        }
    }
}
