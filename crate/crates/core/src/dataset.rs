//! Dataset assembly: generation of paired scenes, glint-based discarding,
//! seeded train/val/test splitting and the `manifest.json` file.

use std::path::{Path, PathBuf};

use image::ImageFormat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glint::{compute_mask_dynamic, MaskParams};
use crate::params::{metadata_json, sample_scene, GeneratorConfig};
use crate::render::{render_pair_with_id, RenderOptions};
use crate::rng::derive_seed;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
pub const DEFAULT_DISCARD_THRESHOLD: f64 = 0.35;
pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];
pub const THREADS_ENV: &str = "SEA_UNDISTORT_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Discarded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub clean_path: String,
    pub distorted_path: String,
    pub mask_path: String,
    pub metadata_path: String,
    /// Fraction of distorted-image pixels with a saturated glint mask.
    pub glint_fraction: f64,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub discarded: usize,
    pub unassigned: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test + self.discarded + self.unassigned
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    /// Seed the scenes were generated from.
    pub generator_seed: u64,
    /// Seed of the train/val/test permutation, once split.
    pub split_seed: Option<u64>,
    pub ratios: Option<[f64; 3]>,
    pub discard_threshold: Option<f64>,
    pub counts: SplitCounts,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(generator_seed: u64, entries: Vec<ManifestEntry>) -> Self {
        let mut m = Self {
            version: MANIFEST_VERSION,
            generator_seed,
            split_seed: None,
            ratios: None,
            discard_threshold: None,
            counts: SplitCounts::default(),
            entries,
        };
        m.refresh_counts();
        m
    }

    pub fn refresh_counts(&mut self) {
        let mut c = SplitCounts::default();
        for e in &self.entries {
            match e.split {
                Some(Split::Train) => c.train += 1,
                Some(Split::Val) => c.val += 1,
                Some(Split::Test) => c.test += 1,
                Some(Split::Discarded) => c.discarded += 1,
                None => c.unassigned += 1,
            }
        }
        self.counts = c;
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Config(format!("unsupported manifest version {}", self.version)));
        }
        let mut ids: Vec<&str> = self.entries.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate entry id '{}'", w[0])));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

/// Everything that shapes a generated dataset besides count and seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    pub render: RenderOptions,
    pub mask: MaskParams,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.render.validate()?;
        self.mask.validate()
    }

    /// Loads a JSON (`.json`) or TOML (anything else) configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Worker cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
    }
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:05}")
}

fn entry_for(index: usize, seed: u64) -> ManifestEntry {
    let id = scene_id(index);
    ManifestEntry {
        clean_path: format!("{id}_clean.png"),
        distorted_path: format!("{id}_distorted.png"),
        mask_path: format!("{id}_mask.png"),
        metadata_path: format!("{id}.json"),
        id,
        seed,
        glint_fraction: 0.0,
        split: None,
    }
}

fn write_png(img: &image::DynamicImage, path: &Path) -> Result<()> {
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

fn generate_one(index: usize, seed: u64, out_dir: &Path, config: &PipelineConfig) -> Result<ManifestEntry> {
    let mut entry = entry_for(index, derive_seed(seed, index as u64));
    let scene = sample_scene(entry.seed, &config.generator)?;
    let pair = render_pair_with_id(&scene, &config.render, &entry.id)?;
    let mask = compute_mask_dynamic(&pair.distorted, &config.mask)?;
    entry.glint_fraction = mask.saturated_fraction();

    let paths: Vec<PathBuf> = [
        &entry.clean_path,
        &entry.distorted_path,
        &entry.mask_path,
        &entry.metadata_path,
    ]
    .iter()
    .map(|p| out_dir.join(p))
    .collect();
    let written = (|| {
        write_png(&pair.clean, &paths[0])?;
        write_png(&pair.distorted, &paths[1])?;
        write_png(&image::DynamicImage::ImageLuma8(mask.to_gray()), &paths[2])?;
        std::fs::write(&paths[3], metadata_json(&scene)).map_err(|e| Error::io(&paths[3], e))
    })();
    if let Err(e) = written {
        for p in &paths {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(entry)
}

/// Renders `count` scenes into `out_dir` and writes `manifest.json`.
///
/// Output is a pure function of `(count, seed, config)`; `threads` only
/// changes the wall-clock time.
pub fn generate_dataset(
    count: usize,
    seed: u64,
    out_dir: &Path,
    config: &PipelineConfig,
    threads: Option<usize>,
) -> Result<DatasetManifest> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let entries = with_threads(threads, || {
        (0..count)
            .into_par_iter()
            .map(|i| generate_one(i, seed, out_dir, config))
            .collect::<Result<Vec<_>>>()
    })??;
    let manifest = DatasetManifest::new(seed, entries);
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Flags entries whose glint fraction exceeds `threshold` as discarded.
/// Entries below the threshold that were previously discarded become unassigned.
pub fn auto_discard(mut manifest: DatasetManifest, threshold: f64) -> DatasetManifest {
    for e in &mut manifest.entries {
        if e.glint_fraction > threshold {
            e.split = Some(Split::Discarded);
        } else if e.split == Some(Split::Discarded) {
            e.split = None;
        }
    }
    manifest.discard_threshold = Some(threshold);
    manifest.refresh_counts();
    manifest
}

/// Sizes of the train/val/test partitions of `n` entries: val and test are
/// floored, the remainder goes to train.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> Result<[usize; 3]> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios {ratios:?} must be non-negative and sum to 1"
        )));
    }
    let val = (n as f64 * ratios[1] + 1e-9).floor() as usize;
    let test = (n as f64 * ratios[2] + 1e-9).floor() as usize;
    Ok([n - val - test, val, test])
}

/// Assigns every non-discarded entry to train, val or test using a seeded
/// permutation.
pub fn split_dataset(mut manifest: DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<DatasetManifest> {
    let mut eligible: Vec<usize> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.split != Some(Split::Discarded))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(Error::InvalidArgument("no entries available to split".into()));
    }
    let [train, val, _] = split_sizes(eligible.len(), ratios)?;
    eligible.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (rank, &i) in eligible.iter().enumerate() {
        manifest.entries[i].split = Some(if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        });
    }
    manifest.split_seed = Some(seed);
    manifest.ratios = Some(ratios);
    manifest.refresh_counts();
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(fractions: &[f64]) -> DatasetManifest {
        DatasetManifest::new(
            0,
            fractions
                .iter()
                .enumerate()
                .map(|(i, &f)| ManifestEntry {
                    glint_fraction: f,
                    ..entry_for(i, i as u64)
                })
                .collect(),
        )
    }

    #[test]
    fn split_sizes_for_retained_corpus() {
        assert_eq!(split_sizes(1002, DEFAULT_RATIOS).unwrap(), [802, 100, 100]);
        assert_eq!(split_sizes(7, [1.0, 0.0, 0.0]).unwrap(), [7, 0, 0]);
        assert!(split_sizes(10, [0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn discard_threshold_extremes() {
        let m = auto_discard(manifest(&[0.0, 0.5, 1.0]), 1.01);
        assert_eq!(m.counts.discarded, 0);
        let m = auto_discard(m, 0.99);
        assert_eq!(m.counts.discarded, 1);
        assert_eq!(m.discard_threshold, Some(0.99));
    }

    #[test]
    fn split_skips_discarded() {
        let m = auto_discard(manifest(&[0.9, 0.0, 0.0, 0.0, 0.0]), 0.35);
        let m = split_dataset(m, DEFAULT_RATIOS, 3).unwrap();
        assert_eq!(m.entries[0].split, Some(Split::Discarded));
        assert_eq!(m.counts.total(), 5);
        assert_eq!(m.counts.unassigned, 0);
        assert!(split_dataset(manifest(&[]), DEFAULT_RATIOS, 1).is_err());
    }

    #[test]
    fn manifest_json_round_trip() {
        let m = split_dataset(manifest(&[0.1, 0.2, 0.3]), DEFAULT_RATIOS, 9).unwrap();
        let back: DatasetManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_json().contains("\"version\": 1"));
    }
}
