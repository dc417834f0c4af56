//! Procedural seabed heightfields and albedo for the four seabed classes.
//!
//! A patch is a square grid of `resolution × resolution` nodes spanning
//! `[0, extent_m]` on both axes. Heights are relative to the scene's mean
//! depth. Lookups interpolate bilinearly and clamp outside the extent.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bathy::DsmRaster;
use crate::error::{Error, Result};
use crate::noise::{cell_value, Fbm};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeabedClass {
    Rock,
    Sand,
    Gravel,
    Seagrass,
}

impl SeabedClass {
    pub const ALL: [SeabedClass; 4] = [
        SeabedClass::Rock,
        SeabedClass::Sand,
        SeabedClass::Gravel,
        SeabedClass::Seagrass,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeabedClass::Rock => "rock",
            SeabedClass::Sand => "sand",
            SeabedClass::Gravel => "gravel",
            SeabedClass::Seagrass => "seagrass",
        }
    }
}

impl fmt::Display for SeabedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeabedClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SeabedClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown seabed class '{s}'")))
    }
}

/// Albedo anchors and feature scales for the seabed classes.
///
/// Defaults: rock (0.36, 0.33, 0.29) with cracks (0.10, 0.09, 0.08),
/// sand (0.78, 0.70, 0.52), gravel (0.52, 0.49, 0.44),
/// seagrass (0.07, 0.24, 0.09).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeabedStyle {
    pub rock_rgb: [f64; 3],
    pub crack_rgb: [f64; 3],
    pub sand_rgb: [f64; 3],
    pub gravel_rgb: [f64; 3],
    pub seagrass_rgb: [f64; 3],
    /// Approximate fraction of a seagrass patch covered by vegetation.
    pub seagrass_cover: f64,
    pub ripple_wavelength_m: f64,
    pub pebble_size_m: f64,
    pub fbm_octaves: u32,
}

impl Default for SeabedStyle {
    fn default() -> Self {
        Self {
            rock_rgb: [0.36, 0.33, 0.29],
            crack_rgb: [0.10, 0.09, 0.08],
            sand_rgb: [0.78, 0.70, 0.52],
            gravel_rgb: [0.52, 0.49, 0.44],
            seagrass_rgb: [0.07, 0.24, 0.09],
            seagrass_cover: 0.45,
            ripple_wavelength_m: 0.6,
            pebble_size_m: 0.08,
            fbm_octaves: 5,
        }
    }
}

impl SeabedStyle {
    pub fn validate(&self) -> Result<()> {
        let palettes = [
            self.rock_rgb,
            self.crack_rgb,
            self.sand_rgb,
            self.gravel_rgb,
            self.seagrass_rgb,
        ];
        if palettes.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Config("seabed albedo anchors must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.seagrass_cover) {
            return Err(Error::Config("seagrass_cover must lie in [0, 1]".into()));
        }
        if !(self.ripple_wavelength_m > 0.0 && self.pebble_size_m > 0.0) {
            return Err(Error::Config("seabed feature sizes must be positive".into()));
        }
        if !(4..=6).contains(&self.fbm_octaves) {
            return Err(Error::Config("fbm_octaves must be between 4 and 6".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeabedPatch {
    pub extent_m: f64,
    pub resolution: usize,
    /// Row-major `resolution²` heights; row index follows +y.
    pub height_m: Vec<f32>,
    pub albedo_rgb: Vec<[f32; 3]>,
    pub class: SeabedClass,
    pub seed: u64,
}

impl SeabedPatch {
    /// Builds a patch from explicit grids.
    pub fn from_grids(
        class: SeabedClass,
        seed: u64,
        extent_m: f64,
        resolution: usize,
        height_m: Vec<f32>,
        albedo_rgb: Vec<[f32; 3]>,
    ) -> Result<Self> {
        check_shape(extent_m, resolution)?;
        let n = resolution * resolution;
        if height_m.len() != n || albedo_rgb.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "grids must hold {n} cells (got {} heights, {} albedo)",
                height_m.len(),
                albedo_rgb.len()
            )));
        }
        if albedo_rgb.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidArgument("albedo must lie in [0, 1]".into()));
        }
        Ok(Self {
            extent_m,
            resolution,
            height_m,
            albedo_rgb,
            class,
            seed,
        })
    }

    /// Node spacing in meters.
    pub fn cell_size(&self) -> f64 {
        self.extent_m / (self.resolution - 1) as f64
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.extent_m).contains(&x) && (0.0..=self.extent_m).contains(&y)
    }

    pub fn max_abs_height(&self) -> f64 {
        self.height_m.iter().fold(0.0f64, |m, h| m.max(h.abs() as f64))
    }

    #[inline]
    fn locate(&self, x: f64, y: f64) -> (usize, usize, f64, f64) {
        let last = (self.resolution - 1) as f64;
        let u = (x / self.cell_size()).clamp(0.0, last);
        let v = (y / self.cell_size()).clamp(0.0, last);
        let i = (u.floor() as usize).min(self.resolution - 2);
        let j = (v.floor() as usize).min(self.resolution - 2);
        (i, j, u - i as f64, v - j as f64)
    }

    /// Bilinear height lookup, clamped to the patch.
    pub fn sample_height(&self, x: f64, y: f64) -> f64 {
        let (i, j, fu, fv) = self.locate(x, y);
        let r = self.resolution;
        let h = |ii: usize, jj: usize| self.height_m[jj * r + ii] as f64;
        let a = h(i, j) + fu * (h(i + 1, j) - h(i, j));
        let b = h(i, j + 1) + fu * (h(i + 1, j + 1) - h(i, j + 1));
        a + fv * (b - a)
    }

    /// Height plus the gradient of the bilinear interpolant.
    pub fn sample_height_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (i, j, fu, fv) = self.locate(x, y);
        let r = self.resolution;
        let h = |ii: usize, jj: usize| self.height_m[jj * r + ii] as f64;
        let (h00, h10, h01, h11) = (h(i, j), h(i + 1, j), h(i, j + 1), h(i + 1, j + 1));
        let a = h00 + fu * (h10 - h00);
        let b = h01 + fu * (h11 - h01);
        let inv = 1.0 / self.cell_size();
        let dx = ((h10 - h00) + fv * ((h11 - h01) - (h10 - h00))) * inv;
        let dy = (b - a) * inv;
        (a + fv * (b - a), dx, dy)
    }

    /// Bilinear albedo lookup, clamped to the patch.
    pub fn sample_albedo(&self, x: f64, y: f64) -> [f64; 3] {
        let (i, j, fu, fv) = self.locate(x, y);
        let r = self.resolution;
        let c00 = self.albedo_rgb[j * r + i];
        let c10 = self.albedo_rgb[j * r + i + 1];
        let c01 = self.albedo_rgb[(j + 1) * r + i];
        let c11 = self.albedo_rgb[(j + 1) * r + i + 1];
        std::array::from_fn(|k| {
            let a = c00[k] as f64 + fu * (c10[k] as f64 - c00[k] as f64);
            let b = c01[k] as f64 + fu * (c11[k] as f64 - c01[k] as f64);
            a + fv * (b - a)
        })
    }

    /// Height grid as a raster for debugging. Row 0 of the raster is the
    /// northern (largest y) edge.
    pub fn height_raster(&self) -> DsmRaster {
        self.grid_raster(|idx| self.height_m[idx])
    }

    /// One albedo channel (0 = red) as a raster.
    pub fn albedo_raster(&self, channel: usize) -> DsmRaster {
        self.grid_raster(|idx| self.albedo_rgb[idx][channel])
    }

    fn grid_raster(&self, value: impl Fn(usize) -> f32) -> DsmRaster {
        let r = self.resolution;
        let cell = self.cell_size();
        let mut values = Vec::with_capacity(r * r);
        for row in 0..r {
            let j = r - 1 - row;
            values.extend((0..r).map(|i| value(j * r + i)));
        }
        DsmRaster {
            width: r,
            height: r,
            cell_size_m: cell,
            origin: [-0.5 * cell, self.extent_m + 0.5 * cell],
            values,
            nodata: f32::NAN,
        }
    }
}

fn check_shape(extent_m: f64, resolution: usize) -> Result<()> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} must be at least 64")));
    }
    if !(extent_m > 0.0 && extent_m.is_finite()) {
        return Err(Error::InvalidArgument(format!("extent {extent_m} must be positive")));
    }
    Ok(())
}

/// Generates a seabed patch with the default [`SeabedStyle`].
pub fn generate_seabed(
    class: SeabedClass,
    seed: u64,
    extent_m: f64,
    resolution: usize,
    roughness: f64,
) -> Result<SeabedPatch> {
    generate_seabed_with_style(class, seed, extent_m, resolution, roughness, &SeabedStyle::default())
}

pub fn generate_seabed_with_style(
    class: SeabedClass,
    seed: u64,
    extent_m: f64,
    resolution: usize,
    roughness: f64,
    style: &SeabedStyle,
) -> Result<SeabedPatch> {
    check_shape(extent_m, resolution)?;
    if !(roughness >= 0.0 && roughness.is_finite()) {
        return Err(Error::InvalidArgument(format!("roughness {roughness} must be >= 0")));
    }
    style.validate()?;

    let fields = ClassFields::new(class, seed, style);
    let cell = extent_m / (resolution - 1) as f64;
    let rows: Vec<(Vec<f32>, Vec<[f32; 3]>)> = (0..resolution)
        .into_par_iter()
        .map(|j| {
            let y = j as f64 * cell;
            let mut hs = Vec::with_capacity(resolution);
            let mut cs = Vec::with_capacity(resolution);
            for i in 0..resolution {
                let x = i as f64 * cell;
                let (shape, rgb) = fields.evaluate(x, y);
                hs.push((roughness * shape.clamp(-1.0, 1.0)) as f32);
                cs.push(rgb.map(|c| c.clamp(0.0, 1.0) as f32));
            }
            (hs, cs)
        })
        .collect();

    let mut height_m = Vec::with_capacity(resolution * resolution);
    let mut albedo_rgb = Vec::with_capacity(resolution * resolution);
    for (hs, cs) in rows {
        height_m.extend(hs);
        albedo_rgb.extend(cs);
    }
    // f32 rounding must not push a node past the amplitude bound
    let bound = roughness as f32;
    for h in &mut height_m {
        if h.abs() > bound {
            *h = h.signum() * bound;
        }
        if roughness == 0.0 {
            *h = 0.0;
        }
    }
    Ok(SeabedPatch {
        extent_m,
        resolution,
        height_m,
        albedo_rgb,
        class,
        seed,
    })
}

/// Noise fields backing one class. `evaluate` returns a unitless height
/// shape in `[-1, 1]` and an unclamped albedo.
struct ClassFields<'a> {
    class: SeabedClass,
    style: &'a SeabedStyle,
    seed: u64,
    base: Fbm,
    detail: Fbm,
    aux: Fbm,
    ripple_dir: [f64; 2],
}

impl<'a> ClassFields<'a> {
    fn new(class: SeabedClass, seed: u64, style: &'a SeabedStyle) -> Self {
        let oct = style.fbm_octaves;
        let (base_freq, detail_freq, aux_freq) = match class {
            SeabedClass::Rock => (1.0 / 3.0, 1.0 / 0.7, 1.0 / 1.5),
            SeabedClass::Sand => (1.0 / 4.0, 1.0 / 0.5, 1.0 / 2.0),
            SeabedClass::Gravel => (1.0 / 1.5, 1.0 / 0.3, 1.0 / 5.0),
            SeabedClass::Seagrass => (1.0 / 4.0, 1.0 / 0.15, 1.0 / 2.5),
        };
        let angle = crate::rng::unit_f64(derive_seed(seed, 40)) * std::f64::consts::PI;
        Self {
            class,
            style,
            seed,
            base: Fbm::new(derive_seed(seed, 10), oct, base_freq),
            detail: Fbm::new(derive_seed(seed, 20), oct.min(4), detail_freq),
            aux: Fbm::new(derive_seed(seed, 30), 4, aux_freq),
            ripple_dir: [angle.cos(), angle.sin()],
        }
    }

    fn ripple(&self, x: f64, y: f64) -> f64 {
        let along = x * self.ripple_dir[0] + y * self.ripple_dir[1];
        let warp = 2.0 * self.base.sample(x, y);
        (std::f64::consts::TAU * along / self.style.ripple_wavelength_m + warp).sin()
    }

    fn evaluate(&self, x: f64, y: f64) -> (f64, [f64; 3]) {
        let s = self.style;
        match self.class {
            SeabedClass::Rock => {
                let base = self.base.sample(x, y);
                let c = self.aux.sample(x, y).abs();
                let crack = (1.0 - c / 0.05).max(0.0);
                let shape = 0.8 * base - 0.3 * crack;
                let tone = 0.85 + 0.3 * self.detail.sample(x, y) + 0.15 * base;
                let rgb = std::array::from_fn(|k| {
                    let stone = s.rock_rgb[k] * tone;
                    stone + crack * (s.crack_rgb[k] - stone)
                });
                (shape, rgb)
            }
            SeabedClass::Sand => {
                let r = self.ripple(x, y);
                let shape = 0.35 * (0.7 * r + 0.3 * self.aux.sample(x, y));
                let tone = 0.94 + 0.08 * self.detail.sample(x, y) + 0.03 * r;
                (shape, s.sand_rgb.map(|c| c * tone))
            }
            SeabedClass::Gravel => {
                let size = s.pebble_size_m;
                let (gx, gy) = (x / size, y / size);
                let (ix, iy) = (gx.floor() as i64, gy.floor() as i64);
                let (fx, fy) = (gx - ix as f64 - 0.5, gy - iy as f64 - 0.5);
                let dome = (1.0 - 4.0 * (fx * fx + fy * fy)).max(0.0);
                let pebble = cell_value(self.seed, ix, iy);
                let shape = 0.5 * (0.6 * dome + 0.4 * self.aux.sample(x, y));
                let tone = (0.7 + 0.6 * pebble) * (0.55 + 0.45 * dome.sqrt()) + 0.05 * self.detail.sample(x, y);
                (shape, s.gravel_rgb.map(|c| c * tone))
            }
            SeabedClass::Seagrass => {
                let r = self.ripple(x, y);
                // cover fraction maps onto a threshold of the roughly symmetric fbm field
                let threshold = (0.5 - s.seagrass_cover) * 0.6;
                let m = smoothstep(threshold - 0.01, threshold + 0.01, self.aux.sample(x, y));
                let blades = self.detail.sample(x, y);
                let sand_tone = 0.94 + 0.03 * r;
                let grass_tone = 0.9 + 0.2 * blades;
                let shape = 0.35 * (1.0 - m) * 0.7 * r + m * (0.3 + 0.2 * blades);
                let rgb = std::array::from_fn(|k| {
                    let sand = s.sand_rgb[k] * sand_tone;
                    sand + m * (s.seagrass_rgb[k] * grass_tone - sand)
                });
                (shape, rgb)
            }
        }
    }
}

#[inline]
fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_roughness_sand_is_flat() {
        let p = generate_seabed(SeabedClass::Sand, 3, 10.0, 64, 0.0).unwrap();
        assert!(p.height_m.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn deterministic_per_class_and_seed() {
        for class in SeabedClass::ALL {
            let a = generate_seabed(class, 12, 8.0, 64, 0.3).unwrap();
            let b = generate_seabed(class, 12, 8.0, 64, 0.3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn invalid_shape_rejected() {
        assert!(generate_seabed(SeabedClass::Rock, 1, 10.0, 63, 0.1).is_err());
        assert!(generate_seabed(SeabedClass::Rock, 1, 0.0, 64, 0.1).is_err());
        assert!(generate_seabed(SeabedClass::Rock, 1, 10.0, 64, -0.1).is_err());
    }

    #[test]
    fn bounds_hold() {
        for class in SeabedClass::ALL {
            let p = generate_seabed(class, 5, 12.0, 96, 0.25).unwrap();
            assert_eq!(p.height_m.len(), 96 * 96);
            assert!(p.max_abs_height() <= 0.25 + 1e-12);
            assert!(p.albedo_rgb.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn node_and_midpoint_interpolation() {
        let r = 64;
        let mut h = vec![0.0f32; r * r];
        h[5 * r + 7] = 2.0;
        h[5 * r + 8] = 4.0;
        let albedo = vec![[0.5f32; 3]; r * r];
        let p = SeabedPatch::from_grids(SeabedClass::Sand, 0, 63.0, r, h, albedo).unwrap();
        assert_eq!(p.sample_height(7.0, 5.0), 2.0);
        assert_eq!(p.sample_height(8.0, 5.0), 4.0);
        assert_eq!(p.sample_height(7.5, 5.0), 3.0);
        // clamped outside the extent
        assert_eq!(p.sample_height(-5.0, -5.0), 0.0);
        assert_eq!(p.sample_albedo(100.0, 3.0), [0.5; 3]);
    }

    #[test]
    fn class_names_round_trip() {
        for c in SeabedClass::ALL {
            assert_eq!(c.as_str().parse::<SeabedClass>().unwrap(), c);
        }
        assert!("mud".parse::<SeabedClass>().is_err());
    }
}
