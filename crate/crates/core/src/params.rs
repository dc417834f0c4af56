//! Per-scene parameter sampling and the per-image metadata record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::seabed::SeabedClass;
use crate::waves::WaveSpectrum;

pub const SENSOR_WIDTH_MM: f64 = 36.0;
pub const PIXEL_WIDTHS: [u32; 2] = [4000, 5472];
pub const FOCAL_LENGTHS_MM: [f64; 2] = [20.0, 24.0];
pub const CROP_PX: u32 = 512;
pub const ALTITUDE_RANGE_M: [f64; 2] = [30.0, 200.0];
pub const TILT_RANGE_DEG: [f64; 2] = [0.0, 5.0];
pub const SUN_ELEVATION_RANGE_DEG: [f64; 2] = [25.0, 70.0];
pub const DEPTH_RANGE_M: [f64; 2] = [-8.0, -0.5];
pub const GSD_RANGE_M: [f64; 2] = [0.014, 0.063];

const SEABED_STREAM: u64 = 1;
const SURFACE_STREAM: u64 = 2;

/// Ground sampling distance in meters.
///
/// `altitude · (sensor_width / pixel_width) / focal`, with millimetres
/// converted to meters.
pub fn compute_gsd(altitude_m: f64, focal_mm: f64, sensor_width_mm: f64, full_pixel_width: u32) -> f64 {
    altitude_m * (sensor_width_mm / 1000.0 / full_pixel_width as f64) / (focal_mm / 1000.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraParams {
    pub sensor_width_mm: f64,
    pub full_pixel_width: u32,
    pub focal_mm: f64,
    pub altitude_m: f64,
    pub tilt_deg: f64,
    pub yaw_deg: f64,
    pub crop_px: u32,
}

impl CameraParams {
    pub fn gsd_m(&self) -> f64 {
        compute_gsd(self.altitude_m, self.focal_mm, self.sensor_width_mm, self.full_pixel_width)
    }

    /// Physical size of one sensor pixel in millimetres.
    pub fn pixel_pitch_mm(&self) -> f64 {
        self.sensor_width_mm / self.full_pixel_width as f64
    }
}

/// Sky model controls. `air` scales the blue ambient sky term, `dust`
/// warms the direct beam and adds a neutral haze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atmosphere {
    pub air: f64,
    pub dust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SunParams {
    pub elevation_deg: f64,
    pub azimuth_deg: f64,
    pub angular_radius_deg: f64,
    pub irradiance: f64,
    pub atmosphere: Atmosphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterParams {
    pub ior: f64,
    /// Beam attenuation per channel, 1/m.
    pub attenuation_rgb: [f64; 3],
    /// Radiance of an infinitely deep water column, relative to sun irradiance.
    pub veiling_rgb: [f64; 3],
    /// Mean seabed elevation relative to the still-water plane (negative).
    pub avg_depth_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub camera: CameraParams,
    pub sun: SunParams,
    pub water: WaterParams,
    pub surface: WaveSpectrum,
    pub seabed_class: SeabedClass,
    /// Relief amplitude of the seabed heightfield, meters.
    pub seabed_roughness_m: f64,
    pub seed: u64,
}

impl SceneParams {
    pub fn seabed_seed(&self) -> u64 {
        derive_seed(self.seed, SEABED_STREAM)
    }
}

/// Sampling ranges for [`sample_scene`].
///
/// The camera, sun-elevation, depth and GSD ranges must lie inside the
/// published dataset ranges unless `allow_out_of_range` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub sensor_width_mm: f64,
    pub pixel_widths: Vec<u32>,
    pub focal_lengths_mm: Vec<f64>,
    pub crop_px: u32,
    pub altitude_m: [f64; 2],
    pub tilt_deg: [f64; 2],
    pub sun_elevation_deg: [f64; 2],
    pub avg_depth_m: [f64; 2],
    pub gsd_m: [f64; 2],
    pub sun_angular_radius_deg: f64,
    pub sun_irradiance: [f64; 2],
    pub atmosphere_air: [f64; 2],
    pub atmosphere_dust: [f64; 2],
    pub water_ior: f64,
    pub attenuation_rgb: [f64; 3],
    /// Relative jitter applied independently to each attenuation channel.
    pub attenuation_jitter: f64,
    pub veiling_rgb: [f64; 3],
    pub veiling_jitter: f64,
    /// Range of the per-scene maximum component amplitude of the wave spectrum.
    pub wave_amplitude_max_m: [f64; 2],
    pub wave_components: u32,
    pub wavelength_range_m: [f64; 2],
    pub direction_spread_deg: f64,
    pub seabed_roughness_m: [f64; 2],
    pub seabed_classes: Vec<SeabedClass>,
    pub allow_out_of_range: bool,
    /// Cap on GSD rejection attempts per scene.
    pub max_rejections: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            sensor_width_mm: SENSOR_WIDTH_MM,
            pixel_widths: PIXEL_WIDTHS.to_vec(),
            focal_lengths_mm: FOCAL_LENGTHS_MM.to_vec(),
            crop_px: CROP_PX,
            altitude_m: ALTITUDE_RANGE_M,
            tilt_deg: TILT_RANGE_DEG,
            sun_elevation_deg: SUN_ELEVATION_RANGE_DEG,
            avg_depth_m: DEPTH_RANGE_M,
            gsd_m: GSD_RANGE_M,
            sun_angular_radius_deg: 0.27,
            sun_irradiance: [0.8, 1.2],
            atmosphere_air: [0.5, 2.0],
            atmosphere_dust: [0.0, 1.0],
            water_ior: 1.34,
            attenuation_rgb: [0.45, 0.15, 0.08],
            attenuation_jitter: 0.3,
            veiling_rgb: [0.002, 0.008, 0.010],
            veiling_jitter: 0.3,
            wave_amplitude_max_m: [0.002, 0.010],
            wave_components: 24,
            wavelength_range_m: [0.4, 6.0],
            direction_spread_deg: 60.0,
            seabed_roughness_m: [0.05, 0.5],
            seabed_classes: SeabedClass::ALL.to_vec(),
            allow_out_of_range: false,
            max_rejections: 10_000,
        }
    }
}

fn check_range(name: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Error::Config(format!("{name}: [{}, {}] is not a valid range", r[0], r[1])));
    }
    Ok(())
}

fn check_subset(name: &str, r: [f64; 2], allowed: [f64; 2]) -> Result<()> {
    if r[0] < allowed[0] || r[1] > allowed[1] {
        return Err(Error::Config(format!(
            "{name}: [{}, {}] exceeds the dataset range [{}, {}] (set allow_out_of_range to override)",
            r[0], r[1], allowed[0], allowed[1]
        )));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("altitude_m", self.altitude_m),
            ("tilt_deg", self.tilt_deg),
            ("sun_elevation_deg", self.sun_elevation_deg),
            ("avg_depth_m", self.avg_depth_m),
            ("gsd_m", self.gsd_m),
            ("sun_irradiance", self.sun_irradiance),
            ("atmosphere_air", self.atmosphere_air),
            ("atmosphere_dust", self.atmosphere_dust),
            ("wave_amplitude_max_m", self.wave_amplitude_max_m),
            ("wavelength_range_m", self.wavelength_range_m),
            ("seabed_roughness_m", self.seabed_roughness_m),
        ] {
            check_range(name, r)?;
        }
        if self.pixel_widths.is_empty() || self.focal_lengths_mm.is_empty() || self.seabed_classes.is_empty() {
            return Err(Error::Config(
                "pixel_widths, focal_lengths_mm and seabed_classes must be non-empty".into(),
            ));
        }
        if self.pixel_widths.iter().any(|&w| w < self.crop_px) {
            return Err(Error::Config("pixel width smaller than the rendered crop".into()));
        }
        if !(self.sensor_width_mm > 0.0) || self.focal_lengths_mm.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::Config("sensor width and focal lengths must be positive".into()));
        }
        if self.altitude_m[0] <= 0.0 || self.avg_depth_m[1] >= 0.0 {
            return Err(Error::Config("altitude must be positive and depth negative".into()));
        }
        if !(self.water_ior > 1.0) {
            return Err(Error::Config(format!("water ior {} must exceed 1", self.water_ior)));
        }
        if self.attenuation_rgb.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Config("attenuation coefficients must be positive".into()));
        }
        if self.veiling_rgb.iter().any(|&c| !(c >= 0.0)) {
            return Err(Error::Config("veiling radiance must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.attenuation_jitter) || !(0.0..1.0).contains(&self.veiling_jitter) {
            return Err(Error::Config("jitter fractions must lie in [0, 1)".into()));
        }
        if self.atmosphere_air[0] < 0.0 || self.atmosphere_dust[0] < 0.0 {
            return Err(Error::Config("atmosphere parameters must be non-negative".into()));
        }
        if self.wave_amplitude_max_m[0] < 0.0 || self.seabed_roughness_m[0] < 0.0 {
            return Err(Error::Config("amplitudes must be non-negative".into()));
        }
        if self.wavelength_range_m[0] <= 0.0 {
            return Err(Error::Config("wavelengths must be positive".into()));
        }
        if self.crop_px == 0 || self.max_rejections == 0 {
            return Err(Error::Config("crop_px and max_rejections must be positive".into()));
        }

        if !self.allow_out_of_range {
            if self.pixel_widths.iter().any(|w| !PIXEL_WIDTHS.contains(w)) {
                return Err(Error::Config(format!(
                    "pixel_widths must be drawn from {PIXEL_WIDTHS:?} (set allow_out_of_range to override)"
                )));
            }
            if self.focal_lengths_mm.iter().any(|f| !FOCAL_LENGTHS_MM.contains(f)) {
                return Err(Error::Config(format!(
                    "focal_lengths_mm must be drawn from {FOCAL_LENGTHS_MM:?} (set allow_out_of_range to override)"
                )));
            }
            if self.sensor_width_mm != SENSOR_WIDTH_MM || self.crop_px != CROP_PX {
                return Err(Error::Config(
                    "sensor width is fixed at 36 mm and the crop at 512 px (set allow_out_of_range to override)"
                        .into(),
                ));
            }
            check_subset("altitude_m", self.altitude_m, ALTITUDE_RANGE_M)?;
            check_subset("tilt_deg", self.tilt_deg, TILT_RANGE_DEG)?;
            check_subset("sun_elevation_deg", self.sun_elevation_deg, SUN_ELEVATION_RANGE_DEG)?;
            check_subset("avg_depth_m", self.avg_depth_m, DEPTH_RANGE_M)?;
            check_subset("gsd_m", self.gsd_m, GSD_RANGE_M)?;
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

fn jitter3(rng: &mut ChaCha8Rng, base: [f64; 3], fraction: f64) -> [f64; 3] {
    base.map(|c| c * uniform(rng, [1.0 - fraction, 1.0 + fraction]))
}

/// Samples one scene. A pure function of `(seed, config)`.
pub fn sample_scene(seed: u64, config: &GeneratorConfig) -> Result<SceneParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut accepted = None;
    for _ in 0..config.max_rejections {
        let full_pixel_width = pick(&mut rng, &config.pixel_widths);
        let focal_mm = pick(&mut rng, &config.focal_lengths_mm);
        let altitude_m = uniform(&mut rng, config.altitude_m);
        let gsd = compute_gsd(altitude_m, focal_mm, config.sensor_width_mm, full_pixel_width);
        if gsd >= config.gsd_m[0] && gsd <= config.gsd_m[1] {
            accepted = Some((full_pixel_width, focal_mm, altitude_m));
            break;
        }
    }
    let (full_pixel_width, focal_mm, altitude_m) = accepted.ok_or_else(|| {
        Error::Config(format!(
            "no camera configuration reached the GSD range [{}, {}] after {} attempts",
            config.gsd_m[0], config.gsd_m[1], config.max_rejections
        ))
    })?;

    let camera = CameraParams {
        sensor_width_mm: config.sensor_width_mm,
        full_pixel_width,
        focal_mm,
        altitude_m,
        tilt_deg: uniform(&mut rng, config.tilt_deg),
        yaw_deg: rng.random_range(0.0..360.0),
        crop_px: config.crop_px,
    };

    let sun = SunParams {
        elevation_deg: uniform(&mut rng, config.sun_elevation_deg),
        azimuth_deg: rng.random_range(0.0..360.0),
        angular_radius_deg: config.sun_angular_radius_deg,
        irradiance: uniform(&mut rng, config.sun_irradiance),
        atmosphere: Atmosphere {
            air: uniform(&mut rng, config.atmosphere_air),
            dust: uniform(&mut rng, config.atmosphere_dust),
        },
    };

    let avg_depth_m = uniform(&mut rng, config.avg_depth_m);
    let water = WaterParams {
        ior: config.water_ior,
        attenuation_rgb: jitter3(&mut rng, config.attenuation_rgb, config.attenuation_jitter),
        veiling_rgb: jitter3(&mut rng, config.veiling_rgb, config.veiling_jitter),
        avg_depth_m,
    };

    // Waves may use at most 30% of the water depth, the seabed half of
    // what is left, so the interface never touches the bottom.
    let n = config.wave_components;
    let depth = -avg_depth_m;
    let mut amp_max = uniform(&mut rng, config.wave_amplitude_max_m);
    if n > 0 {
        amp_max = amp_max.min(0.3 * depth / n as f64);
    }
    let surface = WaveSpectrum {
        n_components: n,
        amplitude_range_m: [0.0, amp_max],
        wavelength_range_m: config.wavelength_range_m,
        direction_deg: rng.random_range(0.0..360.0),
        direction_spread_deg: config.direction_spread_deg,
        seed: derive_seed(seed, SURFACE_STREAM),
    };
    let clearance = depth - surface.max_total_amplitude();
    let seabed_roughness_m = uniform(&mut rng, config.seabed_roughness_m).min(0.5 * clearance);
    let seabed_class = pick(&mut rng, &config.seabed_classes);

    Ok(SceneParams {
        camera,
        sun,
        water,
        surface,
        seabed_class,
        seabed_roughness_m,
        seed,
    })
}

/// Flat metadata record written next to each image pair as `<id>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMetadata {
    pub seed: u64,
    pub sensor_width_mm: f64,
    pub full_pixel_width: u32,
    pub focal_mm: f64,
    pub altitude_m: f64,
    pub gsd_m: f64,
    pub tilt_deg: f64,
    pub yaw_deg: f64,
    pub crop_px: u32,
    pub sun_elevation_deg: f64,
    pub sun_azimuth_deg: f64,
    pub sun_angular_radius_deg: f64,
    pub sun_irradiance: f64,
    pub atmosphere: Atmosphere,
    pub water: WaterMetadata,
    pub avg_depth_m: f64,
    pub seabed_class: SeabedClass,
    pub seabed_roughness_m: f64,
    pub surface: WaveSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaterMetadata {
    pub ior: f64,
    pub attenuation_rgb: [f64; 3],
    pub veiling_rgb: [f64; 3],
}

impl From<&SceneParams> for SceneMetadata {
    fn from(s: &SceneParams) -> Self {
        SceneMetadata {
            seed: s.seed,
            sensor_width_mm: s.camera.sensor_width_mm,
            full_pixel_width: s.camera.full_pixel_width,
            focal_mm: s.camera.focal_mm,
            altitude_m: s.camera.altitude_m,
            gsd_m: s.camera.gsd_m(),
            tilt_deg: s.camera.tilt_deg,
            yaw_deg: s.camera.yaw_deg,
            crop_px: s.camera.crop_px,
            sun_elevation_deg: s.sun.elevation_deg,
            sun_azimuth_deg: s.sun.azimuth_deg,
            sun_angular_radius_deg: s.sun.angular_radius_deg,
            sun_irradiance: s.sun.irradiance,
            atmosphere: s.sun.atmosphere,
            water: WaterMetadata {
                ior: s.water.ior,
                attenuation_rgb: s.water.attenuation_rgb,
                veiling_rgb: s.water.veiling_rgb,
            },
            avg_depth_m: s.water.avg_depth_m,
            seabed_class: s.seabed_class,
            seabed_roughness_m: s.seabed_roughness_m,
            surface: s.surface.clone(),
        }
    }
}

impl From<SceneMetadata> for SceneParams {
    fn from(m: SceneMetadata) -> Self {
        SceneParams {
            camera: CameraParams {
                sensor_width_mm: m.sensor_width_mm,
                full_pixel_width: m.full_pixel_width,
                focal_mm: m.focal_mm,
                altitude_m: m.altitude_m,
                tilt_deg: m.tilt_deg,
                yaw_deg: m.yaw_deg,
                crop_px: m.crop_px,
            },
            sun: SunParams {
                elevation_deg: m.sun_elevation_deg,
                azimuth_deg: m.sun_azimuth_deg,
                angular_radius_deg: m.sun_angular_radius_deg,
                irradiance: m.sun_irradiance,
                atmosphere: m.atmosphere,
            },
            water: WaterParams {
                ior: m.water.ior,
                attenuation_rgb: m.water.attenuation_rgb,
                veiling_rgb: m.water.veiling_rgb,
                avg_depth_m: m.avg_depth_m,
            },
            surface: m.surface,
            seabed_class: m.seabed_class,
            seabed_roughness_m: m.seabed_roughness_m,
            seed: m.seed,
        }
    }
}

/// Serializes the metadata document for one scene.
pub fn metadata_json(scene: &SceneParams) -> String {
    serde_json::to_string_pretty(&SceneMetadata::from(scene)).expect("metadata is always serializable")
}

/// Parses a metadata document. The recorded `gsd_m` must agree with the
/// camera fields.
pub fn parse_metadata_json(text: &str) -> Result<SceneParams> {
    let meta: SceneMetadata = serde_json::from_str(text)?;
    let recorded = meta.gsd_m;
    let scene = SceneParams::from(meta);
    let derived = scene.camera.gsd_m();
    if (recorded - derived).abs() > 1e-12 * derived.abs().max(1e-300) {
        return Err(Error::InvalidArgument(format!(
            "metadata gsd_m {recorded} disagrees with camera fields ({derived})"
        )));
    }
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gsd_analytic_values() {
        assert!((compute_gsd(30.0, 20.0, 36.0, 4000) - 0.0135).abs() < 1e-12);
        assert!((compute_gsd(200.0, 24.0, 36.0, 5472) - 0.054_824_561_403_508_77).abs() < 1e-12);
        assert!((compute_gsd(200.0, 20.0, 36.0, 5472) - 0.065_789_473_684_210_53).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_scene() {
        let cfg = GeneratorConfig::default();
        assert_eq!(sample_scene(42, &cfg).unwrap(), sample_scene(42, &cfg).unwrap());
        assert_ne!(sample_scene(42, &cfg).unwrap(), sample_scene(43, &cfg).unwrap());
    }

    #[test]
    fn out_of_range_config_rejected_without_override() {
        let cfg = GeneratorConfig {
            altitude_m: [20.0, 200.0],
            ..GeneratorConfig::default()
        };
        assert!(matches!(sample_scene(1, &cfg), Err(Error::Config(_))));
        let cfg = GeneratorConfig {
            allow_out_of_range: true,
            gsd_m: [0.001, 1.0],
            ..cfg
        };
        let scene = sample_scene(1, &cfg).unwrap();
        assert!(scene.camera.altitude_m >= 20.0);

        let cfg = GeneratorConfig {
            focal_lengths_mm: vec![35.0],
            ..GeneratorConfig::default()
        };
        assert!(sample_scene(1, &cfg).is_err());
    }

    #[test]
    fn unreachable_gsd_range_reports_error() {
        let cfg = GeneratorConfig {
            gsd_m: [0.0625, 0.063],
            altitude_m: [30.0, 31.0],
            ..GeneratorConfig::default()
        };
        assert!(sample_scene(5, &cfg).is_err());
    }

    #[test]
    fn metadata_has_required_keys() {
        let scene = sample_scene(7, &GeneratorConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&metadata_json(&scene)).unwrap();
        for key in [
            "seed",
            "sensor_width_mm",
            "full_pixel_width",
            "focal_mm",
            "altitude_m",
            "gsd_m",
            "tilt_deg",
            "yaw_deg",
            "sun_elevation_deg",
            "sun_azimuth_deg",
            "atmosphere",
            "water",
            "avg_depth_m",
            "seabed_class",
            "surface",
        ] {
            assert!(v.get(key).is_some(), "missing key {key}");
        }
        assert_eq!(v["gsd_m"].as_f64().unwrap(), scene.camera.gsd_m());
    }

    #[test]
    fn tampered_gsd_rejected() {
        let scene = sample_scene(9, &GeneratorConfig::default()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&metadata_json(&scene)).unwrap();
        v["gsd_m"] = serde_json::json!(0.5);
        assert!(parse_metadata_json(&v.to_string()).is_err());
    }
}
