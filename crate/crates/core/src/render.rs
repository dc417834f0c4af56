//! Per-pixel ray tracing through the air–water interface and paired
//! clean/distorted rendering.
//!
//! Both images of a pair share the camera, seabed, sun and sample positions.
//! The clean image sees a flat interface with no glint and no veiling light;
//! refraction and water-column attenuation are present in both.

use image::{DynamicImage, ImageBuffer, Rgb};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::geometry::{Ray, Vec3};
use crate::optics::{
    attenuate, composite_veiling, fresnel_unpolarized, refract, sky_irradiance, sky_reflection_radiance,
    sun_color, sun_direction, sun_glint_radiance, Spectrum3,
};
use crate::params::SceneParams;
use crate::rng::PixelSampler;
use crate::seabed::{generate_seabed_with_style, SeabedPatch, SeabedStyle};
use crate::waves::{make_surface, normal_from_gradient, WaterSurface};

/// Clean-image median luminance after exposure.
pub const EXPOSURE_TARGET: f64 = 0.45;
/// Transmittance of diffuse sky light through a flat interface.
const DIFFUSE_TRANSMITTANCE: f64 = 0.93;
/// Mean path-length factor of diffuse light relative to the vertical depth.
const DIFFUSE_PATH_FACTOR: f64 = 1.2;
/// Bracketing tolerance of the wavy-surface intersection, meters.
const SURFACE_TOLERANCE_M: f64 = 1e-6;
const SEABED_BISECTIONS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ToneMap {
    #[default]
    LinearClamp,
    Reinhard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    pub samples_per_pixel: u32,
    /// Coarse march steps through the wave slab before root refinement.
    pub max_displacement_iterations: u32,
    pub tone_map: ToneMap,
    pub output_bit_depth: u8,
    /// Sun glint in the distorted image.
    pub glint: bool,
    /// Veiling light in the distorted image.
    pub veiling: bool,
    /// Width of the soft edge of the glint lobe beyond the solar disk.
    pub glint_feather_deg: f64,
    pub seabed_style: SeabedStyle,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            samples_per_pixel: 4,
            max_displacement_iterations: 8,
            tone_map: ToneMap::LinearClamp,
            output_bit_depth: 8,
            glint: true,
            veiling: true,
            glint_feather_deg: 1.0,
            seabed_style: SeabedStyle::default(),
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_pixel == 0 {
            return Err(Error::Config("samples_per_pixel must be at least 1".into()));
        }
        if self.max_displacement_iterations == 0 {
            return Err(Error::Config("max_displacement_iterations must be at least 1".into()));
        }
        if !matches!(self.output_bit_depth, 8 | 16) {
            return Err(Error::Config(format!(
                "output bit depth {} must be 8 or 16",
                self.output_bit_depth
            )));
        }
        if !(self.glint_feather_deg >= 0.0) {
            return Err(Error::Config("glint_feather_deg must be >= 0".into()));
        }
        self.seabed_style.validate()
    }
}

/// A seabed patch positioned in world space.
#[derive(Debug, Clone)]
pub struct PlacedSeabed {
    pub patch: SeabedPatch,
    /// World coordinates of the patch's local origin.
    pub origin_m: [f64; 2],
    /// Mean seabed elevation (negative).
    pub avg_depth_m: f64,
    relief_m: f64,
}

impl PlacedSeabed {
    pub fn new(patch: SeabedPatch, origin_m: [f64; 2], avg_depth_m: f64) -> Self {
        let relief_m = patch.max_abs_height();
        Self {
            patch,
            origin_m,
            avg_depth_m,
            relief_m,
        }
    }

    /// Largest absolute height of the patch.
    pub fn relief_m(&self) -> f64 {
        self.relief_m
    }

    fn local(&self, p: Vec3) -> (f64, f64) {
        (p.x - self.origin_m[0], p.y - self.origin_m[1])
    }
}

/// Linear RGB radiance image.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<[f32; 3]>,
}

impl RadianceImage {
    pub fn get(&self, x: u32, y: u32) -> [f32; 3] {
        self.data[(y * self.width + x) as usize]
    }

    pub fn mean_luminance(&self) -> f64 {
        self.data.iter().map(luma).sum::<f64>() / self.data.len().max(1) as f64
    }
}

fn luma(p: &[f32; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// The dataset unit: a clean/distorted pair and the scene that produced it.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub id: String,
    pub clean: DynamicImage,
    pub distorted: DynamicImage,
    pub metadata: SceneParams,
    /// Scale applied to both radiance images before tone mapping.
    pub exposure: f64,
}

/// First crossing of `ray` with the interface, with the upward normal there.
pub fn intersect_surface(ray: &Ray, surface: &WaterSurface, march_steps: u32) -> Option<(Vec3, Vec3)> {
    let d = ray.direction;
    if d.z >= 0.0 {
        return None;
    }
    let o = ray.origin;
    let level = surface.mean_level_m;
    if surface.is_flat() {
        let t = (o.z - level) / -d.z;
        return (t >= 0.0).then(|| (ray.at(t), Vec3::UP));
    }

    let bound = surface.amplitude_bound();
    let t_top = ((o.z - (level + bound)) / -d.z).max(0.0);
    let t_bot = (o.z - (level - bound)) / -d.z;
    let f = |t: f64| {
        let p = ray.at(t);
        p.z - surface.height(p.x, p.y)
    };

    // coarse march for the first sign change
    let steps = march_steps.max(1);
    let dt = (t_bot - t_top) / steps as f64;
    let mut lo = t_top;
    if f(lo) <= 0.0 {
        return Some(surface_hit(ray, surface, lo));
    }
    let mut hi = t_bot;
    for k in 1..=steps {
        let t = if k == steps { t_bot } else { t_top + dt * k as f64 };
        let ft = f(t);
        if ft <= 0.0 {
            hi = t;
            break;
        }
        lo = t;
    }

    // safeguarded Newton inside the bracket
    let tol_t = SURFACE_TOLERANCE_M / -d.z;
    let mut t = lo;
    for _ in 0..64 {
        let p = ray.at(t);
        let (h, hx, hy) = surface.height_and_gradient(p.x, p.y);
        let ft = p.z - h;
        if ft == 0.0 {
            break;
        }
        if ft > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let dft = d.z - (hx * d.x + hy * d.y);
        let newton = t - ft / dft;
        if dft < 0.0 && newton > lo && newton < hi {
            let converged = (newton - t).abs() < 1e-3 * tol_t;
            t = newton;
            if converged {
                break;
            }
        } else {
            t = 0.5 * (lo + hi);
        }
        if hi - lo < tol_t {
            break;
        }
    }
    Some(surface_hit(ray, surface, t))
}

fn surface_hit(ray: &Ray, surface: &WaterSurface, t: f64) -> (Vec3, Vec3) {
    let p = ray.at(t);
    let (_, hx, hy) = surface.height_and_gradient(p.x, p.y);
    (p, normal_from_gradient(hx, hy))
}

/// First hit of an in-water ray with the seabed heightfield, or `None` when
/// the ray leaves the patch.
pub fn intersect_seabed(start: Vec3, dir: Vec3, seabed: &PlacedSeabed) -> Option<Vec3> {
    if dir.z >= 0.0 {
        return None;
    }
    let patch = &seabed.patch;
    let relief = seabed.relief_m;
    let top = seabed.avg_depth_m + relief;
    let bot = seabed.avg_depth_m - relief;
    let s0 = ((start.z - top) / -dir.z).max(0.0);
    let s1 = ((start.z - bot) / -dir.z).max(s0);
    let g = |s: f64| {
        let p = start + dir * s;
        let (lx, ly) = seabed.local(p);
        p.z - (seabed.avg_depth_m + patch.sample_height(lx, ly))
    };

    let horizontal = (dir.x * dir.x + dir.y * dir.y).sqrt();
    let step = if horizontal > 1e-12 {
        (0.5 * patch.cell_size() / horizontal).min((s1 - s0).max(f64::MIN_POSITIVE))
    } else {
        (s1 - s0).max(f64::MIN_POSITIVE)
    };

    let mut prev = s0;
    let hit_s = if g(s0) <= 0.0 {
        s0
    } else {
        let mut found = None;
        let mut s = s0;
        while s < s1 {
            s = (s + step).min(s1);
            if g(s) <= 0.0 {
                found = Some(s);
                break;
            }
            prev = s;
        }
        // floating-point slack at the slab bottom
        let cur = found.unwrap_or(s1);
        let (mut lo, mut hi) = (prev, cur);
        if found.is_some() {
            for _ in 0..SEABED_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        hi
    };

    let hit = start + dir * hit_s;
    let (lx, ly) = seabed.local(hit);
    patch.contains(lx, ly).then_some(hit)
}

/// Per-scene tracing context: seabed placement, illumination and both surfaces.
#[derive(Debug, Clone)]
pub struct SceneRenderer {
    pub scene: SceneParams,
    pub options: RenderOptions,
    pub camera: Camera,
    pub seabed: PlacedSeabed,
    pub clean_surface: WaterSurface,
    pub wavy_surface: WaterSurface,
    sun_dir_water: Vec3,
    sun_transmittance: f64,
}

impl SceneRenderer {
    /// Builds the context, generating a seabed patch that covers the view.
    pub fn new(scene: &SceneParams, options: &RenderOptions) -> Result<Self> {
        options.validate()?;
        let camera = Camera::new(&scene.camera);
        let (origin_m, extent_m) = seabed_footprint(&camera, scene);
        let gsd = scene.camera.gsd_m();
        let resolution = ((extent_m / (0.75 * gsd)).ceil() as usize + 1).clamp(64, 2048);
        let patch = generate_seabed_with_style(
            scene.seabed_class,
            scene.seabed_seed(),
            extent_m,
            resolution,
            scene.seabed_roughness_m,
            &options.seabed_style,
        )?;
        let seabed = PlacedSeabed::new(patch, origin_m, scene.water.avg_depth_m);
        Self::with_seabed(scene, options, seabed)
    }

    /// Builds the context around an explicit seabed.
    pub fn with_seabed(scene: &SceneParams, options: &RenderOptions, seabed: PlacedSeabed) -> Result<Self> {
        options.validate()?;
        scene.surface.validate()?;
        if !(scene.water.ior > 1.0) {
            return Err(Error::InvalidArgument("water ior must exceed 1".into()));
        }
        let sun = sun_direction(&scene.sun);
        let sun_cos = sun.z.clamp(0.0, 1.0);
        let sun_dir_water = refract(-sun, Vec3::UP, 1.0, scene.water.ior).unwrap_or(-Vec3::UP);
        Ok(Self {
            scene: scene.clone(),
            options: options.clone(),
            camera: Camera::new(&scene.camera),
            seabed,
            clean_surface: WaterSurface::flat(0.0),
            wavy_surface: make_surface(&scene.surface),
            sun_dir_water,
            sun_transmittance: 1.0 - fresnel_unpolarized(sun_cos, 1.0, scene.water.ior),
        })
    }

    fn surface(&self, distorted: bool) -> &WaterSurface {
        if distorted {
            &self.wavy_surface
        } else {
            &self.clean_surface
        }
    }

    /// Radiance leaving the seabed point `hit` towards the water column.
    fn shade_bottom(&self, hit: Vec3) -> Spectrum3 {
        let scene = &self.scene;
        let c = Spectrum3(scene.water.attenuation_rgb);
        let (lx, ly) = self.seabed.local(hit);
        let albedo = Spectrum3(self.seabed.patch.sample_albedo(lx, ly));
        let (_, hx, hy) = self.seabed.patch.sample_height_gradient(lx, ly);
        let n = normal_from_gradient(hx, hy);
        let depth = (-hit.z).max(0.0);

        let to_sun = -self.sun_dir_water;
        let cos_b = n.dot(to_sun).max(0.0);
        let down_path = depth / (-self.sun_dir_water.z).max(1e-6);
        let direct = attenuate(
            sun_color(&scene.sun.atmosphere) * (scene.sun.irradiance * self.sun_transmittance * cos_b),
            down_path,
            c,
        );
        let ambient = attenuate(
            sky_irradiance(&scene.sun.atmosphere) * (scene.sun.irradiance * DIFFUSE_TRANSMITTANCE),
            depth * DIFFUSE_PATH_FACTOR,
            c,
        );
        albedo * (direct + ambient) * std::f64::consts::FRAC_1_PI
    }

    fn veil(&self) -> Spectrum3 {
        Spectrum3(self.scene.water.veiling_rgb) * self.scene.sun.irradiance
    }

    /// Radiance arriving at the camera along `ray`.
    pub fn trace(&self, ray: &Ray, distorted: bool) -> Spectrum3 {
        let scene = &self.scene;
        let ior = scene.water.ior;
        let surface = self.surface(distorted);
        let Some((p, mut n)) = intersect_surface(ray, surface, self.options.max_displacement_iterations) else {
            return Spectrum3::ZERO;
        };
        if ray.direction.dot(n) >= 0.0 {
            n = Vec3::UP;
        }
        let d = ray.direction;
        let cos_i = (-d.dot(n)).clamp(0.0, 1.0);
        let transmit = 1.0 - fresnel_unpolarized(cos_i, 1.0, ior);

        let mut radiance = sky_reflection_radiance(d, n, &scene.sun, ior);
        if distorted && self.options.glint {
            radiance = radiance + sun_glint_radiance(d, n, &scene.sun, ior, self.options.glint_feather_deg);
        }

        let veiling = distorted && self.options.veiling;
        let c = Spectrum3(scene.water.attenuation_rgb);
        let water_leaving = match refract(d, n, 1.0, ior) {
            Ok(t) if t.z < 0.0 => match intersect_seabed(p, t, &self.seabed) {
                Some(hit) => {
                    let path = (hit - p).length();
                    let bottom = self.shade_bottom(hit);
                    if veiling {
                        composite_veiling(bottom, path, c, self.veil())
                    } else {
                        attenuate(bottom, path, c)
                    }
                }
                None => self.veil(),
            },
            _ => self.veil(),
        };
        radiance + water_leaving * transmit
    }

    /// Renders the radiance of both images with identical sample positions.
    pub fn render_radiance_pair(&self) -> (RadianceImage, RadianceImage) {
        let size = self.scene.camera.crop_px;
        let spp = self.options.samples_per_pixel;
        let strata = (spp as f64).sqrt().ceil() as u32;
        let seed = self.scene.seed;
        type Row = Vec<[f32; 3]>;
        let rows: Vec<(Row, Row)> = (0..size)
            .into_par_iter()
            .map(|y| {
                let mut clean_row = Vec::with_capacity(size as usize);
                let mut dist_row = Vec::with_capacity(size as usize);
                for x in 0..size {
                    let mut clean = Spectrum3::ZERO;
                    let mut dist = Spectrum3::ZERO;
                    for s in 0..spp {
                        let sampler = PixelSampler::new(seed, x, y, s);
                        let jx = ((s % strata) as f64 + sampler.uniform(0)) / strata as f64 - 0.5;
                        let jy = (((s / strata) % strata) as f64 + sampler.uniform(1)) / strata as f64 - 0.5;
                        let ray = self.camera.ray(x as f64 + jx, y as f64 + jy);
                        clean = clean + self.trace(&ray, false);
                        dist = dist + self.trace(&ray, true);
                    }
                    let inv = 1.0 / spp as f64;
                    clean_row.push(clean.0.map(|c| (c * inv) as f32));
                    dist_row.push(dist.0.map(|c| (c * inv) as f32));
                }
                (clean_row, dist_row)
            })
            .collect();
        let mut clean = Vec::with_capacity((size * size) as usize);
        let mut dist = Vec::with_capacity((size * size) as usize);
        for (c, d) in rows {
            clean.extend(c);
            dist.extend(d);
        }
        (
            RadianceImage {
                width: size,
                height: size,
                data: clean,
            },
            RadianceImage {
                width: size,
                height: size,
                data: dist,
            },
        )
    }
}

/// World origin and side length of a square seabed patch covering the
/// view, with margin for refraction and wave-induced ray bending.
fn seabed_footprint(camera: &Camera, scene: &SceneParams) -> ([f64; 2], f64) {
    let depth = -scene.water.avg_depth_m;
    let last = camera.crop_px as f64 - 1.0;
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for (u, v) in [(-0.5, -0.5), (last + 0.5, -0.5), (-0.5, last + 0.5), (last + 0.5, last + 0.5)] {
        let r = camera.ray(u, v);
        // straight line to the mean seabed plane bounds the refracted hit
        let t = (r.origin.z + depth) / -r.direction.z;
        let p = r.at(t);
        min = [min[0].min(p.x), min[1].min(p.y)];
        max = [max[0].max(p.x), max[1].max(p.y)];
    }
    let span = (max[0] - min[0]).max(max[1] - min[1]);
    let margin = 0.1 * span + 0.15 * depth + 1.0;
    let extent = span + 2.0 * margin;
    let center = [0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1])];
    ([center[0] - 0.5 * extent, center[1] - 0.5 * extent], extent)
}

/// Scale that maps the median clean luminance onto [`EXPOSURE_TARGET`].
pub fn exposure_for(clean: &RadianceImage, tone_map: ToneMap) -> f64 {
    let mut lum: Vec<f64> = clean.data.iter().map(luma).collect();
    if lum.is_empty() {
        return 1.0;
    }
    let mid = lum.len() / 2;
    let (_, median, _) = lum.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if !(median > 0.0) {
        return 1.0;
    }
    match tone_map {
        ToneMap::LinearClamp => EXPOSURE_TARGET / median,
        ToneMap::Reinhard => EXPOSURE_TARGET / (1.0 - EXPOSURE_TARGET) / median,
    }
}

/// Applies exposure and tone mapping and quantizes to 8 or 16 bits.
pub fn tone_map_image(img: &RadianceImage, exposure: f64, tone_map: ToneMap, bit_depth: u8) -> DynamicImage {
    let map = |c: f32| -> f64 {
        let x = c as f64 * exposure;
        let y = match tone_map {
            ToneMap::LinearClamp => x,
            ToneMap::Reinhard => x / (1.0 + x),
        };
        y.clamp(0.0, 1.0)
    };
    let (w, h) = (img.width, img.height);
    if bit_depth == 16 {
        let buf: Vec<u16> = img
            .data
            .iter()
            .flat_map(|p| p.map(|c| (map(c) * 65535.0).round() as u16))
            .collect();
        DynamicImage::ImageRgb16(ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, buf).expect("buffer size"))
    } else {
        let buf: Vec<u8> = img
            .data
            .iter()
            .flat_map(|p| p.map(|c| (map(c) * 255.0).round() as u8))
            .collect();
        DynamicImage::ImageRgb8(ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, buf).expect("buffer size"))
    }
}

/// Renders the clean/distorted pair for one scene.
pub fn render_pair(scene: &SceneParams, opts: &RenderOptions) -> Result<ImagePair> {
    render_pair_with_id(scene, opts, &format!("{:016x}", scene.seed))
}

pub fn render_pair_with_id(scene: &SceneParams, opts: &RenderOptions, id: &str) -> Result<ImagePair> {
    let renderer = SceneRenderer::new(scene, opts)?;
    let (clean, distorted) = renderer.render_radiance_pair();
    let exposure = exposure_for(&clean, opts.tone_map);
    Ok(ImagePair {
        id: id.to_string(),
        clean: tone_map_image(&clean, exposure, opts.tone_map, opts.output_bit_depth),
        distorted: tone_map_image(&distorted, exposure, opts.tone_map, opts.output_bit_depth),
        metadata: scene.clone(),
        exposure,
    })
}

/// Traces one ray against an explicit surface and seabed.
pub fn trace_through_water(
    ray: &Ray,
    surface: &WaterSurface,
    seabed: &PlacedSeabed,
    scene: &SceneParams,
    distorted: bool,
    opts: &RenderOptions,
) -> Result<Spectrum3> {
    let mut renderer = SceneRenderer::with_seabed(scene, opts, seabed.clone())?;
    if distorted {
        renderer.wavy_surface = surface.clone();
    } else {
        renderer.clean_surface = surface.clone();
    }
    Ok(renderer.trace(ray, distorted))
}
