//! Interface and water-column light transport: Snell refraction, unpolarized
//! Fresnel reflectance, Beer–Lambert attenuation, veiling-light compositing
//! and the sun-glint lobe.

use std::ops::{Add, Mul};

use crate::geometry::Vec3;
use crate::params::{Atmosphere, SunParams};

/// Non-negative RGB radiance or a per-channel coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spectrum3(pub [f64; 3]);

impl Spectrum3 {
    pub const ZERO: Spectrum3 = Spectrum3([0.0; 3]);

    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Spectrum3([r, g, b])
    }

    pub const fn splat(v: f64) -> Self {
        Spectrum3([v; 3])
    }

    pub fn r(&self) -> f64 {
        self.0[0]
    }
    pub fn g(&self) -> f64 {
        self.0[1]
    }
    pub fn b(&self) -> f64 {
        self.0[2]
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Spectrum3(self.0.map(f))
    }

    /// ITU-R BT.601 luma weights.
    pub fn luminance(&self) -> f64 {
        0.299 * self.0[0] + 0.587 * self.0[1] + 0.114 * self.0[2]
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|c| c.is_finite() && *c >= 0.0)
    }
}

impl Add for Spectrum3 {
    type Output = Spectrum3;
    fn add(self, o: Spectrum3) -> Spectrum3 {
        Spectrum3(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl Mul for Spectrum3 {
    type Output = Spectrum3;
    fn mul(self, o: Spectrum3) -> Spectrum3 {
        Spectrum3(std::array::from_fn(|k| self.0[k] * o.0[k]))
    }
}

impl Mul<f64> for Spectrum3 {
    type Output = Spectrum3;
    fn mul(self, s: f64) -> Spectrum3 {
        self.map(|c| c * s)
    }
}

impl From<[f64; 3]> for Spectrum3 {
    fn from(v: [f64; 3]) -> Self {
        Spectrum3(v)
    }
}

/// Refraction beyond the critical angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalInternalReflection;

impl std::fmt::Display for TotalInternalReflection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("total internal reflection")
    }
}

impl std::error::Error for TotalInternalReflection {}

/// Refracts unit `dir` through an interface with unit `normal` facing the
/// incident side (`dir · normal < 0`), from index `n1` into `n2`.
pub fn refract(dir: Vec3, normal: Vec3, n1: f64, n2: f64) -> Result<Vec3, TotalInternalReflection> {
    let eta = n1 / n2;
    let cos_i = -dir.dot(normal);
    let sin2_t = eta * eta * (1.0 - cos_i * cos_i).max(0.0);
    if sin2_t > 1.0 {
        return Err(TotalInternalReflection);
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let t = dir * eta + normal * (eta * cos_i - cos_t);
    Ok(t.normalize())
}

/// Average of the s- and p-polarized Fresnel reflectances.
///
/// Returns 1 beyond the critical angle when `n1 > n2`.
pub fn fresnel_unpolarized(cos_theta_i: f64, n1: f64, n2: f64) -> f64 {
    let cos_i = cos_theta_i.clamp(0.0, 1.0);
    let sin2_t = (n1 / n2).powi(2) * (1.0 - cos_i * cos_i);
    if sin2_t >= 1.0 {
        return 1.0;
    }
    let cos_t = (1.0 - sin2_t).sqrt();
    let rs = (n1 * cos_i - n2 * cos_t) / (n1 * cos_i + n2 * cos_t);
    let rp = (n1 * cos_t - n2 * cos_i) / (n1 * cos_t + n2 * cos_i);
    (0.5 * (rs * rs + rp * rp)).clamp(0.0, 1.0)
}

/// Beer–Lambert: `Lₖ · exp(−cₖ · path)`.
pub fn attenuate(radiance: Spectrum3, path_m: f64, c: Spectrum3) -> Spectrum3 {
    Spectrum3(std::array::from_fn(|k| radiance.0[k] * (-c.0[k] * path_m).exp()))
}

/// Single-scattering image formation:
/// `bottomₖ · tₖ + veilₖ · (1 − tₖ)` with `tₖ = exp(−cₖ · path)`.
pub fn composite_veiling(bottom: Spectrum3, path_m: f64, c: Spectrum3, veil: Spectrum3) -> Spectrum3 {
    Spectrum3(std::array::from_fn(|k| {
        let t = (-c.0[k] * path_m).exp();
        let (b, v) = (bottom.0[k], veil.0[k]);
        (b * t + v * (1.0 - t)).clamp(b.min(v), b.max(v))
    }))
}

/// Unit vector pointing at the sun. Azimuth is clockwise from +y (north).
pub fn sun_direction(sun: &SunParams) -> Vec3 {
    let e = sun.elevation_deg.to_radians();
    let a = sun.azimuth_deg.to_radians();
    Vec3::new(a.sin() * e.cos(), a.cos() * e.cos(), e.sin())
}

/// Colour of the direct beam (red channel normalized to 1).
pub fn sun_color(atm: &Atmosphere) -> Spectrum3 {
    Spectrum3::new(
        1.0,
        (1.0 - 0.06 * atm.dust - 0.02 * atm.air).max(0.0),
        (1.0 - 0.18 * atm.dust - 0.05 * atm.air).max(0.0),
    )
}

/// Diffuse sky irradiance on a horizontal plane, per unit sun irradiance.
pub fn sky_irradiance(atm: &Atmosphere) -> Spectrum3 {
    let blue = [0.55, 0.70, 1.0];
    let haze = [0.85, 0.82, 0.78];
    let d = atm.dust.clamp(0.0, 1.0);
    let level = 0.12 + 0.08 * atm.air + 0.10 * atm.dust;
    Spectrum3(std::array::from_fn(|k| level * (blue[k] + d * (haze[k] - blue[k]))))
}

/// Constant sky radiance seen in reflection off the surface.
pub fn sky_radiance(sun: &SunParams) -> Spectrum3 {
    sky_irradiance(&sun.atmosphere) * (sun.irradiance / std::f64::consts::PI)
}

/// Fresnel-weighted sky reflection for a view ray hitting the surface.
pub fn sky_reflection_radiance(view_dir: Vec3, normal: Vec3, sun: &SunParams, water_ior: f64) -> Spectrum3 {
    let cos_i = (-view_dir.dot(normal)).clamp(0.0, 1.0);
    sky_radiance(sun) * fresnel_unpolarized(cos_i, 1.0, water_ior)
}

/// Angular weight of the glint lobe: 1 inside the solar disk, a cosine
/// feather out to `radius + feather`, and exactly 0 beyond.
pub fn glint_falloff(misalignment_deg: f64, radius_deg: f64, feather_deg: f64) -> f64 {
    if misalignment_deg <= radius_deg {
        1.0
    } else if feather_deg <= 0.0 || misalignment_deg >= radius_deg + feather_deg {
        0.0
    } else {
        let t = (misalignment_deg - radius_deg) / feather_deg;
        0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

/// Specular reflection of the sun off the surface into the view ray.
///
/// `view_dir` travels from the camera towards the surface. The lobe's
/// total energy is spread over the cap of half-angle `radius + feather/2`,
/// so the peak radiance is `F · E / Ω`. Sky reflection is not included;
/// see [`sky_reflection_radiance`].
pub fn sun_glint_radiance(
    view_dir: Vec3,
    surface_normal: Vec3,
    sun: &SunParams,
    water_ior: f64,
    feather_deg: f64,
) -> Spectrum3 {
    let reflected = view_dir.reflect(surface_normal);
    if reflected.z <= 0.0 {
        return Spectrum3::ZERO;
    }
    let cos_angle = reflected.dot(sun_direction(sun)).clamp(-1.0, 1.0);
    let misalignment = cos_angle.acos().to_degrees();
    let w = glint_falloff(misalignment, sun.angular_radius_deg, feather_deg);
    if w == 0.0 {
        return Spectrum3::ZERO;
    }
    let cos_i = (-view_dir.dot(surface_normal)).clamp(0.0, 1.0);
    let fresnel = fresnel_unpolarized(cos_i, 1.0, water_ior);
    let half_angle = (sun.angular_radius_deg + 0.5 * feather_deg.max(0.0)).to_radians();
    let solid_angle = std::f64::consts::TAU * (1.0 - half_angle.cos());
    sun_color(&sun.atmosphere) * (fresnel * sun.irradiance * w / solid_angle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sun() -> SunParams {
        SunParams {
            elevation_deg: 50.0,
            azimuth_deg: 120.0,
            angular_radius_deg: 0.27,
            irradiance: 1.0,
            atmosphere: Atmosphere { air: 1.0, dust: 0.3 },
        }
    }

    #[test]
    fn normal_incidence_unchanged() {
        let d = Vec3::new(0.0, 0.0, -1.0);
        let t = refract(d, Vec3::UP, 1.0, 1.34).unwrap();
        assert!((t - d).length() < 1e-15);
    }

    #[test]
    fn snell_45_degrees() {
        let a = 45f64.to_radians();
        let d = Vec3::new(a.sin(), 0.0, -a.cos());
        let t = refract(d, Vec3::UP, 1.0, 1.34).unwrap();
        let theta_t = t.x.atan2(-t.z).to_degrees();
        let expected = (a.sin() / 1.34).asin().to_degrees();
        assert!((theta_t - expected).abs() < 1e-10);
        assert!((theta_t - 31.85).abs() < 0.01);
    }

    #[test]
    fn water_to_air_beyond_critical_angle() {
        let a = 60f64.to_radians();
        // travelling up out of the water; normal faces the water side
        let d = Vec3::new(a.sin(), 0.0, a.cos());
        assert_eq!(refract(d, -Vec3::UP, 1.34, 1.0), Err(TotalInternalReflection));
        let critical = (1.0f64 / 1.34).asin().to_degrees();
        assert!((critical - 48.27).abs() < 0.01);
        assert_eq!(fresnel_unpolarized(a.cos(), 1.34, 1.0), 1.0);
    }

    #[test]
    fn fresnel_values() {
        let r0 = fresnel_unpolarized(1.0, 1.0, 1.34);
        assert!((r0 - (0.34f64 / 2.34).powi(2)).abs() < 1e-15);
        assert!((r0 - 0.02111).abs() < 1e-5);
        assert!(fresnel_unpolarized(1e-9, 1.0, 1.34) > 0.999_999);
        assert_eq!(fresnel_unpolarized(0.0, 1.0, 1.34), 1.0);
    }

    #[test]
    fn attenuation_analytic() {
        let out = attenuate(Spectrum3::new(1.0, 1.0, 1.0), 2.0, Spectrum3::new(0.5, 0.0, 1.0));
        assert!((out.r() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((out.r() - 0.3679).abs() < 1e-4);
        assert_eq!(out.g(), 1.0);
        let l = Spectrum3::new(0.3, 0.2, 0.1);
        assert_eq!(attenuate(l, 0.0, Spectrum3::splat(0.4)), l);
    }

    #[test]
    fn veiling_limits() {
        let b = Spectrum3::new(0.5, 0.4, 0.3);
        let v = Spectrum3::new(0.01, 0.05, 0.08);
        let c = Spectrum3::new(0.45, 0.15, 0.08);
        assert_eq!(composite_veiling(b, 0.0, c, v), b);
        let deep = composite_veiling(b, 700.0, c, v);
        for k in 0..3 {
            assert!((deep.0[k] - v.0[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn glint_peaks_at_mirror_alignment_and_cuts_off() {
        let s = sun();
        let sd = sun_direction(&s);
        // view ray whose mirror image over a flat surface points at the sun
        let view = Vec3::new(sd.x, sd.y, -sd.z);
        let peak = sun_glint_radiance(view, Vec3::UP, &s, 1.34, 1.0);
        assert!(peak.r() > 0.0);
        for tilt in [0.2f64, 0.3, 0.5] {
            let t = tilt.to_radians();
            let n = Vec3::new(t.sin(), 0.0, t.cos());
            let off = sun_glint_radiance(view, n, &s, 1.34, 1.0);
            assert!(off.r() <= peak.r());
        }
        // mirror misalignment is twice the normal tilt: 2 * 0.7 > 0.27 + 1.0
        let t = 0.7f64.to_radians();
        let n = Vec3::new(t.sin(), 0.0, t.cos());
        assert_eq!(sun_glint_radiance(view, n, &s, 1.34, 1.0), Spectrum3::ZERO);
    }

    #[test]
    fn falloff_shape() {
        assert_eq!(glint_falloff(0.0, 0.27, 1.0), 1.0);
        assert_eq!(glint_falloff(0.27, 0.27, 1.0), 1.0);
        assert!((glint_falloff(0.77, 0.27, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(glint_falloff(1.27, 0.27, 1.0), 0.0);
        assert_eq!(glint_falloff(0.3, 0.27, 0.0), 0.0);
    }
}
