//! Pinhole camera over the central crop of a full-frame sensor.

use crate::geometry::{Ray, Vec3};
use crate::params::CameraParams;

/// Precomputed camera frame.
///
/// At zero tilt and yaw the camera looks straight down (−z), image right is
/// +x and image up is +y. Tilt pitches the optical axis towards image up;
/// yaw then rotates the whole frame counter-clockwise about +z.
#[derive(Debug, Clone)]
pub struct Camera {
    pub origin: Vec3,
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    pub pitch_mm: f64,
    pub focal_mm: f64,
    pub crop_px: u32,
}

impl Camera {
    pub fn new(params: &CameraParams) -> Self {
        let (st, ct) = params.tilt_deg.to_radians().sin_cos();
        let (sy, cy) = params.yaw_deg.to_radians().sin_cos();
        let rot = |v: Vec3| Vec3::new(cy * v.x - sy * v.y, sy * v.x + cy * v.y, v.z);
        Self {
            origin: Vec3::new(0.0, 0.0, params.altitude_m),
            right: rot(Vec3::new(1.0, 0.0, 0.0)),
            up: rot(Vec3::new(0.0, ct, st)),
            forward: rot(Vec3::new(0.0, st, -ct)),
            pitch_mm: params.pixel_pitch_mm(),
            focal_mm: params.focal_mm,
            crop_px: params.crop_px,
        }
    }

    /// Continuous image coordinate of the crop centre (pixel `i` is centred at `i`).
    pub fn center(&self) -> f64 {
        (self.crop_px as f64 - 1.0) / 2.0
    }

    /// Ray through continuous image position `(u, v)`; `v` grows downwards.
    pub fn ray(&self, u: f64, v: f64) -> Ray {
        let c = self.center();
        let x = (u - c) * self.pitch_mm;
        let y = (v - c) * self.pitch_mm;
        let d = self.right * x - self.up * y + self.forward * self.focal_mm;
        Ray::new(self.origin, d)
    }

    /// Inverse of [`Camera::ray`]: image position of a world direction, if it
    /// lies in front of the camera.
    pub fn project_direction(&self, d: Vec3) -> Option<(f64, f64)> {
        let f = d.dot(self.forward);
        if f <= 0.0 {
            return None;
        }
        let s = self.focal_mm / f;
        let x = d.dot(self.right) * s;
        let y = -d.dot(self.up) * s;
        Some((x / self.pitch_mm + self.center(), y / self.pitch_mm + self.center()))
    }
}

/// Ray through pixel `(px, py)` of the crop, offset by `jitter` pixels.
pub fn pixel_ray(camera: &CameraParams, px: f64, py: f64, jitter: (f64, f64)) -> Ray {
    Camera::new(camera).ray(px + jitter.0, py + jitter.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tilt: f64, yaw: f64) -> CameraParams {
        CameraParams {
            sensor_width_mm: 36.0,
            full_pixel_width: 4000,
            focal_mm: 20.0,
            altitude_m: 100.0,
            tilt_deg: tilt,
            yaw_deg: yaw,
            crop_px: 512,
        }
    }

    #[test]
    fn center_pixel_is_optical_axis() {
        let r = pixel_ray(&params(0.0, 37.0), 255.5, 255.5, (0.0, 0.0));
        assert!((r.direction - Vec3::new(0.0, 0.0, -1.0)).length() < 1e-9);
    }

    #[test]
    fn tilt_offsets_ground_intersection() {
        let p = params(5.0, 0.0);
        let r = pixel_ray(&p, 255.5, 255.5, (0.0, 0.0));
        let t = -r.origin.z / r.direction.z;
        let hit = r.at(t);
        let offset = (hit.x * hit.x + hit.y * hit.y).sqrt();
        let expected = 100.0 * 5f64.to_radians().tan();
        assert!(((offset - expected) / expected).abs() < 1e-6);
    }

    #[test]
    fn projection_inverts_ray() {
        let cam = Camera::new(&params(4.0, 123.0));
        for (u, v) in [(0.0, 0.0), (511.0, 13.5), (300.25, 499.75)] {
            let r = cam.ray(u, v);
            let (pu, pv) = cam.project_direction(r.direction).unwrap();
            assert!((pu - u).abs() < 1e-9 && (pv - v).abs() < 1e-9);
        }
    }
}
