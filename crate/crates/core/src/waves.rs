//! Air–water interface model.
//!
//! The distorted surface is a seeded superposition of directional sinusoids,
//! `h(x, y) = Σ aᵢ sin(kᵢ·(x, y) + φᵢ)`, evaluated pointwise with analytic
//! gradients. The clean surface is the same type with no components.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Parameters from which a [`WaterSurface`] is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpectrum {
    pub n_components: u32,
    /// Per-component amplitude bounds, meters.
    pub amplitude_range_m: [f64; 2],
    /// Per-component wavelength bounds, meters.
    pub wavelength_range_m: [f64; 2],
    /// Mean propagation direction, degrees counter-clockwise from +x.
    pub direction_deg: f64,
    /// Half-width of the uniform spread around `direction_deg`.
    pub direction_spread_deg: f64,
    pub seed: u64,
}

impl Default for WaveSpectrum {
    fn default() -> Self {
        Self {
            n_components: 24,
            amplitude_range_m: [0.001, 0.008],
            wavelength_range_m: [0.4, 6.0],
            direction_deg: 0.0,
            direction_spread_deg: 60.0,
            seed: 0,
        }
    }
}

impl WaveSpectrum {
    /// A spectrum that produces a perfectly flat surface.
    pub fn flat() -> Self {
        Self {
            n_components: 0,
            amplitude_range_m: [0.0, 0.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [a0, a1] = self.amplitude_range_m;
        let [l0, l1] = self.wavelength_range_m;
        if !(a0 >= 0.0 && a1 >= a0 && a1.is_finite()) {
            return Err(Error::Config(format!(
                "wave amplitude range [{a0}, {a1}] must satisfy 0 <= min <= max"
            )));
        }
        if !(l0 > 0.0 && l1 >= l0 && l1.is_finite()) {
            return Err(Error::Config(format!(
                "wavelength range [{l0}, {l1}] must satisfy 0 < min <= max"
            )));
        }
        if !(self.direction_spread_deg >= 0.0 && self.direction_spread_deg.is_finite()) {
            return Err(Error::Config("direction spread must be >= 0".into()));
        }
        Ok(())
    }

    /// Upper bound of `Σ aᵢ` over any surface drawn from this spectrum.
    pub fn max_total_amplitude(&self) -> f64 {
        self.n_components as f64 * self.amplitude_range_m[1]
    }
}

/// One sinusoidal component of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    pub amplitude_m: f64,
    /// Wavevector in rad/m.
    pub wavevector: [f64; 2],
    pub phase: f64,
}

/// Point-evaluable height and normal field of the interface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WaterSurface {
    pub components: Vec<WaveComponent>,
    pub mean_level_m: f64,
}

impl WaterSurface {
    pub fn flat(mean_level_m: f64) -> Self {
        Self {
            components: Vec::new(),
            mean_level_m,
        }
    }

    pub fn from_components(components: Vec<WaveComponent>) -> Self {
        Self {
            components,
            mean_level_m: 0.0,
        }
    }

    /// True when every component has zero amplitude.
    pub fn is_flat(&self) -> bool {
        self.components.iter().all(|c| c.amplitude_m == 0.0)
    }

    /// `Σ |aᵢ|`: the surface stays within `mean_level_m ± bound`.
    pub fn amplitude_bound(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude_m.abs()).sum()
    }

    /// Returns a copy with every amplitude multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| WaveComponent {
                    amplitude_m: c.amplitude_m * scale,
                    ..*c
                })
                .collect(),
            mean_level_m: self.mean_level_m,
        }
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        self.mean_level_m
            + self
                .components
                .iter()
                .map(|c| c.amplitude_m * (c.wavevector[0] * x + c.wavevector[1] * y + c.phase).sin())
                .sum::<f64>()
    }

    /// Height and analytic gradient `(h, ∂h/∂x, ∂h/∂y)` in one pass.
    pub fn height_and_gradient(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let mut h = self.mean_level_m;
        let mut hx = 0.0;
        let mut hy = 0.0;
        for c in &self.components {
            let (s, co) = (c.wavevector[0] * x + c.wavevector[1] * y + c.phase).sin_cos();
            h += c.amplitude_m * s;
            let ac = c.amplitude_m * co;
            hx += ac * c.wavevector[0];
            hy += ac * c.wavevector[1];
        }
        (h, hx, hy)
    }

    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (_, hx, hy) = self.height_and_gradient(x, y);
        (hx, hy)
    }

    /// Upward unit normal `normalize(−∂h/∂x, −∂h/∂y, 1)`.
    pub fn normal(&self, x: f64, y: f64) -> Vec3 {
        let (hx, hy) = self.gradient(x, y);
        normal_from_gradient(hx, hy)
    }

    /// Root-mean-square slope magnitude, `sqrt(Σ aᵢ²|kᵢ|² / 2)`.
    ///
    /// Exact ensemble value for independent uniform phases.
    pub fn rms_slope(&self) -> f64 {
        (self
            .components
            .iter()
            .map(|c| {
                c.amplitude_m * c.amplitude_m
                    * (c.wavevector[0] * c.wavevector[0] + c.wavevector[1] * c.wavevector[1])
            })
            .sum::<f64>()
            / 2.0)
            .sqrt()
    }
}

#[inline]
pub(crate) fn normal_from_gradient(hx: f64, hy: f64) -> Vec3 {
    if hx == 0.0 && hy == 0.0 {
        return Vec3::UP;
    }
    Vec3::new(-hx, -hy, 1.0).normalize()
}

/// Draws a surface from `spectrum`; deterministic in `spectrum.seed`.
pub fn make_surface(spectrum: &WaveSpectrum) -> WaterSurface {
    let mut rng = ChaCha8Rng::seed_from_u64(spectrum.seed);
    let [a0, a1] = spectrum.amplitude_range_m;
    let [l0, l1] = spectrum.wavelength_range_m;
    let components = (0..spectrum.n_components)
        .map(|_| {
            let amplitude_m = uniform(&mut rng, a0, a1);
            // log-uniform so short and long waves are equally represented
            let wavelength = (uniform(&mut rng, l0.ln(), l1.ln())).exp();
            let spread = spectrum.direction_spread_deg;
            let dir = (spectrum.direction_deg + uniform(&mut rng, -spread, spread)).to_radians();
            let phase = uniform(&mut rng, 0.0, std::f64::consts::TAU);
            let k = std::f64::consts::TAU / wavelength;
            WaveComponent {
                amplitude_m,
                wavevector: [k * dir.cos(), k * dir.sin()],
                phase,
            }
        })
        .collect();
    WaterSurface {
        components,
        mean_level_m: 0.0,
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_amplitudes_give_flat_surface() {
        let spec = WaveSpectrum {
            amplitude_range_m: [0.0, 0.0],
            seed: 3,
            ..WaveSpectrum::default()
        };
        let s = make_surface(&spec);
        assert_eq!(s.components.len(), 24);
        for i in 0..100 {
            let (x, y) = (i as f64 * 0.37, i as f64 * -1.3);
            assert_eq!(s.height(x, y), 0.0);
            assert_eq!(s.normal(x, y), Vec3::UP);
        }
    }

    #[test]
    fn single_component_peak() {
        let s = WaterSurface::from_components(vec![WaveComponent {
            amplitude_m: 0.1,
            wavevector: [2.0 * PI / 5.0, 0.0],
            phase: 0.0,
        }]);
        for y in [-3.0, 0.0, 17.5] {
            assert!((s.height(1.25, y) - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let spec = WaveSpectrum {
            seed: 99,
            ..WaveSpectrum::default()
        };
        assert_eq!(make_surface(&spec), make_surface(&spec));
        let other = WaveSpectrum { seed: 100, ..spec };
        assert_ne!(make_surface(&other), make_surface(&WaveSpectrum { seed: 99, ..other.clone() }));
    }

    #[test]
    fn components_within_spectrum_bounds() {
        let spec = WaveSpectrum {
            seed: 5,
            ..WaveSpectrum::default()
        };
        let s = make_surface(&spec);
        for c in &s.components {
            assert!(c.amplitude_m >= spec.amplitude_range_m[0] && c.amplitude_m <= spec.amplitude_range_m[1]);
            let k = (c.wavevector[0].powi(2) + c.wavevector[1].powi(2)).sqrt();
            let wl = 2.0 * PI / k;
            assert!(wl >= spec.wavelength_range_m[0] - 1e-9 && wl <= spec.wavelength_range_m[1] + 1e-9);
        }
        assert!(s.amplitude_bound() <= spec.max_total_amplitude());
    }

    #[test]
    fn invalid_spectrum_rejected() {
        let bad = WaveSpectrum {
            wavelength_range_m: [0.0, 1.0],
            ..WaveSpectrum::default()
        };
        assert!(bad.validate().is_err());
        let bad = WaveSpectrum {
            amplitude_range_m: [0.2, 0.1],
            ..WaveSpectrum::default()
        };
        assert!(bad.validate().is_err());
    }
}
