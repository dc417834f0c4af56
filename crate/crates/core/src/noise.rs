//! Seeded 2-D gradient noise and fractional Brownian motion.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rng::hash_words;

const TABLE: usize = 256;
/// Largest magnitude of 2-D gradient noise with unit gradients.
const PEAK: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Classic lattice gradient noise with a quintic fade, scaled to `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GradientNoise {
    perm: [u8; TABLE * 2],
    grads: [[f64; 2]; TABLE],
}

impl GradientNoise {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Vec<u8> = (0..=255u8).collect();
        p.shuffle(&mut rng);
        let mut perm = [0u8; TABLE * 2];
        for i in 0..TABLE * 2 {
            perm[i] = p[i % TABLE];
        }
        let mut grads = [[0.0; 2]; TABLE];
        for g in grads.iter_mut() {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            *g = [a.cos(), a.sin()];
        }
        Self { perm, grads }
    }

    #[inline]
    fn grad(&self, ix: i64, iy: i64, dx: f64, dy: f64) -> f64 {
        let xi = (ix & 255) as usize;
        let yi = (iy & 255) as usize;
        let g = self.grads[self.perm[self.perm[xi] as usize + yi] as usize];
        g[0] * dx + g[1] * dy
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let (fx, fy) = (x - x0, y - y0);
        let (ix, iy) = (x0 as i64, y0 as i64);
        let n00 = self.grad(ix, iy, fx, fy);
        let n10 = self.grad(ix + 1, iy, fx - 1.0, fy);
        let n01 = self.grad(ix, iy + 1, fx, fy - 1.0);
        let n11 = self.grad(ix + 1, iy + 1, fx - 1.0, fy - 1.0);
        let (u, v) = (fade(fx), fade(fy));
        let nx0 = n00 + u * (n10 - n00);
        let nx1 = n01 + u * (n11 - n01);
        ((nx0 + v * (nx1 - nx0)) / PEAK).clamp(-1.0, 1.0)
    }
}

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Fractional Brownian motion over [`GradientNoise`], normalized to `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Fbm {
    noise: GradientNoise,
    pub octaves: u32,
    pub lacunarity: f64,
    pub gain: f64,
    /// Frequency of the first octave, cycles per meter.
    pub base_frequency: f64,
}

impl Fbm {
    pub fn new(seed: u64, octaves: u32, base_frequency: f64) -> Self {
        Self {
            noise: GradientNoise::new(seed),
            octaves,
            lacunarity: 2.0,
            gain: 0.5,
            base_frequency,
        }
    }

    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let mut freq = self.base_frequency;
        let mut amp = 1.0;
        let mut sum = 0.0;
        let mut norm = 0.0;
        for octave in 0..self.octaves {
            // per-octave offset breaks lattice alignment between octaves
            let off = octave as f64 * 17.31;
            sum += amp * self.noise.sample(x * freq + off, y * freq - off);
            norm += amp;
            freq *= self.lacunarity;
            amp *= self.gain;
        }
        if norm > 0.0 {
            sum / norm
        } else {
            0.0
        }
    }
}

/// Uniform `[0, 1)` value attached to an integer lattice cell.
#[inline]
pub fn cell_value(seed: u64, ix: i64, iy: i64) -> f64 {
    crate::rng::unit_f64(hash_words(&[seed, ix as u64, iy as u64]))
}
