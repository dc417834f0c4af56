#![allow(dead_code)]

use std::path::Path;

use sea_undistort::metrics::Plane;
use sha2::{Digest, Sha256};

/// Gaussian blur with a kernel truncated at 4σ and mirrored borders.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Plane {
    let r = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    let (w, h) = (p.width as isize, p.height as isize);
    let mirror = |i: isize, n: isize| -> usize {
        let mut i = i;
        while i < 0 || i >= n {
            i = if i < 0 { -i - 1 } else { 2 * n - i - 1 };
        }
        i as usize
    };
    let mut tmp = vec![0.0; p.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * p.data[y as usize * p.width + mirror(x + j as isize - r, w)];
            }
            tmp[y as usize * p.width + x as usize] = acc;
        }
    }
    let mut out = vec![0.0; p.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * tmp[mirror(y + j as isize - r, h) * p.width + x as usize];
            }
            out[y as usize * p.width + x as usize] = acc;
        }
    }
    Plane {
        width: p.width,
        height: p.height,
        data: out,
    }
}

/// Textbook SSIM: for every full 11×11 window, weighted means, variances and
/// covariance computed directly around the local means with a 2-D Gaussian.
#[allow(clippy::needless_range_loop)]
pub fn reference_ssim(a: &Plane, b: &Plane) -> f64 {
    const N: usize = 11;
    let sigma: f64 = 1.5;
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut w = [[0.0f64; N]; N];
    let mut total = 0.0;
    for (j, row) in w.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let dx = i as f64 - 5.0;
            let dy = j as f64 - 5.0;
            *v = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    for row in w.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=a.height - N {
        for x0 in 0..=a.width - N {
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..N {
                for i in 0..N {
                    ma += w[j][i] * a.get(x0 + i, y0 + j);
                    mb += w[j][i] * b.get(x0 + i, y0 + j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..N {
                for i in 0..N {
                    let da = a.get(x0 + i, y0 + j) - ma;
                    let db = b.get(x0 + i, y0 + j) - mb;
                    va += w[j][i] * da * da;
                    vb += w[j][i] * db * db;
                    cov += w[j][i] * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// 0/255 checkerboard with `square`-pixel squares.
pub fn checkerboard(size: usize, square: usize) -> Plane {
    Plane::from_fn(size, size, |x, y| if (x / square + y / square).is_multiple_of(2) { 255.0 } else { 0.0 })
}

/// Smooth pseudo-natural test texture on the 0–255 scale.
pub fn texture(size: usize, seed: u64) -> Plane {
    let fbm = sea_undistort::noise::Fbm::new(seed, 5, 1.0 / 12.0);
    Plane::from_fn(size, size, |x, y| 127.5 + 110.0 * fbm.sample(x as f64, y as f64))
}

/// SHA-256 over the sorted relative paths and contents of every file in `dir`.
pub fn hash_dir(dir: &Path) -> String {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update([0]);
        h.update(std::fs::read(dir.join(&n)).unwrap());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
