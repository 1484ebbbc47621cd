//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use amdreg::grid::Grid;
use amdreg::image::{BinaryMask, FuzzyImage};
use amdreg::pyramid::gaussian_smooth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Squared physical distance between two voxels, from exact index differences.
fn sq_dist<const D: usize>(s: &[f64; D], a: &[usize; D], b: &[usize; D]) -> f64 {
    (0..D).map(|k| ((a[k] as f64 - b[k] as f64) * s[k]).powi(2)).sum()
}

/// Minimum physical distance to any set voxel, by exhaustive search;
/// `d_max` for an empty set.
pub fn brute_dt<const D: usize>(mask: &BinaryMask<D>, d_max: f64) -> Vec<f64> {
    brute_sq_dt(mask)
        .into_iter()
        .map(|sq| if sq.is_finite() { sq.sqrt().min(d_max) } else { d_max })
        .collect()
}

/// Same, but squared and unsaturated (`∞` for an empty set).
pub fn brute_sq_dt<const D: usize>(mask: &BinaryMask<D>) -> Vec<f64> {
    let g = mask.grid();
    let s = g.spacing();
    let set: Vec<[usize; D]> = (0..g.len()).filter(|&i| mask.get(i)).map(|i| g.coords(i)).collect();
    (0..g.len())
        .map(|i| {
            let p = g.coords(i);
            set.iter().map(|q| sq_dist(&s, &p, q)).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Multilinear interpolation of a scalar field written out from scratch.
pub fn interp<const D: usize>(grid: &Grid<D>, f: &[f64], p: &[f64; D]) -> f64 {
    let u = grid.continuous_index(p);
    let dims = grid.dims();
    let mut base = [0usize; D];
    let mut frac = [0.0; D];
    for k in 0..D {
        let i0 = (u[k].floor() as usize).min(dims[k].saturating_sub(2));
        base[k] = i0;
        frac[k] = u[k] - i0 as f64;
    }
    let mut acc = 0.0;
    for corner in 0..1usize << D {
        let mut c = base;
        let mut w = 1.0;
        for k in 0..D {
            if corner >> k & 1 == 1 {
                c[k] = (c[k] + 1).min(dims[k] - 1);
                w *= frac[k];
            } else {
                w *= 1.0 - frac[k];
            }
        }
        acc += w * f[grid.index(&c)];
    }
    acc
}

pub fn random_image<const D: usize>(grid: Grid<D>, seed: u64) -> FuzzyImage<D> {
    let mut r = rng(seed);
    FuzzyImage::new(grid, (0..grid.len()).map(|_| r.random::<f64>()).collect()).unwrap()
}

pub fn random_mask<const D: usize>(grid: Grid<D>, density: f64, seed: u64) -> BinaryMask<D> {
    let mut r = rng(seed);
    BinaryMask::new(grid, (0..grid.len()).map(|_| r.random::<f64>() < density).collect()).unwrap()
}

/// Smoothed white noise rescaled to `[0, 1]`.
pub fn smooth_random_image<const D: usize>(grid: Grid<D>, sigma: f64, seed: u64) -> FuzzyImage<D> {
    let s = gaussian_smooth(&random_image(grid, seed), sigma);
    let (lo, hi) = s.values().iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    s.map(|v| (v - lo) / (hi - lo))
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Relative error of two vectors measured against the larger norm.
pub fn vec_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / n(a).max(n(b)).max(1e-300)
}
