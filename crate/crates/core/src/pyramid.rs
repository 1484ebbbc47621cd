//! Coarse-to-fine resolution pyramids.
//!
//! Each level is computed from the original: separable Gaussian smoothing
//! (σ in voxels of the original grid, kernel truncated at ±⌈3σ⌉ taps and
//! renormalized, clamp-to-edge borders) followed by block averaging over
//! `factor^D` voxels. A coarse voxel sits at the centre of the block it
//! summarizes, so physical coordinates stay consistent across levels.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{check_shape, BinaryMask, FuzzyImage, WeightMap};

#[derive(Clone, Debug)]
pub struct PyramidLevel<const D: usize> {
    pub factor: usize,
    pub sigma: f64,
    pub image: FuzzyImage<D>,
    pub mask: BinaryMask<D>,
    pub weights: WeightMap<D>,
}

/// Truncated, renormalized 1-D Gaussian kernel; `[1.0]` for `σ = 0`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

pub fn gaussian_smooth<const D: usize>(img: &FuzzyImage<D>, sigma: f64) -> FuzzyImage<D> {
    if sigma <= 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let grid = *img.grid();
    let dims = grid.dims();
    let strides = grid.strides();
    let mut cur = img.values().to_vec();
    let mut line = Vec::new();
    for axis in 0..D {
        let n = dims[axis];
        if n < 2 {
            continue;
        }
        let stride = strides[axis];
        let mut next = cur.clone();
        for start in grid.line_starts(axis) {
            line.clear();
            line.extend((0..n).map(|i| cur[start + i * stride]));
            for i in 0..n {
                let mut acc = 0.0;
                for (t, &w) in kernel.iter().enumerate() {
                    let j = (i as i64 + t as i64 - radius).clamp(0, n as i64 - 1) as usize;
                    acc += w * line[j];
                }
                next[start + i * stride] = acc;
            }
        }
        cur = next;
    }
    FuzzyImage::new(grid, cur).expect("same grid")
}

/// Grid of a level obtained by `factor`-fold block reduction.
pub fn downsampled_grid<const D: usize>(grid: &Grid<D>, factor: usize) -> Result<Grid<D>> {
    let dims = grid.dims();
    if factor == 0 || dims.iter().any(|&d| factor > d) {
        return Err(Error::InvalidParameter(format!(
            "downsampling factor {factor} incompatible with dims {dims:?}"
        )));
    }
    let spacing = grid.spacing();
    let origin = grid.origin();
    let mut nd = [0usize; D];
    let mut ns = [0.0; D];
    let mut no = [0.0; D];
    for k in 0..D {
        nd[k] = dims[k].div_ceil(factor);
        ns[k] = spacing[k] * factor as f64;
        no[k] = origin[k] + 0.5 * (factor as f64 - 1.0) * spacing[k];
    }
    Grid::with_origin(nd, ns, no)
}

/// Visits, for each coarse voxel, the fine voxels of its block.
fn block_reduce<const D: usize, T: Copy, R>(
    fine: &Grid<D>,
    coarse: &Grid<D>,
    factor: usize,
    data: &[T],
    mut reduce: impl FnMut(&mut dyn Iterator<Item = T>) -> R,
) -> Vec<R> {
    let fd = fine.dims();
    (0..coarse.len())
        .map(|ci| {
            let cc = coarse.coords(ci);
            let mut lo = [0usize; D];
            let mut hi = [0usize; D];
            for k in 0..D {
                lo[k] = cc[k] * factor;
                hi[k] = ((cc[k] + 1) * factor).min(fd[k]);
            }
            let mut cursor = lo;
            let mut done = false;
            let mut iter = std::iter::from_fn(|| {
                if done {
                    return None;
                }
                let v = data[fine.index(&cursor)];
                // odometer increment over the block
                let mut k = 0;
                loop {
                    if k == D {
                        done = true;
                        break;
                    }
                    cursor[k] += 1;
                    if cursor[k] < hi[k] {
                        break;
                    }
                    cursor[k] = lo[k];
                    k += 1;
                }
                Some(v)
            });
            reduce(&mut iter)
        })
        .collect()
}

pub fn build_pyramid<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    weights: &WeightMap<D>,
    factors: &[usize],
    sigmas: &[f64],
) -> Result<Vec<PyramidLevel<D>>> {
    if factors.len() != sigmas.len() {
        return Err(Error::InvalidParameter(format!(
            "{} pyramid factors but {} sigmas",
            factors.len(),
            sigmas.len()
        )));
    }
    if factors.is_empty() {
        return Err(Error::InvalidParameter("pyramid needs at least one level".into()));
    }
    check_shape(img.grid(), mask.grid())?;
    check_shape(img.grid(), weights.grid())?;
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::InvalidParameter(format!("smoothing sigma must be >= 0, got {s}")));
    }
    let fine = *img.grid();
    factors
        .iter()
        .zip(sigmas)
        .map(|(&factor, &sigma)| {
            let coarse = downsampled_grid(&fine, factor)?;
            let smoothed = gaussian_smooth(img, sigma);
            if factor == 1 {
                return Ok(PyramidLevel {
                    factor,
                    sigma,
                    image: smoothed,
                    mask: mask.clone(),
                    weights: weights.clone(),
                });
            }
            let values = block_reduce(&fine, &coarse, factor, smoothed.values(), |it| {
                let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                s / n as f64
            });
            let bits = block_reduce(&fine, &coarse, factor, mask.bits(), |it| {
                let (inside, n) = it.fold((0usize, 0usize), |(a, n), b| (a + b as usize, n + 1));
                2 * inside > n
            });
            let w = block_reduce(&fine, &coarse, factor, weights.weights(), |it| {
                let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                s / n as f64
            });
            Ok(PyramidLevel {
                factor,
                sigma,
                image: FuzzyImage::new(coarse, values)?,
                mask: BinaryMask::new(coarse, bits)?,
                weights: WeightMap::new(coarse, w)?,
            })
        })
        .collect()
}
