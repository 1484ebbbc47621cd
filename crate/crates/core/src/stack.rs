//! Pre-computed α-integrated distance and gradient stacks.
//!
//! Level `i` holds `Σ_{j≤i} (α_j − α_{j−1}) · DT_j` together with the matching
//! gradient sum, where `DT_j` is the saturated distance transform of the
//! masked α-cut at `α_j`. A lookup for a point with quantized membership `h`
//! reads level `h` only, so the per-point cost does not depend on `ℓ`.

use rayon::prelude::*;

use crate::dt::{discrete_gradient, euclidean_dt, DistanceField, GradientField};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{alpha_cut, check_shape, complement, AlphaLevels, BinaryMask, FuzzyImage};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

/// `D[0..=ℓ]` and `G[0..=ℓ]`, stored level-major with `[d, g_0, …, g_{D−1}]`
/// interleaved per voxel.
#[derive(Clone, Debug)]
pub struct DistanceGradientStack<const D: usize> {
    grid: Grid<D>,
    levels: usize,
    d_max: f64,
    bidirectional: bool,
    data: Vec<f64>,
}

impl<const D: usize> DistanceGradientStack<D> {
    const CH: usize = D + 1;

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    /// `ℓ`; valid level indices are `0..=ℓ`.
    pub fn level_count(&self) -> usize {
        self.levels
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn is_bidirectional(&self) -> bool {
        self.bidirectional
    }

    /// Total integrated α-mass `h`; every stored distance lies in `[0, d_max·h]`.
    pub fn mass(&self) -> f64 {
        if self.bidirectional {
            2.0
        } else {
            1.0
        }
    }

    #[inline]
    fn offset(&self, level: usize, idx: usize) -> usize {
        (level * self.grid.len() + idx) * Self::CH
    }

    #[inline]
    pub fn distance(&self, level: usize, idx: usize) -> f64 {
        self.data[self.offset(level, idx)]
    }

    #[inline]
    pub fn gradient(&self, level: usize, idx: usize) -> [f64; D] {
        let o = self.offset(level, idx);
        let mut g = [0.0; D];
        g.copy_from_slice(&self.data[o + 1..o + Self::CH]);
        g
    }

    /// Copy of level `i` as separate fields.
    pub fn level(&self, level: usize) -> (Vec<f64>, Vec<[f64; D]>) {
        let n = self.grid.len();
        let d = (0..n).map(|i| self.distance(level, i)).collect();
        let g = (0..n).map(|i| self.gradient(level, i)).collect();
        (d, g)
    }

    /// Distance and gradient at physical point `p` on level `level`.
    pub fn interpolate(&self, level: usize, p: &[f64; D], mode: Interpolation) -> Result<(f64, [f64; D])> {
        if level > self.levels {
            return Err(Error::InvalidParameter(format!(
                "level {level} outside 0..={}",
                self.levels
            )));
        }
        let u = self.grid.continuous_index(p);
        if !self.grid.contains_index(&u) {
            return Err(Error::OutOfBounds(p.to_vec()));
        }
        Ok(self.lookup(level, &u, mode))
    }

    /// Lookup at a fractional index already known to be inside the grid box.
    #[inline]
    pub(crate) fn lookup(&self, level: usize, u: &[f64; D], mode: Interpolation) -> (f64, [f64; D]) {
        match mode {
            Interpolation::Nearest => {
                let idx = self.grid.nearest_of_index(u);
                (self.distance(level, idx), self.gradient(level, idx))
            }
            Interpolation::Linear => self.lookup_linear(level, u),
        }
    }

    #[inline]
    fn lookup_linear(&self, level: usize, u: &[f64; D]) -> (f64, [f64; D]) {
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let mut base = level * self.grid.len();
        let mut frac = [0.0; D];
        let mut step = [0usize; D];
        for k in 0..D {
            if dims[k] < 2 {
                continue;
            }
            let i0 = (u[k].floor() as usize).min(dims[k] - 2);
            frac[k] = u[k] - i0 as f64;
            base += i0 * strides[k];
            step[k] = strides[k];
        }
        let mut d = 0.0;
        let mut g = [0.0; D];
        for corner in 0..1usize << D {
            let mut idx = base;
            let mut w = 1.0;
            for k in 0..D {
                if corner & (1 << k) != 0 {
                    idx += step[k];
                    w *= frac[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            let o = idx * Self::CH;
            let cell = &self.data[o..o + Self::CH];
            d += w * cell[0];
            for k in 0..D {
                g[k] += w * cell[k + 1];
            }
        }
        (d, g)
    }
}

/// Saturated DT and gradient of one masked cut.
fn cut_fields<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    alpha: f64,
    d_max: f64,
) -> (DistanceField<D>, GradientField<D>) {
    let cut = alpha_cut(img, alpha).intersect(mask).expect("shapes checked");
    let dt = euclidean_dt(&cut, d_max);
    let g = discrete_gradient(&dt);
    (dt, g)
}

/// Unidirectional stack over the raw level list `alphas` (`α_1..α_ℓ`,
/// non-decreasing, `α_0 = 0` implied).
fn build_stack<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    alphas: &[f64],
    d_max: f64,
) -> DistanceGradientStack<D> {
    let grid = *img.grid();
    let n = grid.len();
    let ch = D + 1;
    let fields: Vec<_> = alphas
        .par_iter()
        .map(|&a| cut_fields(img, mask, a, d_max))
        .collect();
    let mut data = vec![0.0; (alphas.len() + 1) * n * ch];
    let mut prev_alpha = 0.0;
    for (i, (dt, g)) in fields.iter().enumerate() {
        let w = alphas[i] - prev_alpha;
        prev_alpha = alphas[i];
        let (done, rest) = data.split_at_mut((i + 1) * n * ch);
        let prev = &done[i * n * ch..];
        let cur = &mut rest[..n * ch];
        for v in 0..n {
            let o = v * ch;
            cur[o] = prev[o] + w * dt.distances()[v];
            let gv = &g.vectors()[v];
            for k in 0..D {
                cur[o + 1 + k] = prev[o + 1 + k] + w * gv[k];
            }
        }
    }
    DistanceGradientStack {
        grid,
        levels: alphas.len(),
        d_max,
        bidirectional: false,
        data,
    }
}

fn check_inputs<const D: usize>(img: &FuzzyImage<D>, mask: &BinaryMask<D>, d_max: f64) -> Result<()> {
    check_shape(img.grid(), mask.grid())?;
    if !(d_max > 0.0) {
        return Err(Error::InvalidParameter(format!("d_max must be positive, got {d_max}")));
    }
    Ok(())
}

/// Inwards stack: `D[i] = D[i−1] + (α_i − α_{i−1}) · min(DT[cut_i ∩ mask], d_max)`.
pub fn build_alpha_dt<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    levels: &AlphaLevels,
    d_max: f64,
) -> Result<DistanceGradientStack<D>> {
    check_inputs(img, mask, d_max)?;
    Ok(build_stack(img, mask, levels.levels(), d_max))
}

/// Cut levels of the complement stack: `1−α_{ℓ−1}, …, 1−α_1, 1`.
///
/// Level `ℓ−i` of the complement stack then integrates the complement
/// memberships over `(0, 1−α_i]`, the full height of a complemented point of
/// membership `α_i`. For equally spaced levels the list equals `α_1..α_ℓ`.
pub fn complement_levels(levels: &AlphaLevels) -> Vec<f64> {
    (0..levels.count()).rev().map(|k| 1.0 - levels.alpha(k)).collect()
}

/// Unidirectional stack of `complement(img)` over [`complement_levels`].
pub fn build_alpha_dt_complement<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    levels: &AlphaLevels,
    d_max: f64,
) -> Result<DistanceGradientStack<D>> {
    check_inputs(img, mask, d_max)?;
    Ok(build_stack(&complement(img), mask, &complement_levels(levels), d_max))
}

/// Inwards stack plus the complement stack, combined as `D[i] + D̄[ℓ−i]` for
/// both distances and gradients.
pub fn build_alpha_dt_bidirectional<const D: usize>(
    img: &FuzzyImage<D>,
    mask: &BinaryMask<D>,
    levels: &AlphaLevels,
    d_max: f64,
) -> Result<DistanceGradientStack<D>> {
    check_inputs(img, mask, d_max)?;
    let l = levels.count();
    let (mut inwards, outwards) = rayon::join(
        || build_stack(img, mask, levels.levels(), d_max),
        || build_stack(&complement(img), mask, &complement_levels(levels), d_max),
    );
    let block = img.len() * (D + 1);
    for i in 0..=l {
        let src = &outwards.data[(l - i) * block..(l - i + 1) * block];
        let dst = &mut inwards.data[i * block..(i + 1) * block];
        for (d, s) in dst.iter_mut().zip(src) {
            *d += s;
        }
    }
    inwards.bidirectional = true;
    Ok(inwards)
}
