//! Intensity-based yardsticks: SSD, Pearson correlation and mutual
//! information over the overlap.
//!
//! Every voxel `x` of `A` whose image `T(x)` falls inside `B`'s grid box and
//! mask contributes the pair `(A(x), B(T(x)))`, with `B` sampled by
//! multilinear interpolation. Values are means over the overlap.

use crate::grid::Grid;
use crate::image::{BinaryMask, FuzzyImage};
use crate::transform::TransformModel;

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineValue {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Number of overlapping pairs.
    pub overlap: usize,
    /// Empty overlap, or zero variance for PCC.
    pub failed: bool,
}

impl BaselineValue {
    fn failure(n: usize) -> Self {
        Self {
            value: f64::NAN,
            grad: vec![0.0; n],
            overlap: 0,
            failed: true,
        }
    }
}

#[inline]
fn sample_b<const D: usize>(b: &FuzzyImage<D>, mask_b: &BinaryMask<D>, p: &[f64; D]) -> Option<(f64, [f64; D])> {
    let grid: &Grid<D> = b.grid();
    let u = grid.continuous_index(p);
    if !grid.contains_index(&u) || !mask_b.get(grid.nearest_of_index(&u)) {
        return None;
    }
    Some(b.sample_linear_index(&u))
}

/// `(A(x), B(T(x)))` pairs over the overlap.
pub fn overlap_pairs<const D: usize, M: TransformModel<D>>(
    a: &FuzzyImage<D>,
    b: &FuzzyImage<D>,
    t: &M,
    mask_b: &BinaryMask<D>,
) -> Vec<(f64, f64)> {
    let grid = a.grid();
    (0..grid.len())
        .filter_map(|i| sample_b(b, mask_b, &t.apply(&grid.point(i))).map(|(v, _)| (a.values()[i], v)))
        .collect()
}

/// Mean squared difference with its analytic transform gradient.
pub fn ssd<const D: usize, M: TransformModel<D>>(
    a: &FuzzyImage<D>,
    b: &FuzzyImage<D>,
    t: &M,
    mask_b: &BinaryMask<D>,
) -> BaselineValue {
    let n = t.param_count();
    let grid = a.grid();
    let mut sum = 0.0;
    let mut grad = vec![0.0; n];
    let mut count = 0usize;
    for i in 0..grid.len() {
        let x = grid.point(i);
        if let Some((v, g)) = sample_b(b, mask_b, &t.apply(&x)) {
            let r = v - a.values()[i];
            sum += r * r;
            t.add_param_gradient(&x, &g, 2.0 * r, &mut grad);
            count += 1;
        }
    }
    if count == 0 {
        return BaselineValue::failure(n);
    }
    let c = count as f64;
    BaselineValue {
        value: sum / c,
        grad: grad.into_iter().map(|g| g / c).collect(),
        overlap: count,
        failed: false,
    }
}

fn pcc_of(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

fn mi_of(pairs: &[(f64, f64)], bins: usize) -> Option<f64> {
    if pairs.is_empty() || bins == 0 {
        return None;
    }
    let bin = |v: f64| ((v.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
    let mut joint = vec![0usize; bins * bins];
    let mut pa = vec![0usize; bins];
    let mut pb = vec![0usize; bins];
    for &(x, y) in pairs {
        let (i, j) = (bin(x), bin(y));
        joint[i * bins + j] += 1;
        pa[i] += 1;
        pb[j] += 1;
    }
    let n = pairs.len() as f64;
    let h = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    Some(h(&pa) + h(&pb) - h(&joint))
}

/// Central finite differences of `f` over the parameters of `t`. Translations
/// use a step of `0.05 ×` the smallest spacing, other parameters `1e-3`.
fn fd_gradient<const D: usize, M: TransformModel<D>>(t: &M, min_spacing: f64, f: impl Fn(&M) -> Option<f64>) -> Vec<f64> {
    let p = t.params();
    let n = p.len();
    (0..n)
        .map(|i| {
            let h = if i >= n - D { 0.05 * min_spacing } else { 1e-3 };
            let (mut hi, mut lo) = (p.clone(), p.clone());
            hi[i] += h;
            lo[i] -= h;
            match (
                t.with_params(&hi).ok().and_then(|m| f(&m)),
                t.with_params(&lo).ok().and_then(|m| f(&m)),
            ) {
                (Some(a), Some(b)) => (a - b) / (2.0 * h),
                _ => 0.0,
            }
        })
        .collect()
}

fn min_spacing<const D: usize>(g: &Grid<D>) -> f64 {
    g.spacing().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Pearson correlation of the overlap intensities with a finite-difference
/// gradient.
pub fn pcc<const D: usize, M: TransformModel<D>>(
    a: &FuzzyImage<D>,
    b: &FuzzyImage<D>,
    t: &M,
    mask_b: &BinaryMask<D>,
) -> BaselineValue {
    let pairs = overlap_pairs(a, b, t, mask_b);
    let Some(value) = pcc_of(&pairs) else {
        return BaselineValue::failure(t.param_count());
    };
    let grad = fd_gradient(t, min_spacing(b.grid()), |m| pcc_of(&overlap_pairs(a, b, m, mask_b)));
    BaselineValue {
        value,
        grad,
        overlap: pairs.len(),
        failed: false,
    }
}

/// Mutual information (nats) of a `bins × bins` joint histogram of the
/// overlap intensities, with a finite-difference gradient.
pub fn mi<const D: usize, M: TransformModel<D>>(
    a: &FuzzyImage<D>,
    b: &FuzzyImage<D>,
    t: &M,
    mask_b: &BinaryMask<D>,
    bins: usize,
) -> BaselineValue {
    let pairs = overlap_pairs(a, b, t, mask_b);
    let Some(value) = mi_of(&pairs, bins) else {
        return BaselineValue::failure(t.param_count());
    };
    let grad = fd_gradient(t, min_spacing(b.grid()), |m| mi_of(&overlap_pairs(a, b, m, mask_b), bins));
    BaselineValue {
        value,
        grad,
        overlap: pairs.len(),
        failed: false,
    }
}
