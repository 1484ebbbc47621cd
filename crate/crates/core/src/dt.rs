//! Exact Euclidean distance transforms on anisotropic grids and the γ-gated
//! central-difference gradient.
//!
//! The transform is the separable lower-envelope construction: squared
//! distances are propagated one axis at a time, each 1-D pass finding the
//! lower envelope of parabolas rooted at the line's samples. Every pass is
//! linear in the line length, so the whole transform is linear in the voxel
//! count.

use crate::grid::Grid;
use crate::image::BinaryMask;

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField<const D: usize> {
    grid: Grid<D>,
    distances: Vec<f64>,
}

impl<const D: usize> DistanceField<D> {
    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn get(&self, coords: &[usize; D]) -> f64 {
        self.distances[self.grid.index(coords)]
    }

    pub fn into_image(self) -> crate::image::FuzzyImage<D> {
        crate::image::FuzzyImage::new(self.grid, self.distances).expect("same grid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientField<const D: usize> {
    grid: Grid<D>,
    vectors: Vec<[f64; D]>,
}

impl<const D: usize> GradientField<D> {
    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn vectors(&self) -> &[[f64; D]] {
        &self.vectors
    }

    pub fn get(&self, coords: &[usize; D]) -> [f64; D] {
        self.vectors[self.grid.index(coords)]
    }
}

/// Exact squared distances along one line. `f` holds the incoming squared
/// distances (`∞` where nothing is known yet); `out` receives
/// `min_j f[j] + ((q − j)·s)²`. Scratch buffers are reused across lines.
fn envelope_1d(f: &[f64], s: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    let pos = |q: usize| q as f64 * s;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + pos(q) * pos(q);
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let fp = f[p] + pos(p) * pos(p);
                    let x = (fq - fp) / (2.0 * (pos(q) - pos(p)));
                    if x <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(x);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let x = pos(q);
        while k + 1 < v.len() && z[k + 1] < x {
            k += 1;
        }
        let p = v[k];
        let d = (q as f64 - p as f64) * s;
        *o = f[p] + d * d;
    }
}

/// Squared Euclidean distance to the nearest set voxel (`∞` for an empty set).
pub fn squared_euclidean_dt<const D: usize>(mask: &BinaryMask<D>) -> Vec<f64> {
    let grid = *mask.grid();
    let dims = grid.dims();
    let strides = grid.strides();
    let spacing = grid.spacing();
    let mut g: Vec<f64> = mask.bits().iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());
    let mut line = Vec::new();
    let mut out = Vec::new();
    for axis in 0..D {
        let n = dims[axis];
        let stride = strides[axis];
        line.resize(n, 0.0);
        out.resize(n, 0.0);
        for start in grid.line_starts(axis) {
            for (i, l) in line.iter_mut().enumerate() {
                *l = g[start + i * stride];
            }
            envelope_1d(&line, spacing[axis], &mut out, &mut v, &mut z);
            for (i, o) in out.iter().enumerate() {
                g[start + i * stride] = *o;
            }
        }
    }
    g
}

/// Euclidean distance transform of `mask`, saturated at `d_max`.
///
/// An empty mask yields `d_max` everywhere.
pub fn euclidean_dt<const D: usize>(mask: &BinaryMask<D>, d_max: f64) -> DistanceField<D> {
    let distances = squared_euclidean_dt(mask)
        .into_iter()
        .map(|sq| sq.sqrt().min(d_max))
        .collect();
    DistanceField {
        grid: *mask.grid(),
        distances,
    }
}

/// γ-gated central differences `(d(x + s_i u_i) − d(x − s_i u_i)) / (2 s_i)`.
///
/// Zero wherever `d(x) = 0`. On the grid border the missing neighbour is
/// replaced by `x` itself and the divisor becomes `s_i`.
pub fn discrete_gradient<const D: usize>(field: &DistanceField<D>) -> GradientField<D> {
    let grid = field.grid;
    let vectors = (0..grid.len()).map(|i| gradient_at(&grid, &field.distances, i)).collect();
    GradientField { grid, vectors }
}

#[inline]
pub(crate) fn gradient_at<const D: usize>(grid: &Grid<D>, d: &[f64], idx: usize) -> [f64; D] {
    let mut g = [0.0; D];
    if d[idx] == 0.0 {
        return g;
    }
    let dims = grid.dims();
    let strides = grid.strides();
    let spacing = grid.spacing();
    let c = grid.coords(idx);
    for k in 0..D {
        let has_lo = c[k] > 0;
        let has_hi = c[k] + 1 < dims[k];
        g[k] = match (has_lo, has_hi) {
            (true, true) => (d[idx + strides[k]] - d[idx - strides[k]]) / (2.0 * spacing[k]),
            (false, true) => (d[idx + strides[k]] - d[idx]) / spacing[k],
            (true, false) => (d[idx] - d[idx - strides[k]]) / spacing[k],
            (false, false) => 0.0,
        };
    }
    g
}
