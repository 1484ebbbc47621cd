//! Grayscale images as fuzzy sets, plus masks, weights and the elementwise
//! fuzzy-set operations the distance machinery is built from.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// A grayscale image whose values are read as set memberships.
///
/// Values are not forced into `[0, 1]` on construction (raw float volumes are
/// legal input); [`normalize_percentile`] produces a proper membership image.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyImage<const D: usize> {
    grid: Grid<D>,
    values: Vec<f64>,
}

impl<const D: usize> FuzzyImage<D> {
    pub fn new(grid: Grid<D>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} voxels",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn filled(grid: Grid<D>, value: f64) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid<D>, mut f: impl FnMut([f64; D]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, coords: &[usize; D]) -> f64 {
        self.values[self.grid.index(coords)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same values on a different (same-shaped) grid.
    pub fn with_grid(mut self, grid: Grid<D>) -> Result<Self> {
        if !grid.same_shape(&self.grid) {
            return Err(Error::DimensionMismatch("regridding must keep the voxel dims".into()));
        }
        self.grid = grid;
        Ok(self)
    }

    /// Multilinear intensity interpolation together with its spatial gradient
    /// (physical units). `None` outside the voxel-centre box.
    pub fn sample_linear(&self, p: &[f64; D]) -> Option<(f64, [f64; D])> {
        let u = self.grid.continuous_index(p);
        if !self.grid.contains_index(&u) {
            return None;
        }
        Some(self.sample_linear_index(&u))
    }

    pub(crate) fn sample_linear_index(&self, u: &[f64; D]) -> (f64, [f64; D]) {
        let dims = self.grid.dims();
        let strides = self.grid.strides();
        let spacing = self.grid.spacing();
        let mut base = 0usize;
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
        let mut value = 0.0;
        let mut grad = [0.0; D];
        for corner in 0..1usize << D {
            let mut offset = base;
            let mut w = 1.0;
            let mut dw = [1.0; D];
            for k in 0..D {
                let hi = corner & (1 << k) != 0;
                if hi {
                    offset += step[k];
                }
                let (wk, dk) = if hi { (frac[k], 1.0) } else { (1.0 - frac[k], -1.0) };
                w *= wk;
                for (j, d) in dw.iter_mut().enumerate() {
                    *d *= if j == k { dk } else { wk };
                }
            }
            let v = self.values[offset];
            value += w * v;
            for k in 0..D {
                if step[k] != 0 {
                    grad[k] += dw[k] * v;
                }
            }
        }
        for k in 0..D {
            grad[k] /= spacing[k];
        }
        (value, grad)
    }
}

/// A crisp subset of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryMask<const D: usize> {
    grid: Grid<D>,
    bits: Vec<bool>,
}

impl<const D: usize> BinaryMask<D> {
    pub fn new(grid: Grid<D>, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} mask bits for a grid of {} voxels",
                bits.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, bits })
    }

    pub fn full(grid: Grid<D>) -> Self {
        Self {
            bits: vec![true; grid.len()],
            grid,
        }
    }

    pub fn empty(grid: Grid<D>) -> Self {
        Self {
            bits: vec![false; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid<D>, mut f: impl FnMut([f64; D]) -> bool) -> Self {
        let bits = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, bits }
    }

    pub fn from_index_fn(grid: Grid<D>, f: impl FnMut(usize) -> bool) -> Self {
        let bits = (0..grid.len()).map(f).collect();
        Self { grid, bits }
    }

    /// Disk/ball of the given physical radius.
    pub fn ball(grid: Grid<D>, center: [f64; D], radius: f64) -> Self {
        Self::from_fn(grid, |p| crate::linalg::distance(&p, &center) <= radius)
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn intersect(&self, other: &BinaryMask<D>) -> Result<Self> {
        check_shape(&self.grid, &other.grid)?;
        Ok(Self {
            grid: self.grid,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && b).collect(),
        })
    }

    pub fn is_subset_of(&self, other: &BinaryMask<D>) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn not(&self) -> Self {
        Self {
            grid: self.grid,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

/// Nonnegative per-voxel weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap<const D: usize> {
    grid: Grid<D>,
    weights: Vec<f64>,
}

impl<const D: usize> WeightMap<D> {
    pub fn new(grid: Grid<D>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for a grid of {} voxels",
                weights.len(),
                grid.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!("weights must be finite and >= 0, found {w}")));
        }
        Ok(Self { grid, weights })
    }

    pub fn ones(grid: Grid<D>) -> Self {
        Self {
            weights: vec![1.0; grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &Grid<D> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True if some voxel inside `mask` carries positive weight.
    pub fn has_support_in(&self, mask: &BinaryMask<D>) -> bool {
        self.weights.iter().zip(mask.bits()).any(|(&w, &m)| m && w > 0.0)
    }
}

/// Strictly increasing α-levels in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaLevels {
    levels: Vec<f64>,
    equally_spaced: bool,
}

impl AlphaLevels {
    /// `α_i = i / ℓ` for `i = 1..=ℓ`.
    pub fn equally_spaced(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("need at least one alpha level".into()));
        }
        if count > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("too many alpha levels: {count}")));
        }
        let levels = (1..=count).map(|i| i as f64 / count as f64).collect();
        Ok(Self {
            levels,
            equally_spaced: true,
        })
    }

    pub fn custom(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("need at least one alpha level".into()));
        }
        if levels.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
            return Err(Error::InvalidParameter(format!("alpha levels must lie in (0, 1]: {levels:?}")));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!("alpha levels must increase strictly: {levels:?}")));
        }
        Ok(Self {
            levels,
            equally_spaced: false,
        })
    }

    pub fn count(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// `α_i` with `α_0 = 0`.
    pub fn alpha(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.levels[i - 1]
        }
    }

    /// Level index a membership value is looked up at.
    ///
    /// Equally spaced levels use `⌊ℓμ + 0.5⌋`; custom levels round to the
    /// nearest of `{0, α_1, …, α_ℓ}` with ties going up, which coincides with
    /// the closed form on equally spaced levels.
    #[inline]
    pub fn quantize(&self, mu: f64) -> usize {
        if self.equally_spaced {
            return quantize_membership(mu, self.levels.len());
        }
        let mut best = 0;
        let mut best_gap = mu.abs();
        for (i, &a) in self.levels.iter().enumerate() {
            let gap = (mu - a).abs();
            if gap <= best_gap {
                best = i + 1;
                best_gap = gap;
            }
        }
        best
    }
}

/// `⌊ℓμ + 0.5⌋`, clamped to `[0, ℓ]`.
#[inline]
pub fn quantize_membership(mu: f64, levels: usize) -> usize {
    let q = (levels as f64 * mu + 0.5).floor();
    if q <= 0.0 {
        0
    } else {
        (q as usize).min(levels)
    }
}

/// Outcome of [`normalize_percentile`].
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized<const D: usize> {
    pub image: FuzzyImage<D>,
    /// Set when the two percentiles coincide; the image is then all zeros.
    pub degenerate: bool,
}

/// Nearest-rank percentile of an ascending slice: element `⌈q·N⌉` (1-based, clamped).
pub fn percentile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil();
    let rank = if rank < 1.0 { 1 } else { (rank as usize).min(n) };
    sorted[rank - 1]
}

/// Robust rescaling to `[0, 1]` between the `ρ` and `1 − ρ` intensity percentiles.
pub fn normalize_percentile<const D: usize>(img: &FuzzyImage<D>, rho: f64) -> Result<Normalized<D>> {
    if img.is_empty() {
        return Err(Error::Empty("cannot normalize an empty image".into()));
    }
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::InvalidParameter(format!("percentile must lie in [0, 0.5), got {rho}")));
    }
    let mut sorted = img.values.clone();
    sorted.sort_by(f64::total_cmp);
    let lo = percentile_nearest_rank(&sorted, rho);
    let hi = percentile_nearest_rank(&sorted, 1.0 - rho);
    let range = hi - lo;
    if !(range > 0.0) {
        return Ok(Normalized {
            image: img.map(|_| 0.0),
            degenerate: true,
        });
    }
    Ok(Normalized {
        image: img.map(|v| ((v - lo) / range).clamp(0.0, 1.0)),
        degenerate: false,
    })
}

/// `{x : μ(x) ≥ α}`.
pub fn alpha_cut<const D: usize>(img: &FuzzyImage<D>, alpha: f64) -> BinaryMask<D> {
    BinaryMask {
        grid: img.grid,
        bits: img.values.iter().map(|&v| v >= alpha).collect(),
    }
}

pub fn complement<const D: usize>(img: &FuzzyImage<D>) -> FuzzyImage<D> {
    img.map(|v| 1.0 - v)
}

/// Replaces each membership by the α-level it quantizes to, `α_{QUANTIZE(μ)}`.
///
/// On the snapped image the α-cuts and the level lookup agree voxel for voxel,
/// which is what makes an image's distance to itself exactly zero.
pub fn snap_to_levels<const D: usize>(img: &FuzzyImage<D>, levels: &AlphaLevels) -> FuzzyImage<D> {
    img.map(|v| levels.alpha(levels.quantize(v)))
}

/// Circular (spherical) Hann window `cos²(π u / 2)`, `u = min(1, ‖x − c‖ / r)`.
pub fn hann_window_weights<const D: usize>(
    grid: Grid<D>,
    center: [f64; D],
    radius: f64,
    squared: bool,
) -> Result<WeightMap<D>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("window radius must be positive, got {radius}")));
    }
    let weights = (0..grid.len())
        .map(|i| {
            let r = crate::linalg::distance(&grid.point(i), &center);
            if r >= radius {
                return 0.0;
            }
            let c = (std::f64::consts::FRAC_PI_2 * r / radius).cos();
            let w = c * c;
            if squared {
                w * w
            } else {
                w
            }
        })
        .collect();
    Ok(WeightMap { grid, weights })
}

/// `N(0, σ²)` draws from a ChaCha8 stream seeded with `seed`.
pub fn gaussian_noise(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect()
}

/// Additive Gaussian noise, clamped back into `[0, 1]`.
pub fn add_gaussian_noise<const D: usize>(img: &FuzzyImage<D>, sigma: f64, seed: u64) -> Result<FuzzyImage<D>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let noise = gaussian_noise(img.len(), sigma, seed);
    Ok(FuzzyImage {
        grid: img.grid,
        values: img
            .values
            .iter()
            .zip(noise)
            .map(|(&v, n)| (v + n).clamp(0.0, 1.0))
            .collect(),
    })
}

pub(crate) fn check_shape<const D: usize>(a: &Grid<D>, b: &Grid<D>) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())))
    }
}
