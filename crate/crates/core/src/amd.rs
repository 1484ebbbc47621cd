//! Average minimal distances between fuzzy images under a transform.
//!
//! The forward direction maps sample points of `A` into `B` and reads `B`'s
//! stack at the quantized membership of each point. The symmetric distance
//! averages the forward term under `T` and the reverse term under `T⁻¹`,
//! mapping reverse derivatives back through `∂T⁻¹/∂T`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::image::{check_shape, snap_to_levels, AlphaLevels, BinaryMask, FuzzyImage, WeightMap};
use crate::optimizer::CostValue;
use crate::stack::{build_alpha_dt, build_alpha_dt_bidirectional, DistanceGradientStack, Interpolation};
use crate::transform::TransformModel;

/// Samples per parallel work unit. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 1024;

/// An image prepared for distance evaluation: memberships snapped to the
/// α-levels, plus its distance/gradient stack.
#[derive(Clone, Debug)]
pub struct AmdImage<const D: usize> {
    image: FuzzyImage<D>,
    mask: BinaryMask<D>,
    weights: WeightMap<D>,
    levels: AlphaLevels,
    stack: DistanceGradientStack<D>,
    quantized: Vec<u32>,
    points: Vec<[f64; D]>,
    population: Vec<usize>,
}

impl<const D: usize> AmdImage<D> {
    pub fn new(
        image: &FuzzyImage<D>,
        mask: &BinaryMask<D>,
        weights: &WeightMap<D>,
        levels: &AlphaLevels,
        d_max: f64,
        bidirectional: bool,
    ) -> Result<Self> {
        check_shape(image.grid(), mask.grid())?;
        check_shape(image.grid(), weights.grid())?;
        if !weights.has_support_in(mask) {
            return Err(Error::Empty("no positive weight inside the mask".into()));
        }
        let snapped = snap_to_levels(image, levels);
        let stack = if bidirectional {
            build_alpha_dt_bidirectional(&snapped, mask, levels, d_max)?
        } else {
            build_alpha_dt(&snapped, mask, levels, d_max)?
        };
        let quantized = image.values().iter().map(|&v| levels.quantize(v) as u32).collect();
        let grid = *image.grid();
        let population = (0..grid.len()).filter(|&i| mask.get(i)).collect();
        Ok(Self {
            image: snapped,
            mask: mask.clone(),
            weights: weights.clone(),
            levels: levels.clone(),
            stack,
            quantized,
            points: grid.points(),
            population,
        })
    }

    /// Full mask, unit weights.
    pub fn plain(image: &FuzzyImage<D>, levels: &AlphaLevels, d_max: f64, bidirectional: bool) -> Result<Self> {
        let grid = *image.grid();
        Self::new(image, &BinaryMask::full(grid), &WeightMap::ones(grid), levels, d_max, bidirectional)
    }

    pub fn grid(&self) -> &Grid<D> {
        self.image.grid()
    }

    /// Memberships after snapping to `{0, α_1, …, α_ℓ}`.
    pub fn image(&self) -> &FuzzyImage<D> {
        &self.image
    }

    pub fn mask(&self) -> &BinaryMask<D> {
        &self.mask
    }

    pub fn weights(&self) -> &WeightMap<D> {
        &self.weights
    }

    pub fn levels(&self) -> &AlphaLevels {
        &self.levels
    }

    pub fn stack(&self) -> &DistanceGradientStack<D> {
        &self.stack
    }

    pub fn quantized(&self) -> &[u32] {
        &self.quantized
    }

    /// In-mask voxel indices; samples are drawn from these.
    pub fn population(&self) -> &[usize] {
        &self.population
    }

    /// Distance reported for a direction without overlap: `d_max · h`.
    pub fn saturated_distance(&self) -> f64 {
        self.stack.d_max() * self.stack.mass()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingMode {
    Full,
    Random { fraction: f64, seed: u64 },
    Custom,
}

/// A set of voxel indices of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    indices: Vec<usize>,
    mode: SamplingMode,
}

impl SampleSet {
    /// Every in-mask voxel.
    pub fn full<const D: usize>(img: &AmdImage<D>) -> Self {
        Self {
            indices: img.population.clone(),
            mode: SamplingMode::Full,
        }
    }

    /// `max(1, ⌊f·N⌋)` distinct in-mask voxels drawn uniformly, sorted.
    pub fn random<const D: usize>(img: &AmdImage<D>, fraction: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            indices: draw(img.population(), fraction, &mut rng)?,
            mode: SamplingMode::Random { fraction, seed },
        })
    }

    /// Explicit indices; must be unique and inside `grid`.
    pub fn from_indices<const D: usize>(grid: &Grid<D>, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("sample indices must be unique".into()));
        }
        if indices.last().is_some_and(|&i| i >= grid.len()) {
            return Err(Error::InvalidParameter("sample index outside the grid".into()));
        }
        Ok(Self {
            indices,
            mode: SamplingMode::Custom,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }
}

pub(crate) fn sample_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).floor() as usize).clamp(1, n.max(1))
}

pub(crate) fn draw(population: &[usize], fraction: f64, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling fraction must lie in (0, 1], got {fraction}")));
    }
    if population.is_empty() {
        return Err(Error::Empty("no voxels to sample from".into()));
    }
    let k = sample_count(fraction, population.len());
    let mut picked: Vec<usize> = index::sample(rng, population.len(), k)
        .into_iter()
        .map(|i| population[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Contribution of one weighted fuzzy point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDistanceResult {
    pub d: f64,
    pub grad: Vec<f64>,
    pub w: f64,
}

/// Weighted distance of the point at level `h`; adds `w·∂d/∂T` into `grad`.
/// `None` when the mapped point misses the mask.
#[inline]
#[allow(clippy::too_many_arguments)]
fn contribution<const D: usize, M: TransformModel<D>>(
    x: &[f64; D],
    h: usize,
    w: f64,
    t: &M,
    mask: &BinaryMask<D>,
    stack: &DistanceGradientStack<D>,
    mode: Interpolation,
    grad: &mut [f64],
) -> Option<f64> {
    let grid = stack.grid();
    let u = grid.continuous_index(&t.apply(x));
    if !grid.contains_index(&u) || !mask.get(grid.nearest_of_index(&u)) {
        return None;
    }
    let (d, g) = stack.lookup(h, &u, mode);
    t.add_param_gradient(x, &g, w, grad);
    Some(w * d)
}

/// Distance and transform gradient of a single fuzzy point `(x, μ)` with
/// weight `w` to the set behind `stack`.
#[allow(clippy::too_many_arguments)]
pub fn point_to_set_distance<const D: usize, M: TransformModel<D>>(
    x: &[f64; D],
    mu: f64,
    w: f64,
    t: &M,
    mask: &BinaryMask<D>,
    stack: &DistanceGradientStack<D>,
    levels: &AlphaLevels,
    mode: Interpolation,
) -> PointDistanceResult {
    let mut grad = vec![0.0; t.param_count()];
    match contribution(x, levels.quantize(mu), w, t, mask, stack, mode, &mut grad) {
        Some(d) => PointDistanceResult { d, grad, w },
        None => PointDistanceResult {
            d: 0.0,
            grad: vec![0.0; t.param_count()],
            w: 0.0,
        },
    }
}

/// Unnormalised sums over one direction.
#[derive(Clone, Debug)]
struct Sums {
    d: f64,
    w: f64,
    grad: Vec<f64>,
}

fn directional<const D: usize, M: TransformModel<D>>(
    src: &AmdImage<D>,
    dst: &AmdImage<D>,
    t: &M,
    samples: &[usize],
    mode: Interpolation,
) -> Sums {
    let n = t.param_count();
    let weights = src.weights.weights();
    let chunk_sums = |chunk: &[usize]| {
        let mut s = Sums {
            d: 0.0,
            w: 0.0,
            grad: vec![0.0; n],
        };
        for &i in chunk {
            let w = weights[i];
            if w == 0.0 {
                continue;
            }
            let h = src.quantized[i] as usize;
            if let Some(d) = contribution(&src.points[i], h, w, t, &dst.mask, &dst.stack, mode, &mut s.grad) {
                s.d += d;
                s.w += w;
            }
        }
        s
    };
    let parts: Vec<Sums> = if samples.len() <= CHUNK {
        vec![chunk_sums(samples)]
    } else {
        samples.par_chunks(CHUNK).map(chunk_sums).collect()
    };
    let mut total = Sums {
        d: 0.0,
        w: 0.0,
        grad: vec![0.0; n],
    };
    for p in parts {
        total.d += p.d;
        total.w += p.w;
        for (a, b) in total.grad.iter_mut().zip(&p.grad) {
            *a += b;
        }
    }
    total
}

/// Normalised one-directional distance.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymmetricResult {
    pub d: f64,
    pub grad: Vec<f64>,
    /// Total weight of samples that landed inside the target mask.
    pub weight: f64,
    pub non_overlap: bool,
}

fn normalize_direction<const D: usize>(s: Sums, dst: &AmdImage<D>) -> AsymmetricResult {
    if s.w > 0.0 {
        AsymmetricResult {
            d: s.d / s.w,
            grad: s.grad.iter().map(|g| g / s.w).collect(),
            weight: s.w,
            non_overlap: false,
        }
    } else {
        AsymmetricResult {
            d: dst.saturated_distance(),
            grad: vec![0.0; s.grad.len()],
            weight: 0.0,
            non_overlap: true,
        }
    }
}

/// Weighted mean point-to-set distance from samples of `src` mapped by `t`
/// into `dst`, restricted to points landing in `dst`'s mask.
pub fn asymmetric_amd<const D: usize, M: TransformModel<D>>(
    src: &AmdImage<D>,
    dst: &AmdImage<D>,
    t: &M,
    samples: &SampleSet,
    mode: Interpolation,
) -> AsymmetricResult {
    normalize_direction(directional(src, dst, t, samples.indices(), mode), dst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricDistanceResult {
    pub d: f64,
    /// Gradient with respect to the forward parameters.
    pub grad: Vec<f64>,
    /// Weighted distance sum of the forward direction.
    pub d_fwd: f64,
    pub d_rev: f64,
    pub w_fwd: f64,
    pub w_rev: f64,
    pub non_overlap: bool,
}

impl SymmetricDistanceResult {
    pub fn into_cost(self) -> CostValue {
        CostValue {
            value: self.d,
            grad: self.grad,
            non_overlap: self.non_overlap,
        }
    }
}

/// `½(d(A→B; T) + d(B→A; T⁻¹))` with the gradient taken with respect to `T`.
pub fn symmetric_amd<const D: usize, M: TransformModel<D>>(
    a: &AmdImage<D>,
    b: &AmdImage<D>,
    t: &M,
    samples_a: &SampleSet,
    samples_b: &SampleSet,
    mode: Interpolation,
) -> Result<SymmetricDistanceResult> {
    let inv = t.inverse()?;
    let jac = t.inverse_param_jacobian()?;
    let (fs, rs) = rayon::join(
        || directional(a, b, t, samples_a.indices(), mode),
        || directional(b, a, &inv, samples_b.indices(), mode),
    );
    let (d_fwd, w_fwd, d_rev, w_rev) = (fs.d, fs.w, rs.d, rs.w);
    let fwd = normalize_direction(fs, b);
    let rev = normalize_direction(rs, a);
    let grad = (0..t.param_count())
        .map(|i| {
            let mapped: f64 = jac[i].iter().zip(&rev.grad).map(|(m, g)| m * g).sum();
            0.5 * (fwd.grad[i] + mapped)
        })
        .collect();
    Ok(SymmetricDistanceResult {
        d: 0.5 * (fwd.d + rev.d),
        grad,
        d_fwd,
        d_rev,
        w_fwd,
        w_rev,
        non_overlap: fwd.non_overlap || rev.non_overlap,
    })
}

/// [`symmetric_amd`] over fresh random subsets of both images.
pub fn subsampled_amd<const D: usize, M: TransformModel<D>>(
    a: &AmdImage<D>,
    b: &AmdImage<D>,
    t: &M,
    fraction: f64,
    seed: u64,
    mode: Interpolation,
) -> Result<SymmetricDistanceResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pa = draw(a.population(), fraction, &mut rng)?;
    let pb = draw(b.population(), fraction, &mut rng)?;
    let wrap = |indices| SampleSet {
        indices,
        mode: SamplingMode::Random { fraction, seed },
    };
    symmetric_amd(a, b, t, &wrap(pa), &wrap(pb), mode)
}

/// Symmetric distance as an optimizer cost over the parameters of a
/// transform model. With a fraction below one, every evaluation draws new
/// subsets from a seeded stream.
pub struct AmdCost<'a, const D: usize, M> {
    a: &'a AmdImage<D>,
    b: &'a AmdImage<D>,
    template: M,
    mode: Interpolation,
    fraction: f64,
    rng: ChaCha8Rng,
    full_a: SampleSet,
    full_b: SampleSet,
}

impl<'a, const D: usize, M: TransformModel<D>> AmdCost<'a, D, M> {
    pub fn new(
        a: &'a AmdImage<D>,
        b: &'a AmdImage<D>,
        template: M,
        mode: Interpolation,
        fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("sampling fraction must lie in (0, 1], got {fraction}")));
        }
        Ok(Self {
            a,
            b,
            template,
            mode,
            fraction,
            rng: ChaCha8Rng::seed_from_u64(seed),
            full_a: SampleSet::full(a),
            full_b: SampleSet::full(b),
        })
    }

    pub fn evaluate(&mut self, params: &[f64]) -> Result<SymmetricDistanceResult> {
        let t = self.template.with_params(params)?;
        if self.fraction >= 1.0 {
            return symmetric_amd(self.a, self.b, &t, &self.full_a, &self.full_b, self.mode);
        }
        let pa = SampleSet {
            indices: draw(self.a.population(), self.fraction, &mut self.rng)?,
            mode: SamplingMode::Custom,
        };
        let pb = SampleSet {
            indices: draw(self.b.population(), self.fraction, &mut self.rng)?,
            mode: SamplingMode::Custom,
        };
        symmetric_amd(self.a, self.b, &t, &pa, &pb, self.mode)
    }

    pub fn cost(&mut self, params: &[f64]) -> Result<CostValue> {
        self.evaluate(params).map(SymmetricDistanceResult::into_cost)
    }
}

/// Samples of `src` whose lookups in `dst` are smooth under every transform
/// in `transforms`.
///
/// A sample is kept when, for all transforms, its mapped point stays in one
/// interpolation cell, at least `margin` (in index units) from the cell
/// faces, and the 4^D block formed by the cell and its central-difference
/// neighbours lies inside the grid and keeps a physical distance of at least
/// `buffer` from every level edge of `dst`. A level edge is a voxel with an
/// axis neighbour of different quantized level or outside the mask; these
/// are where α-cut boundaries (and so the γ-gated plateaus of the distance
/// transforms) and mask edges sit.
pub fn stable_samples<const D: usize, M: TransformModel<D>>(
    src: &AmdImage<D>,
    dst: &AmdImage<D>,
    transforms: &[M],
    samples: &SampleSet,
    margin: f64,
    buffer: f64,
) -> SampleSet {
    let grid = dst.grid();
    let dims = grid.dims();
    let strides = grid.strides();
    let edges = BinaryMask::from_index_fn(*grid, |i| {
        if !dst.mask.get(i) {
            return true;
        }
        let c = grid.coords(i);
        (0..D).any(|k| {
            let lo = c[k] > 0 && (!dst.mask.get(i - strides[k]) || dst.quantized[i - strides[k]] != dst.quantized[i]);
            let hi = c[k] + 1 < dims[k]
                && (!dst.mask.get(i + strides[k]) || dst.quantized[i + strides[k]] != dst.quantized[i]);
            lo || hi
        })
    });
    let clearance = crate::dt::euclidean_dt(&edges, f64::INFINITY);
    let keep = |&i: &usize| -> bool {
        let x = &src.points[i];
        let mut cell: Option<[usize; D]> = None;
        for t in transforms {
            let u = grid.continuous_index(&t.apply(x));
            let mut c = [0usize; D];
            for k in 0..D {
                let f = u[k].floor();
                if f < 1.0 || f + 2.0 > (dims[k] - 1) as f64 {
                    return false;
                }
                let frac = u[k] - f;
                if frac < margin || frac > 1.0 - margin {
                    return false;
                }
                c[k] = f as usize;
            }
            match cell {
                None => cell = Some(c),
                Some(prev) if prev != c => return false,
                _ => {}
            }
        }
        let Some(c) = cell else { return false };
        (0..4usize.pow(D as u32)).all(|off| {
            let mut v = [0usize; D];
            let mut o = off;
            for k in 0..D {
                v[k] = c[k] + (o % 4) - 1;
                o /= 4;
            }
            let idx = grid.index(&v);
            !edges.get(idx) && clearance.distances()[idx] >= buffer
        })
    };
    SampleSet {
        indices: samples.indices().iter().copied().filter(keep).collect(),
        mode: SamplingMode::Custom,
    }
}
