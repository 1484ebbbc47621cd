//! Coarse-to-fine symmetric registration and the multi-start protocol.

use std::time::{Duration, Instant};

use crate::amd::{AmdCost, AmdImage};
use crate::baseline;
use crate::error::{Error, Result};
use crate::image::{normalize_percentile, AlphaLevels, BinaryMask, FuzzyImage, WeightMap};
use crate::optimizer::{minimize, CostValue, IterationTrace, OptimizerConfig, StopReason};
use crate::pyramid::{build_pyramid, PyramidLevel};
use crate::stack::Interpolation;
use crate::transform::{AffineTransform, RigidTransform, TransformModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Measure {
    #[default]
    AlphaAmd,
    Ssd,
    Pcc,
    Mi,
}

impl Measure {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha-amd" | "alpha_amd" | "amd" => Some(Self::AlphaAmd),
            "ssd" => Some(Self::Ssd),
            "pcc" => Some(Self::Pcc),
            "mi" => Some(Self::Mi),
            _ => None,
        }
    }
}

/// Step length and iteration overrides for one pyramid level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevelOverride {
    pub step_length: Option<f64>,
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationConfig {
    /// Number of α-levels `ℓ`.
    pub alpha_levels: usize,
    /// Distance saturation; `None` means a quarter of the larger image diagonal.
    pub d_max: Option<f64>,
    /// Normalization percentile `ρ`; `None` leaves intensities untouched.
    pub normalization: Option<f64>,
    pub factors: Vec<usize>,
    /// Smoothing per level, in voxels of the full-resolution grid.
    pub sigmas: Vec<f64>,
    pub optimizer: OptimizerConfig,
    /// Per-level overrides, coarse to fine. Missing entries use `optimizer`.
    pub level_overrides: Vec<LevelOverride>,
    pub sampling_fraction: f64,
    pub interpolation: Interpolation,
    pub bidirectional: bool,
    pub measure: Measure,
    pub mi_bins: usize,
    pub seed: u64,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            alpha_levels: 7,
            d_max: None,
            normalization: Some(0.05),
            factors: vec![4, 2, 1],
            sigmas: vec![5.0, 3.0, 0.0],
            optimizer: OptimizerConfig::default(),
            level_overrides: Vec::new(),
            sampling_fraction: 1.0,
            interpolation: Interpolation::Linear,
            bidirectional: true,
            measure: Measure::AlphaAmd,
            mi_bins: 32,
            seed: 0,
        }
    }
}

impl RegistrationConfig {
    /// Single full-resolution level without smoothing.
    pub fn without_pyramid(mut self) -> Self {
        self.factors = vec![1];
        self.sigmas = vec![0.0];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.alpha_levels == 0 {
            return bad("alpha_levels must be positive".into());
        }
        if let Some(d) = self.d_max {
            if !(d > 0.0) {
                return bad(format!("d_max must be positive, got {d}"));
            }
        }
        if let Some(r) = self.normalization {
            if !(0.0..0.5).contains(&r) {
                return bad(format!("normalization percentile must lie in [0, 0.5), got {r}"));
            }
        }
        if self.factors.is_empty() || self.factors.len() != self.sigmas.len() {
            return bad("pyramid factors and sigmas need equal, non-zero length".into());
        }
        if !(self.sampling_fraction > 0.0 && self.sampling_fraction <= 1.0) {
            return bad(format!("sampling fraction must lie in (0, 1], got {}", self.sampling_fraction));
        }
        if self.mi_bins < 2 {
            return bad("mi_bins must be at least 2".into());
        }
        self.optimizer.validate()
    }

    fn level_optimizer(&self, level: usize) -> OptimizerConfig {
        let mut cfg = self.optimizer.clone();
        let last = level + 1 == self.factors.len();
        if let Some(o) = self.level_overrides.get(level).filter(|_| !last) {
            if let Some(s) = o.step_length {
                cfg.step_length = s;
            }
            if let Some(n) = o.max_iterations {
                cfg.max_iterations = n;
            }
        }
        cfg
    }
}

/// An image with its mask and weights.
#[derive(Clone, Debug)]
pub struct RegistrationImage<const D: usize> {
    pub image: FuzzyImage<D>,
    pub mask: BinaryMask<D>,
    pub weights: WeightMap<D>,
}

impl<const D: usize> RegistrationImage<D> {
    /// Full mask and unit weights.
    pub fn new(image: FuzzyImage<D>) -> Self {
        let grid = *image.grid();
        Self {
            image,
            mask: BinaryMask::full(grid),
            weights: WeightMap::ones(grid),
        }
    }

    pub fn with_mask(mut self, mask: BinaryMask<D>) -> Result<Self> {
        crate::image::check_shape(self.image.grid(), mask.grid())?;
        self.mask = mask;
        Ok(self)
    }

    pub fn with_weights(mut self, weights: WeightMap<D>) -> Result<Self> {
        crate::image::check_shape(self.image.grid(), weights.grid())?;
        self.weights = weights;
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub factor: usize,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub trace: IterationTrace,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult<M> {
    pub transform: M,
    /// Cost at `transform` on the finest level.
    pub distance: f64,
    pub levels: Vec<LevelResult>,
    pub preprocessing: Duration,
    pub optimization: Duration,
    pub iterations: usize,
}

impl<M> RegistrationResult<M> {
    pub fn mean_iteration_time(&self) -> Duration {
        if self.iterations == 0 {
            Duration::ZERO
        } else {
            self.optimization / self.iterations as u32
        }
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.levels.last().map(|l| l.trace.reason)
    }
}

fn prepare<const D: usize>(img: &RegistrationImage<D>, cfg: &RegistrationConfig) -> Result<Vec<PyramidLevel<D>>> {
    let image = match cfg.normalization {
        Some(rho) => normalize_percentile(&img.image, rho)?.image,
        None => img.image.clone(),
    };
    build_pyramid(&image, &img.mask, &img.weights, &cfg.factors, &cfg.sigmas)
}

fn baseline_cost<const D: usize, M: TransformModel<D>>(
    a: &PyramidLevel<D>,
    b: &PyramidLevel<D>,
    template: &M,
    cfg: &RegistrationConfig,
    params: &[f64],
) -> Result<CostValue> {
    let t = template.with_params(params)?;
    let (v, sign) = match cfg.measure {
        Measure::Ssd => (baseline::ssd(&a.image, &b.image, &t, &b.mask), 1.0),
        Measure::Pcc => (baseline::pcc(&a.image, &b.image, &t, &b.mask), -1.0),
        Measure::Mi => (baseline::mi(&a.image, &b.image, &t, &b.mask, cfg.mi_bins), -1.0),
        Measure::AlphaAmd => unreachable!("handled by the distance cost"),
    };
    Ok(CostValue {
        value: sign * v.value,
        grad: v.grad.iter().map(|g| sign * g).collect(),
        non_overlap: v.failed,
    })
}

/// Registers `a` to `b`: the returned transform maps points of `a` onto
/// corresponding points of `b`. Works coarse to fine over the configured
/// pyramid, rebuilding stacks per level and passing the estimate on.
pub fn register<const D: usize, M: TransformModel<D>>(
    a: &RegistrationImage<D>,
    b: &RegistrationImage<D>,
    t0: &M,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult<M>> {
    cfg.validate()?;
    let started = Instant::now();
    let levels = AlphaLevels::equally_spaced(cfg.alpha_levels)?;
    let d_max = cfg
        .d_max
        .unwrap_or_else(|| 0.25 * a.image.grid().diagonal().max(b.image.grid().diagonal()));
    let (pa, pb) = (prepare(a, cfg)?, prepare(b, cfg)?);
    let mut preprocessing = started.elapsed();
    let mut optimization = Duration::ZERO;
    let mut iterations = 0;
    let mut t = t0.clone();
    let mut results = Vec::with_capacity(pa.len());
    let mut distance = f64::NAN;

    for (k, (la, lb)) in pa.iter().zip(&pb).enumerate() {
        let opt = cfg.level_optimizer(k);
        let seed = cfg.seed.wrapping_add(k as u64);
        let template = t.clone();
        let prep = Instant::now();
        let outcome = if cfg.measure == Measure::AlphaAmd {
            let (ia, ib) = rayon::join(
                || AmdImage::new(&la.image, &la.mask, &la.weights, &levels, d_max, cfg.bidirectional),
                || AmdImage::new(&lb.image, &lb.mask, &lb.weights, &levels, d_max, cfg.bidirectional),
            );
            let (ia, ib) = (ia?, ib?);
            preprocessing += prep.elapsed();
            let mut cost = AmdCost::new(&ia, &ib, template.clone(), cfg.interpolation, cfg.sampling_fraction, seed)?;
            let run = Instant::now();
            let r = minimize(|p: &[f64]| cost.cost(p), &t.params(), &opt)?;
            optimization += run.elapsed();
            r
        } else {
            preprocessing += prep.elapsed();
            let run = Instant::now();
            let r = minimize(|p: &[f64]| baseline_cost(la, lb, &template, cfg, p), &t.params(), &opt)?;
            optimization += run.elapsed();
            r
        };
        iterations += outcome.trace.records.len();
        let Some(initial) = outcome.trace.records.first().map(|r| r.distance) else {
            return Err(Error::NonOverlap(format!(
                "no overlap at the start of pyramid level {k} (factor {}); try a coarser pyramid or another initial transform",
                cfg.factors[k]
            )));
        };
        let (params, value) = match outcome.trace.reason {
            StopReason::NonOverlap | StopReason::NonFinite => (outcome.best_params.clone(), outcome.best_value),
            _ => (outcome.params.clone(), outcome.value),
        };
        t = template.with_params(&params)?;
        distance = value.unwrap_or(f64::NAN);
        results.push(LevelResult {
            factor: cfg.factors[k],
            initial_distance: initial,
            final_distance: distance,
            trace: outcome.trace,
        });
    }
    Ok(RegistrationResult {
        transform: t,
        distance,
        levels: results,
        preprocessing,
        optimization,
        iterations,
    })
}

/// Registers `a → b` from `t0_ab` and `b → a` from `t0_ba` with the same
/// configuration.
pub fn register_symmetric_pair<const D: usize, M: TransformModel<D>>(
    a: &RegistrationImage<D>,
    b: &RegistrationImage<D>,
    t0_ab: &M,
    t0_ba: &M,
    cfg: &RegistrationConfig,
) -> Result<(RegistrationResult<M>, RegistrationResult<M>)> {
    Ok((register(a, b, t0_ab, cfg)?, register(b, a, t0_ba, cfg)?))
}

#[derive(Clone, Debug)]
pub struct MultiStartResult<const D: usize> {
    pub affine: RegistrationResult<AffineTransform<D>>,
    /// Rigid candidates in start order; `None` where the start had no overlap.
    pub rigid: Vec<Option<RegistrationResult<RigidTransform<D>>>>,
    pub best_start: usize,
}

/// Rigid registration from every start without a pyramid, then affine
/// registration from the candidate with the lowest final distance.
pub fn multi_start_rigid_then_affine<const D: usize>(
    a: &RegistrationImage<D>,
    b: &RegistrationImage<D>,
    starts: &[RigidTransform<D>],
    cfg_rigid: &RegistrationConfig,
    cfg_affine: &RegistrationConfig,
) -> Result<MultiStartResult<D>> {
    if starts.is_empty() {
        return Err(Error::InvalidParameter("need at least one start".into()));
    }
    let cfg_rigid = cfg_rigid.clone().without_pyramid();
    let cfg_affine = cfg_affine.clone().without_pyramid();
    let mut rigid = Vec::with_capacity(starts.len());
    for s in starts {
        match register(a, b, s, &cfg_rigid) {
            Ok(r) => rigid.push(Some(r)),
            Err(Error::NonOverlap(_)) => rigid.push(None),
            Err(e) => return Err(e),
        }
    }
    let best_start = rigid
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().filter(|r| r.distance.is_finite()).map(|r| (i, r.distance)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NonOverlap("no start overlapped the reference".into()))?;
    let seed = rigid[best_start].as_ref().expect("selected").transform.to_affine();
    let affine = register(a, b, &seed, &cfg_affine)?;
    Ok(MultiStartResult {
        affine,
        rigid,
        best_start,
    })
}

/// `count` rigid starts about `center` with angles `2πk/count` (about the
/// z axis in 3-D) and no translation.
pub fn rotation_starts<const D: usize>(center: [f64; D], count: usize) -> Result<Vec<RigidTransform<D>>> {
    (0..count)
        .map(|k| {
            let th = std::f64::consts::TAU * k as f64 / count as f64;
            let angles = if D == 2 { vec![th] } else { vec![0.0, 0.0, th] };
            RigidTransform::new(&angles, [0.0; D], center)
        })
        .collect()
}
