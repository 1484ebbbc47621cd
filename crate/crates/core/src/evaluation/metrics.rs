use crate::error::{Error, Result};
use crate::image::{check_shape, BinaryMask};
use crate::linalg::distance;
use crate::transform::TransformModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// Ordered physical points, optionally labelled odd/even.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSet<const D: usize> {
    points: Vec<[f64; D]>,
    parity: Option<Vec<Parity>>,
}

impl<const D: usize> LandmarkSet<D> {
    pub fn new(points: Vec<[f64; D]>) -> Self {
        Self { points, parity: None }
    }

    pub fn with_parity(points: Vec<[f64; D]>, parity: Vec<Parity>) -> Result<Self> {
        if points.len() != parity.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} parity labels",
                points.len(),
                parity.len()
            )));
        }
        Ok(Self {
            points,
            parity: Some(parity),
        })
    }

    pub fn points(&self) -> &[[f64; D]] {
        &self.points
    }

    pub fn parity(&self) -> Option<&[Parity]> {
        self.parity.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points carrying the given label; empty when unlabelled.
    pub fn select(&self, which: Parity) -> Vec<[f64; D]> {
        match &self.parity {
            Some(p) => self.points.iter().zip(p).filter(|(_, &q)| q == which).map(|(x, _)| *x).collect(),
            None => Vec::new(),
        }
    }
}

/// AE: `mean_i ‖L_R(i) − T(L_F(i))‖`.
pub fn average_error<const D: usize, M: TransformModel<D>>(
    t: &M,
    reference: &[[f64; D]],
    floating: &[[f64; D]],
) -> Result<f64> {
    if reference.len() != floating.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference vs {} floating landmarks",
            reference.len(),
            floating.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::Empty("landmark set".into()));
    }
    let sum: f64 = reference.iter().zip(floating).map(|(r, f)| distance(r, &t.apply(f))).sum();
    Ok(sum / reference.len() as f64)
}

/// AME: mean over `L_R` of the distance to the nearest transformed floating landmark.
pub fn average_minimal_error<const D: usize, M: TransformModel<D>>(
    t: &M,
    reference: &[[f64; D]],
    floating: &[[f64; D]],
) -> Result<f64> {
    if reference.is_empty() || floating.is_empty() {
        return Err(Error::Empty("landmark set".into()));
    }
    let moved: Vec<[f64; D]> = floating.iter().map(|f| t.apply(f)).collect();
    let sum: f64 = reference
        .iter()
        .map(|r| moved.iter().map(|m| distance(r, m)).fold(f64::INFINITY, f64::min))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `½ (AME(odd) + AME(even))`.
pub fn ame_outer<const D: usize, M: TransformModel<D>>(
    t: &M,
    odd_reference: &[[f64; D]],
    odd_floating: &[[f64; D]],
    even_reference: &[[f64; D]],
    even_floating: &[[f64; D]],
) -> Result<f64> {
    let odd = average_minimal_error(t, odd_reference, odd_floating)
        .map_err(|_| Error::Empty("odd landmark class".into()))?;
    let even = average_minimal_error(t, even_reference, even_floating)
        .map_err(|_| Error::Empty("even landmark class".into()))?;
    Ok(0.5 * (odd + even))
}

/// [`ame_outer`] on two parity-labelled sets.
pub fn ame_outer_sets<const D: usize, M: TransformModel<D>>(
    t: &M,
    reference: &LandmarkSet<D>,
    floating: &LandmarkSet<D>,
) -> Result<f64> {
    ame_outer(
        t,
        &reference.select(Parity::Odd),
        &floating.select(Parity::Odd),
        &reference.select(Parity::Even),
        &floating.select(Parity::Even),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessRates {
    pub sr: f64,
    pub sym_sr: f64,
}

/// SR counts trials with `AE_fwd ≤ threshold`; SymSR needs both directions.
pub fn success_metrics(trials: &[(f64, f64)], threshold: f64) -> Result<SuccessRates> {
    if trials.is_empty() {
        return Err(Error::Empty("trial list".into()));
    }
    let n = trials.len() as f64;
    let fwd = trials.iter().filter(|(f, _)| *f <= threshold).count();
    let both = trials.iter().filter(|(f, r)| *f <= threshold && *r <= threshold).count();
    Ok(SuccessRates {
        sr: fwd as f64 / n,
        sym_sr: both as f64 / n,
    })
}

/// `mean_x ‖T_BA(T_AB(x)) − x‖`.
pub fn inverse_consistency_error<const D: usize, M: TransformModel<D>, N: TransformModel<D>>(
    t_ab: &M,
    t_ba: &N,
    points: &[[f64; D]],
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("point set".into()));
    }
    let sum: f64 = points.iter().map(|x| distance(&t_ba.apply(&t_ab.apply(x)), x)).sum();
    Ok(sum / points.len() as f64)
}

/// `|R1 ∩ R2| / |R1 ∪ R2|`, and 1 when both masks are empty.
pub fn jaccard<const D: usize>(r1: &BinaryMask<D>, r2: &BinaryMask<D>) -> Result<f64> {
    check_shape(r1.grid(), r2.grid())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &b) in r1.bits().iter().zip(r2.bits()) {
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Fraction of errors `≤ t` for each threshold `t`.
pub fn cumulative_histogram(errors: &[f64], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let n = errors.len().max(1) as f64;
    thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e <= t).count() as f64 / n))
        .collect()
}
