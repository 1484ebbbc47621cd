use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RigidTransform;
use super::rigid::angle_count;
use crate::error::Result;
use crate::grid::Grid;

/// Magnitude classes for synthetic rigid perturbations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformClass {
    Zero,
    Small,
    Medium,
    Large,
}

impl TransformClass {
    /// `(lower, upper)` bound, in percent of image size for translations and
    /// degrees for rotations. At least one parameter must exceed `lower`.
    pub fn bounds(self, dim: usize) -> (f64, f64) {
        match (self, dim) {
            (TransformClass::Zero, _) => (0.0, 0.0),
            (TransformClass::Small, _) => (0.0, 10.0),
            (TransformClass::Medium, 3) => (10.0, 15.0),
            (TransformClass::Large, 3) => (15.0, 20.0),
            (TransformClass::Medium, _) => (10.0, 20.0),
            (TransformClass::Large, _) => (20.0, 30.0),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Some(Self::Zero),
            "small" => Some(Self::Small),
            "medium" => Some(Self::Medium),
            "large" => Some(Self::Large),
            _ => None,
        }
    }
}

/// Draws a rigid transform about the grid centre with every angle (degrees)
/// and every translation (percent of the physical image size along its axis)
/// uniform in `[−upper, upper]`, redrawing until the largest of them exceeds
/// the class's lower bound.
pub fn sample_random_transform<const D: usize>(
    class: TransformClass,
    grid: &Grid<D>,
    seed: u64,
) -> Result<RigidTransform<D>> {
    let na = angle_count::<D>()?;
    let (lo, hi) = class.bounds(D);
    if hi == 0.0 {
        return RigidTransform::identity(grid.center());
    }
    let size = grid.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let deg: Vec<f64> = (0..na).map(|_| rng.random_range(-hi..=hi)).collect();
        let pct: Vec<f64> = (0..D).map(|_| rng.random_range(-hi..=hi)).collect();
        let biggest = deg.iter().chain(&pct).fold(0.0f64, |m, v| m.max(v.abs()));
        if biggest <= lo {
            continue;
        }
        let angles: Vec<f64> = deg.iter().map(|d| d.to_radians()).collect();
        let mut t = [0.0; D];
        for k in 0..D {
            t[k] = pct[k] / 100.0 * size[k];
        }
        return RigidTransform::new(&angles, t, grid.center());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_centered() {
        let g = Grid::unit([64, 64]).unwrap();
        let a = sample_random_transform(TransformClass::Small, &g, 11).unwrap();
        let b = sample_random_transform(TransformClass::Small, &g, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(super::super::TransformModel::center(&a), g.center());
    }
}
