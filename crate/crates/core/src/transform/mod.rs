//! Rigid and affine transforms acting about an explicit centre:
//! `y = A (x − c) + c + t`.
//!
//! Parameter vectors always end with the `D` translation components.

mod affine;
mod random;
mod rigid;

pub use affine::AffineTransform;
pub use random::{sample_random_transform, TransformClass};
pub use rigid::RigidTransform;

use crate::error::Result;
use crate::linalg::Mat;

/// A parameterised invertible transform the optimizer can drive.
pub trait TransformModel<const D: usize>: Clone + std::fmt::Debug + Send + Sync {
    /// `|T|`.
    fn param_count(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    /// Same model and centre with a new parameter vector.
    fn with_params(&self, params: &[f64]) -> Result<Self>;

    fn center(&self) -> [f64; D];

    fn matrix(&self) -> Mat<D>;

    fn translation(&self) -> [f64; D];

    fn apply(&self, x: &[f64; D]) -> [f64; D] {
        apply_affine(&self.matrix(), &self.translation(), &self.center(), x)
    }

    /// `out[i] += scale · Σ_j (∂y_j/∂T_i) g_j` at the point `x`.
    fn add_param_gradient(&self, x: &[f64; D], g: &[f64; D], scale: f64, out: &mut [f64]);

    /// Rows `∂y/∂T_i` at `x`, one per parameter.
    fn param_jacobian(&self, x: &[f64; D]) -> Vec<[f64; D]> {
        let n = self.param_count();
        let mut rows = vec![[0.0; D]; n];
        for j in 0..D {
            let mut e = [0.0; D];
            e[j] = 1.0;
            let mut col = vec![0.0; n];
            self.add_param_gradient(x, &e, 1.0, &mut col);
            for i in 0..n {
                rows[i][j] = col[i];
            }
        }
        rows
    }

    /// The inverse transform, about the same centre.
    fn inverse(&self) -> Result<Self>;

    /// `M[i][j] = ∂T⁻¹_j / ∂T_i`, where `T⁻¹_j` are the parameters of
    /// [`inverse`](Self::inverse).
    fn inverse_param_jacobian(&self) -> Result<Vec<Vec<f64>>>;

    fn to_affine(&self) -> AffineTransform<D> {
        AffineTransform::new(self.matrix(), self.translation(), self.center())
    }
}

#[inline]
pub(crate) fn apply_affine<const D: usize>(a: &Mat<D>, t: &[f64; D], c: &[f64; D], x: &[f64; D]) -> [f64; D] {
    let mut d = [0.0; D];
    for k in 0..D {
        d[k] = x[k] - c[k];
    }
    let mut y = [0.0; D];
    for i in 0..D {
        let mut acc = 0.0;
        for k in 0..D {
            acc += a[i][k] * d[k];
        }
        y[i] = acc + c[i] + t[i];
    }
    y
}
