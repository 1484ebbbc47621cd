use super::{apply_affine, TransformModel};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Smallest |det A| accepted as invertible.
pub const SINGULAR_DET: f64 = 1e-12;

/// General affine map with `D² + D` parameters: the row-major entries of `A`
/// followed by `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineTransform<const D: usize> {
    a: Mat<D>,
    t: [f64; D],
    c: [f64; D],
}

impl<const D: usize> AffineTransform<D> {
    pub fn new(a: Mat<D>, t: [f64; D], c: [f64; D]) -> Self {
        Self { a, t, c }
    }

    pub fn identity(c: [f64; D]) -> Self {
        Self::new(linalg::identity(), [0.0; D], c)
    }

    pub fn translation_only(t: [f64; D]) -> Self {
        Self::new(linalg::identity(), t, [0.0; D])
    }

    pub fn determinant(&self) -> f64 {
        linalg::determinant(&self.a)
    }

    /// `self ∘ other`: applies `other` first. The result uses `other`'s centre.
    pub fn compose(&self, other: &AffineTransform<D>) -> AffineTransform<D> {
        let a = linalg::mat_mul(&self.a, &other.a);
        let mut p = [0.0; D];
        for k in 0..D {
            p[k] = other.c[k] + other.t[k];
        }
        let y = apply_affine(&self.a, &self.t, &self.c, &p);
        let mut t = [0.0; D];
        for k in 0..D {
            t[k] = y[k] - other.c[k];
        }
        AffineTransform::new(a, t, other.c)
    }

    /// Equivalent transform expressed about a different centre.
    pub fn recentered(&self, c: [f64; D]) -> AffineTransform<D> {
        let y = self.apply(&c);
        let mut t = [0.0; D];
        for k in 0..D {
            t[k] = y[k] - c[k];
        }
        AffineTransform::new(self.a, t, c)
    }

    fn inverse_matrix(&self) -> Result<Mat<D>> {
        match linalg::inverse(&self.a) {
            (Some(inv), det) if det.abs() >= SINGULAR_DET => Ok(inv),
            (_, det) => Err(Error::SingularTransform { det }),
        }
    }
}

impl<const D: usize> TransformModel<D> for AffineTransform<D> {
    fn param_count(&self) -> usize {
        D * D + D
    }

    fn params(&self) -> Vec<f64> {
        self.a.iter().flatten().chain(self.t.iter()).copied().collect()
    }

    fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != D * D + D {
            return Err(Error::DimensionMismatch(format!(
                "affine transform needs {} parameters, got {}",
                D * D + D,
                params.len()
            )));
        }
        let mut a = [[0.0; D]; D];
        for i in 0..D {
            a[i].copy_from_slice(&params[i * D..(i + 1) * D]);
        }
        let mut t = [0.0; D];
        t.copy_from_slice(&params[D * D..]);
        Ok(Self::new(a, t, self.c))
    }

    fn center(&self) -> [f64; D] {
        self.c
    }

    fn matrix(&self) -> Mat<D> {
        self.a
    }

    fn translation(&self) -> [f64; D] {
        self.t
    }

    #[inline]
    fn apply(&self, x: &[f64; D]) -> [f64; D] {
        apply_affine(&self.a, &self.t, &self.c, x)
    }

    #[inline]
    fn add_param_gradient(&self, x: &[f64; D], g: &[f64; D], scale: f64, out: &mut [f64]) {
        for j in 0..D {
            let sg = scale * g[j];
            for k in 0..D {
                out[j * D + k] += sg * (x[k] - self.c[k]);
            }
            out[D * D + j] += sg;
        }
    }

    fn inverse(&self) -> Result<Self> {
        let inv = self.inverse_matrix()?;
        let it = linalg::mat_vec(&inv, &self.t);
        let mut t = [0.0; D];
        for k in 0..D {
            t[k] = -it[k];
        }
        Ok(Self::new(inv, t, self.c))
    }

    fn inverse_param_jacobian(&self) -> Result<Vec<Vec<f64>>> {
        let b = self.inverse_matrix()?;
        let bt = linalg::mat_vec(&b, &self.t);
        let n = D * D + D;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..D {
            for j in 0..D {
                let row = &mut m[i * D + j];
                for k in 0..D {
                    for l in 0..D {
                        row[k * D + l] = -b[k][i] * b[j][l];
                    }
                    row[D * D + k] = b[k][i] * bt[j];
                }
            }
        }
        for j in 0..D {
            for k in 0..D {
                m[D * D + j][D * D + k] = -b[k][j];
            }
        }
        Ok(m)
    }

    fn to_affine(&self) -> AffineTransform<D> {
        self.clone()
    }
}
