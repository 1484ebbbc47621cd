use super::{apply_affine, AffineTransform, TransformModel};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Rotation plus translation. 2-D uses one angle `θ`; 3-D uses intrinsic
/// Z-Y-X Euler angles `[a_x, a_y, a_z]` with `R = R_z(a_z) R_y(a_y) R_x(a_x)`.
/// Parameters are the angles (radians) followed by `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidTransform<const D: usize> {
    angles: Vec<f64>,
    t: [f64; D],
    c: [f64; D],
    r: Mat<D>,
    dr: Vec<Mat<D>>,
}

type M3 = [[f64; 3]; 3];

fn mul3(a: &M3, b: &M3) -> M3 {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn rot_x(a: f64, deriv: bool) -> M3 {
    let (s, c) = a.sin_cos();
    if deriv {
        [[0.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]]
    } else {
        [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    }
}

fn rot_y(a: f64, deriv: bool) -> M3 {
    let (s, c) = a.sin_cos();
    if deriv {
        [[-s, 0.0, c], [0.0, 0.0, 0.0], [-c, 0.0, -s]]
    } else {
        [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
    }
}

fn rot_z(a: f64, deriv: bool) -> M3 {
    let (s, c) = a.sin_cos();
    if deriv {
        [[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]]
    } else {
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }
}

fn euler3(angles: &[f64], wrt: Option<usize>) -> M3 {
    let x = rot_x(angles[0], wrt == Some(0));
    let y = rot_y(angles[1], wrt == Some(1));
    let z = rot_z(angles[2], wrt == Some(2));
    mul3(&z, &mul3(&y, &x))
}

fn to_mat<const D: usize>(rows: &[Vec<f64>]) -> Mat<D> {
    let mut m = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            m[i][j] = rows[i][j];
        }
    }
    m
}

fn rows_of(m: &M3) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// Number of rotation parameters for dimension `D`.
pub(crate) fn angle_count<const D: usize>() -> Result<usize> {
    match D {
        2 => Ok(1),
        3 => Ok(3),
        _ => Err(Error::InvalidParameter(format!("rigid transforms need D = 2 or 3, got {D}"))),
    }
}

/// Rotation matrix and its derivatives with respect to each angle.
fn rotation<const D: usize>(angles: &[f64]) -> (Mat<D>, Vec<Mat<D>>) {
    if D == 2 {
        let (s, c) = angles[0].sin_cos();
        let r = to_mat(&[vec![c, -s], vec![s, c]]);
        let dr = to_mat(&[vec![-s, -c], vec![c, -s]]);
        (r, vec![dr])
    } else {
        let r = to_mat(&rows_of(&euler3(angles, None)));
        let dr = (0..3).map(|k| to_mat(&rows_of(&euler3(angles, Some(k))))).collect();
        (r, dr)
    }
}

fn angles_of<const D: usize>(r: &Mat<D>) -> Vec<f64> {
    if D == 2 {
        vec![r[1][0].atan2(r[0][0])]
    } else {
        let b = (-r[2][0]).clamp(-1.0, 1.0).asin();
        let a = r[2][1].atan2(r[2][2]);
        let c = r[1][0].atan2(r[0][0]);
        vec![a, b, c]
    }
}

impl<const D: usize> RigidTransform<D> {
    pub fn new(angles: &[f64], t: [f64; D], c: [f64; D]) -> Result<Self> {
        let na = angle_count::<D>()?;
        if angles.len() != na {
            return Err(Error::DimensionMismatch(format!(
                "{D}-D rigid transform needs {na} angles, got {}",
                angles.len()
            )));
        }
        let (r, dr) = rotation::<D>(angles);
        Ok(Self {
            angles: angles.to_vec(),
            t,
            c,
            r,
            dr,
        })
    }

    pub fn identity(c: [f64; D]) -> Result<Self> {
        Self::new(&vec![0.0; angle_count::<D>()?], [0.0; D], c)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Recovers rigid parameters from an affine map whose matrix is a proper
    /// rotation (within `1e-9`).
    pub fn from_affine(t: &AffineTransform<D>) -> Result<Self> {
        angle_count::<D>()?;
        let a = t.matrix();
        let ata = linalg::mat_mul(&linalg::transpose(&a), &a);
        let id = linalg::identity::<D>();
        let off = (0..D).flat_map(|i| (0..D).map(move |j| (i, j))).map(|(i, j)| (ata[i][j] - id[i][j]).abs());
        if off.fold(0.0, f64::max) > 1e-9 || linalg::determinant(&a) < 0.0 {
            return Err(Error::InvalidParameter("matrix is not a proper rotation".into()));
        }
        Self::new(&angles_of(&a), t.translation(), t.center())
    }
}

impl<const D: usize> TransformModel<D> for RigidTransform<D> {
    fn param_count(&self) -> usize {
        self.angles.len() + D
    }

    fn params(&self) -> Vec<f64> {
        self.angles.iter().chain(self.t.iter()).copied().collect()
    }

    fn with_params(&self, params: &[f64]) -> Result<Self> {
        let na = self.angles.len();
        if params.len() != na + D {
            return Err(Error::DimensionMismatch(format!(
                "rigid transform needs {} parameters, got {}",
                na + D,
                params.len()
            )));
        }
        let mut t = [0.0; D];
        t.copy_from_slice(&params[na..]);
        Self::new(&params[..na], t, self.c)
    }

    fn center(&self) -> [f64; D] {
        self.c
    }

    fn matrix(&self) -> Mat<D> {
        self.r
    }

    fn translation(&self) -> [f64; D] {
        self.t
    }

    #[inline]
    fn apply(&self, x: &[f64; D]) -> [f64; D] {
        apply_affine(&self.r, &self.t, &self.c, x)
    }

    #[inline]
    fn add_param_gradient(&self, x: &[f64; D], g: &[f64; D], scale: f64, out: &mut [f64]) {
        let mut d = [0.0; D];
        for k in 0..D {
            d[k] = x[k] - self.c[k];
        }
        let na = self.angles.len();
        for (i, m) in self.dr.iter().enumerate() {
            let mut acc = 0.0;
            for j in 0..D {
                let mut row = 0.0;
                for k in 0..D {
                    row += m[j][k] * d[k];
                }
                acc += g[j] * row;
            }
            out[i] += scale * acc;
        }
        for j in 0..D {
            out[na + j] += scale * g[j];
        }
    }

    fn inverse(&self) -> Result<Self> {
        let rt = linalg::transpose(&self.r);
        let v = linalg::mat_vec(&rt, &self.t);
        let mut t = [0.0; D];
        for k in 0..D {
            t[k] = -v[k];
        }
        let angles = if D == 2 { vec![-self.angles[0]] } else { angles_of(&rt) };
        Self::new(&angles, t, self.c)
    }

    fn inverse_param_jacobian(&self) -> Result<Vec<Vec<f64>>> {
        let na = self.angles.len();
        let n = na + D;
        let inv = self.inverse()?;
        let mut m = vec![vec![0.0; n]; n];
        for (i, dri) in self.dr.iter().enumerate() {
            let drt = linalg::transpose(dri);
            // d(Rᵀ)/dφ_i expressed in the inverse's angle coordinates.
            let dpsi = if D == 2 {
                vec![-1.0]
            } else {
                let mut jtj = vec![0.0; na * na];
                let mut jtb = vec![0.0; na];
                for p in 0..D {
                    for q in 0..D {
                        for a in 0..na {
                            jtb[a] += inv.dr[a][p][q] * drt[p][q];
                            for b in 0..na {
                                jtj[a * na + b] += inv.dr[a][p][q] * inv.dr[b][p][q];
                            }
                        }
                    }
                }
                linalg::solve_dense(jtj, jtb, na).ok_or_else(|| {
                    Error::InvalidParameter("Euler angles are at gimbal lock".into())
                })?
            };
            m[i][..na].copy_from_slice(&dpsi);
            let v = linalg::mat_vec(&drt, &self.t);
            for k in 0..D {
                m[i][na + k] = -v[k];
            }
        }
        for j in 0..D {
            for k in 0..D {
                m[na + j][na + k] = -self.r[j][k];
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_and_derivative() {
        let r = RigidTransform::<2>::new(&[std::f64::consts::FRAC_PI_2], [0.0; 2], [0.0; 2]).unwrap();
        let y = r.apply(&[1.0, 0.0]);
        assert!(y[0].abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
        let id = RigidTransform::<2>::identity([0.0; 2]).unwrap();
        assert_eq!(id.param_jacobian(&[1.0, 0.0])[0], [0.0, 1.0]);
    }

    #[test]
    fn euler_round_trip() {
        let r = RigidTransform::<3>::new(&[0.3, -0.2, 0.7], [1.0, 2.0, 3.0], [0.5; 3]).unwrap();
        let back = RigidTransform::from_affine(&r.to_affine()).unwrap();
        for (a, b) in r.angles().iter().zip(back.angles()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_other_dimensions() {
        assert!(RigidTransform::<4>::identity([0.0; 4]).is_err());
        assert!(RigidTransform::<3>::new(&[0.0], [0.0; 3], [0.0; 3]).is_err());
    }
}
