//! Tiny dense linear algebra on fixed-size matrices.

pub type Mat<const D: usize> = [[f64; D]; D];

pub fn identity<const D: usize>() -> Mat<D> {
    let mut m = [[0.0; D]; D];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    m
}

#[inline]
pub fn mat_vec<const D: usize>(m: &Mat<D>, v: &[f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for i in 0..D {
        let mut s = 0.0;
        for j in 0..D {
            s += m[i][j] * v[j];
        }
        out[i] = s;
    }
    out
}

pub fn mat_mul<const D: usize>(a: &Mat<D>, b: &Mat<D>) -> Mat<D> {
    let mut out = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            let mut s = 0.0;
            for k in 0..D {
                s += a[i][k] * b[k][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose<const D: usize>(m: &Mat<D>) -> Mat<D> {
    let mut out = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..D {
            out[j][i] = m[i][j];
        }
    }
    out
}

/// Inverse and determinant by Gauss-Jordan elimination with partial pivoting.
/// Returns `None` for the inverse when a pivot vanishes exactly.
pub fn inverse<const D: usize>(m: &Mat<D>) -> (Option<Mat<D>>, f64) {
    let mut a = *m;
    let mut inv = identity::<D>();
    let mut det = 1.0;
    for col in 0..D {
        let pivot = (col..D)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col] == 0.0 {
            return (None, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            inv.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for j in 0..D {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..D {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..D {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    (Some(inv), det)
}

pub fn determinant<const D: usize>(m: &Mat<D>) -> f64 {
    inverse(m).1
}

/// Solves the square system `a x = b` (`a` row-major, `n × n`).
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        for i in col + 1..n {
            let f = a[i * n + col] / a[col * n + col];
            for j in col..n {
                a[i * n + j] -= f * a[col * n + j];
            }
            b[i] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i * n + j] * x[j];
        }
        x[i] = s / a[i * n + i];
    }
    Some(x)
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn distance<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}
