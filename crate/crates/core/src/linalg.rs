//! Small dense routines: Cholesky with pivot reporting, cyclic Jacobi for
//! symmetric eigenproblems, and triangular solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetry check with a relative tolerance on the largest entry.
pub fn check_symmetric(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Argument(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.amax().max(1.0);
    for i in 0..a.nrows() {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol * scale {
                return Err(Error::Argument(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    a[(i, j)],
                    a[(j, i)]
                )));
            }
        }
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Lower Cholesky factor. Fails with the first non-positive pivot.
pub fn cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`, in place.
pub fn solve_lower_in_place(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L^T y = b` for lower-triangular `L`, in place.
pub fn solve_upper_transposed_in_place(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// `L^-1 B` column by column.
pub fn solve_lower_matrix(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = b.clone();
    for mut col in out.column_iter_mut() {
        solve_lower_in_place(l, col.as_mut_slice());
    }
    out
}

/// Inverse of an SPD matrix from its Cholesky factor, symmetrized.
pub fn spd_inverse_from_cholesky(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::identity(n, n);
    for mut col in inv.column_iter_mut() {
        let c = col.as_mut_slice();
        solve_lower_in_place(l, c);
        solve_upper_transposed_in_place(l, c);
    }
    symmetrize(&inv)
}

pub fn log_det_from_cholesky(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` pairs with `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls
/// below `1e-12` times the matrix norm.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_symmetric(a, 1e-10)?;
    let n = a.nrows();
    let mut m = symmetrize(a);
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = m.norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off.sqrt() <= 1e-12 * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// `max |A^T A - I|`.
pub fn orthogonality_defect(u: &DMatrix<f64>) -> f64 {
    let n = u.ncols();
    let g = u.transpose() * u;
    (g - DMatrix::<f64>::identity(n, n)).amax()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn to_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reports_failing_pivot() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        match cholesky(&a) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jacobi_diagonal_and_reconstruction() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let e = jacobi_eigen(&a).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let rec = &e.vectors
            * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()))
            * e.vectors.transpose();
        assert!((rec - a).amax() < 1e-12);
        assert!(orthogonality_defect(&e.vectors) < 1e-13);
    }

    #[test]
    fn spd_inverse_matches_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let l = cholesky(&a).unwrap();
        let inv = spd_inverse_from_cholesky(&l);
        assert!((&a * inv - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
        assert!((log_det_from_cholesky(&l) - (2.0f64 - 0.09).ln()).abs() < 1e-14);
    }
}
