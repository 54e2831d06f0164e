use super::matrix::{dot, Matrix};
use super::NumericsError;

/// Symmetry tolerance, scaled by `max(1, max|m_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// A Cholesky pivot must exceed this fraction of its original diagonal entry.
pub const PIVOT_TOL: f64 = 1e-12;
/// Jacobi stops once the off-diagonal norm falls below this fraction of `‖M‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

fn check_symmetric(m: &Matrix) -> Result<(), NumericsError> {
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * m.max_abs().max(1.0) {
        return Err(NumericsError::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    fn factor(a: &Matrix) -> Result<Self, NumericsError> {
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let diag = a[(j, j)];
            let d = diag - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
            let relative = if diag > 0.0 { d / diag } else { d };
            if diag <= 0.0 || !(relative > PIVOT_TOL) {
                return Err(NumericsError::SingularMatrix {
                    index: j,
                    relative_pivot: relative,
                });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let l = &self.l;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - (0..i).map(|k| l[(i, k)] * y[k]).sum::<f64>();
            y[i] = s / l[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s = y[i] - ((i + 1)..n).map(|k| l[(k, i)] * x[k]).sum::<f64>();
            x[i] = s / l[(i, i)];
        }
        x
    }
}

/// Solves `A·x = b` for symmetric positive-definite `A` by Cholesky
/// factorization followed by one step of iterative refinement.
///
/// Fails with [`NumericsError::SingularMatrix`] when a pivot is not larger
/// than [`PIVOT_TOL`] relative to its diagonal entry, which covers both
/// rank-deficient and indefinite inputs.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.rows() != b.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    check_symmetric(a)?;
    let chol = Cholesky::factor(a)?;
    let mut x = chol.solve(b);
    let residual: Vec<f64> = a
        .row_iter()
        .zip(b)
        .map(|(row, bi)| bi - dot(row, &x))
        .collect();
    let correction = chol.solve(&residual);
    for (xi, ci) in x.iter_mut().zip(correction) {
        *xi += ci;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::SingularMatrix {
            index: 0,
            relative_pivot: f64::NAN,
        });
    }
    Ok(x)
}

/// Solves a general square system `A·x = b` by LU factorization with
/// partial pivoting. A pivot below [`PIVOT_TOL`] times the largest entry of
/// `A` is reported as [`NumericsError::SingularMatrix`].
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if !a.is_square() {
        return Err(NumericsError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n != b.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    let scale = a.max_abs();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .unwrap_or(col);
        let pivot = m[(p, col)];
        let relative = if scale > 0.0 { pivot.abs() / scale } else { 0.0 };
        if !(relative > PIVOT_TOL) {
            return Err(NumericsError::SingularMatrix {
                index: col,
                relative_pivot: relative,
            });
        }
        if p != col {
            for k in 0..n {
                let t = m[(col, k)];
                m[(col, k)] = m[(p, k)];
                m[(p, k)] = t;
            }
            x.swap(col, p);
        }
        for r in (col + 1)..n {
            let f = m[(r, col)] / pivot;
            if f != 0.0 {
                for k in col..n {
                    m[(r, k)] -= f * m[(col, k)];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let s = x[r] - ((r + 1)..n).map(|k| m[(r, k)] * x[k]).sum::<f64>();
        x[r] = s / m[(r, r)];
    }
    Ok(x)
}

/// Eigenvalues (descending) and matching unit eigenvectors of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    /// `V·diag(λ)·Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let mut m = Matrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += lambda * v[i] * v[j];
                }
            }
        }
        m
    }
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is non-negative.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eigh_sym(m: &Matrix) -> Result<EigenDecomposition, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    check_symmetric(m)?;
    let n = m.rows();
    // symmetrize so rotations act on an exactly symmetric matrix
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOL * a.frobenius_norm();

    let off_norm = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += a[(i, j)] * a[(i, j)];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericsError::NoConvergence {
                iterations: JACOBI_MAX_SWEEPS,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, &mut v, p, q, c, s);
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let mut col = v.column(i);
            canonical_sign(&mut col);
            col
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Applies the Jacobi rotation `J(p, q, c, s)` as `A ← JᵀAJ`, `V ← VJ`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn solve_identity() {
        let x = solve_spd(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal() {
        let x = solve_spd(&m(&[&[2.0, 0.0], &[0.0, 4.0]]), &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn solve_rank_deficient_is_singular() {
        let err = solve_spd(&m(&[&[1.0, 1.0], &[1.0, 1.0]]), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, NumericsError::SingularMatrix { index: 1, .. }));
    }

    #[test]
    fn solve_indefinite_is_singular() {
        let err = solve_spd(&m(&[&[1.0, 2.0], &[2.0, 1.0]]), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, NumericsError::SingularMatrix { .. }));
    }

    #[test]
    fn solve_rejects_asymmetric() {
        let err = solve_spd(&m(&[&[2.0, 1.0], &[0.0, 2.0]]), &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, NumericsError::NotSymmetric { .. }));
    }

    #[test]
    fn eigen_identity() {
        let e = eigh_sym(&Matrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn eigen_diagonal() {
        let e = eigh_sym(&m(&[&[2.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 1.0]);
        assert_eq!(e.eigenvectors, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn eigen_all_ones() {
        let e = eigh_sym(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!((e.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!(e.eigenvalues[1].abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.eigenvectors[0][0] - h).abs() < 1e-12);
        assert!((e.eigenvectors[0][1] - h).abs() < 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        assert!(matches!(
            eigh_sym(&m(&[&[1.0, 0.5], &[0.0, 1.0]])),
            Err(NumericsError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn sign_convention_prefers_first_on_ties() {
        let mut v = vec![-0.5, 0.5];
        canonical_sign(&mut v);
        assert_eq!(v, vec![0.5, -0.5]);
        let mut w = vec![0.1, -0.9];
        canonical_sign(&mut w);
        assert_eq!(w, vec![-0.1, 0.9]);
    }

    #[test]
    fn reconstruction_matches_input() {
        let a = m(&[&[4.0, 1.0, -2.0], &[1.0, 3.0, 0.5], &[-2.0, 0.5, 1.0]]);
        let e = eigh_sym(&a).unwrap();
        let r = e.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[(i, j)] - a[(i, j)]).abs() < 1e-10);
            }
        }
        assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
