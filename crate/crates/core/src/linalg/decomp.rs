use alloc::vec::Vec;

use super::{CMatrix, LinalgError, C64, HERMITIAN_RTOL, SINGULAR_RTOL};

/// LU factorization with partial pivoting, `P·A = L·U`.
///
/// Pivot search takes the largest magnitude in the column; ties go to the
/// lowest row index so factorizations are reproducible.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: (a.rows(), a.rows()),
                got: a.shape(),
            });
        }
        let n = a.rows();
        let threshold = SINGULAR_RTOL * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;

        for col in 0..n {
            let mut pivot_row = col;
            let mut pivot_mag = lu[(col, col)].norm();
            for r in col + 1..n {
                let mag = lu[(r, col)].norm();
                if mag > pivot_mag {
                    pivot_row = r;
                    pivot_mag = mag;
                }
            }
            if !(pivot_mag >= threshold) || pivot_mag == 0.0 {
                return Err(LinalgError::SingularMatrix {
                    pivot: pivot_mag,
                    threshold,
                });
            }
            if pivot_row != col {
                perm.swap(pivot_row, col);
                swaps += 1;
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(pivot_row, j)];
                    lu[(pivot_row, j)] = tmp;
                }
            }
            let inv_pivot = lu[(col, col)].inv();
            for r in col + 1..n {
                let factor = lu[(r, col)] * inv_pivot;
                lu[(r, col)] = factor;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in col + 1..n {
                    let u = lu[(col, j)];
                    lu[(r, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A·X = B` for every column of `B`.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix, LinalgError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, b.cols()),
                got: b.shape(),
            });
        }
        let mut x = CMatrix::from_fn(n, b.cols(), |i, j| b[(self.perm[i], j)]);
        for j in 0..b.cols() {
            for i in 0..n {
                let mut acc = x[(i, j)];
                for k in 0..i {
                    acc -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, j)];
                for k in i + 1..n {
                    acc -= self.lu[(i, k)] * x[(k, j)];
                }
                x[(i, j)] = acc / self.lu[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        Ok(self.solve(&CMatrix::from_column(b))?.col(0))
    }

    pub fn det(&self) -> C64 {
        let mut d: C64 = (0..self.dim()).map(|i| self.lu[(i, i)]).product();
        if self.swaps % 2 == 1 {
            d = -d;
        }
        d
    }

    /// `log |det A|`, summed from the pivots.
    pub fn logabsdet(&self) -> f64 {
        (0..self.dim()).map(|i| libm::log(self.lu[(i, i)].norm())).sum()
    }
}

/// Solves `A·X = B` by LU with partial pivoting.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    Lu::new(a)?.solve(b)
}

/// `log |det A|`; singular input is an error rather than `-inf`.
pub fn logabsdet(a: &CMatrix) -> Result<f64, LinalgError> {
    Ok(Lu::new(a)?.logabsdet())
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    Lu::new(a)?.solve(&CMatrix::identity(a.rows()))
}

/// Lower Cholesky factor `L` with `L·Lᴴ = A`.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let asym = a.hermitian_asymmetry();
    if asym > HERMITIAN_RTOL * a.max_abs() {
        return Err(LinalgError::NotHermitian { asymmetry: asym });
    }
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / djj;
        }
    }
    Ok(l)
}

/// Forward substitution `L·X = B` for lower-triangular `L`.
pub fn solve_lower(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.rows();
    assert_eq!(b.rows(), n);
    let mut x = b.clone();
    for j in 0..b.cols() {
        for i in 0..n {
            let mut acc = x[(i, j)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = acc / l[(i, i)];
        }
    }
    x
}

/// Back substitution `Lᴴ·x = b` for lower-triangular `L`.
pub fn solve_lower_adjoint(l: &CMatrix, b: &[C64]) -> Vec<C64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l[(k, i)].conj() * x[k];
        }
        x[i] = acc / l[(i, i)].conj();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_system_returns_rhs() {
        let mut rng = TestRng::new(10);
        let b = rng.matrix(3, 2);
        let x = lu_solve(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_system() {
        let a = CMatrix::from_real_diag(&[2.0, 4.0]);
        let b = CMatrix::from_column(&[c(2.0, 0.0), c(4.0, 0.0)]);
        let x = lu_solve(&a, &b).unwrap();
        assert_eq!(x.col(0), vec![c(1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn random_system_multiply_back() {
        let mut rng = TestRng::new(11);
        for _ in 0..20 {
            let mut a = rng.matrix(5, 5);
            for i in 0..5 {
                a[(i, i)] += c(4.0, 0.0);
            }
            let b = rng.matrix(5, 1);
            let x = lu_solve(&a, &b).unwrap();
            let resid = (&(&a * &x) - &b).fro_norm();
            assert!(resid < 1e-10 * b.fro_norm(), "residual {resid}");
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_fn(3, 3, |i, j| c((i + j) as f64, 0.0));
        assert!(matches!(
            lu_solve(&a, &CMatrix::identity(3)),
            Err(LinalgError::SingularMatrix { .. })
        ));
        assert!(matches!(
            logabsdet(&CMatrix::zeros(2, 2)),
            Err(LinalgError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn pivot_ties_resolve_to_lowest_row() {
        // Column 0 has equal magnitudes in rows 0 and 2: no swap must occur.
        let a = CMatrix::from_fn(3, 3, |i, j| match (i, j) {
            (0, 0) | (2, 0) => c(1.0, 0.0),
            (1, 1) | (2, 2) => c(3.0, 0.0),
            _ => c(0.0, 0.0),
        });
        let lu = Lu::new(&a).unwrap();
        assert_eq!(lu.perm, vec![0, 1, 2]);
    }

    #[test]
    fn logabsdet_examples() {
        assert_eq!(logabsdet(&CMatrix::identity(4)).unwrap(), 0.0);
        let e = core::f64::consts::E;
        let d = logabsdet(&CMatrix::from_real_diag(&[e, e])).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
    }

    fn cofactor_det3(a: &CMatrix) -> C64 {
        a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
            - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
            + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)])
    }

    #[test]
    fn logabsdet_matches_cofactor_expansion() {
        let mut rng = TestRng::new(12);
        for _ in 0..50 {
            let a = rng.matrix(3, 3);
            let oracle = libm::log(cofactor_det3(&a).norm());
            let got = logabsdet(&a).unwrap();
            assert!((got - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn logabsdet_is_additive_over_products() {
        let mut rng = TestRng::new(13);
        for n in 1..=6 {
            let a = rng.matrix(n, n);
            let b = rng.matrix(n, n);
            let lhs = logabsdet(&(&a * &b)).unwrap();
            let rhs = logabsdet(&a).unwrap() + logabsdet(&b).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "n={n}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky(&CMatrix::identity(2)).unwrap(), CMatrix::identity(2));
        let l = cholesky(&CMatrix::from_real_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, CMatrix::from_real_diag(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs() {
        let mut rng = TestRng::new(14);
        for n in 1..=8 {
            let m = rng.matrix(n, n);
            let mut a = &m.adjoint() * &m;
            for i in 0..n {
                a[(i, i)] += c(1.0, 0.0);
            }
            let a = a.hermitian_part();
            let l = cholesky(&a).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    assert_eq!(l[(i, j)], c(0.0, 0.0));
                }
            }
            let err = (&(&l * &l.adjoint()) - &a).fro_norm();
            assert!(err <= 1e-10 * a.fro_norm(), "n={n} err={err}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_and_asymmetric() {
        let a = CMatrix::from_real_diag(&[1.0, -1.0]);
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::NotPositiveDefinite { index: 1, .. })
        ));
        let mut b = CMatrix::identity(2);
        b[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(cholesky(&b), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn triangular_solves() {
        let mut rng = TestRng::new(15);
        let a = rng.pd(4);
        let l = cholesky(&a).unwrap();
        let b = rng.matrix(4, 2);
        let x = solve_lower(&l, &b);
        assert!((&(&l * &x) - &b).fro_norm() < 1e-12);
        let v = rng.vector(4);
        let y = solve_lower_adjoint(&l, &v);
        let back = l.adjoint().matvec(&y);
        for (p, q) in back.iter().zip(&v) {
            assert!((p - q).norm() < 1e-12);
        }
    }
}
