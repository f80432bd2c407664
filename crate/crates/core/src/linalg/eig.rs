use alloc::vec::Vec;

use super::decomp::{cholesky, solve_lower, solve_lower_adjoint};
use super::{vec_norm, CMatrix, LinalgError, C64, MAX_JACOBI_SWEEPS};

/// Full spectrum of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

/// Largest eigenpair of a Hermitian-definite pencil `A u = λ B u`.
#[derive(Debug, Clone)]
pub struct GevResult {
    pub eigenvalue: f64,
    /// Unit Euclidean norm.
    pub eigenvector: Vec<C64>,
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Only the Hermitian part `(A + Aᴴ)/2` of the input is used.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch {
            expected: (a.rows(), a.rows()),
            got: a.shape(),
        });
    }
    let n = a.rows();
    let mut h = a.hermitian_part();
    for i in 0..n {
        h[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    let scale = h.fro_norm();

    let mut converged = n == 1 || scale == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut h, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&h) <= n as f64 * f64::EPSILON * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps equal eigenvalues in index order.
    order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| h[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(h: &CMatrix) -> f64 {
    let n = h.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += h[(i, j)].norm_sqr();
            }
        }
    }
    libm::sqrt(acc)
}

/// Annihilates `h[p][q]` with the unitary `J = diag(1, e^{-iφ}) · R(θ)`,
/// applied as `h ← Jᴴ h J` and `v ← v J`.
fn rotate(h: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let b = h[(p, q)];
    let abs_b = b.norm();
    let app = h[(p, p)].re;
    let aqq = h[(q, q)].re;
    if abs_b == 0.0 {
        return;
    }
    // Negligible next to both diagonal entries: drop it outright.
    if abs_b <= 0.5 * f64::EPSILON * libm::sqrt(app.abs() * aqq.abs()) {
        h[(p, q)] = C64::new(0.0, 0.0);
        h[(q, p)] = C64::new(0.0, 0.0);
        return;
    }
    let phase = b / abs_b;
    let tau = (aqq - app) / (2.0 * abs_b);
    let t = if tau >= 0.0 {
        1.0 / (tau + libm::sqrt(1.0 + tau * tau))
    } else {
        -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
    };
    let c = 1.0 / libm::sqrt(1.0 + t * t);
    let s = t * c;

    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    let n = h.rows();

    for r in 0..n {
        let hp = h[(r, p)];
        let hq = h[(r, q)];
        h[(r, p)] = hp * c + hq * jqp;
        h[(r, q)] = hp * s + hq * jqq;
    }
    for r in 0..n {
        let hp = h[(p, r)];
        let hq = h[(q, r)];
        h[(p, r)] = hp * c + hq * jqp.conj();
        h[(q, r)] = hp * s + hq * jqq.conj();
    }
    h[(p, q)] = C64::new(0.0, 0.0);
    h[(q, p)] = C64::new(0.0, 0.0);
    h[(p, p)].im = 0.0;
    h[(q, q)].im = 0.0;

    for r in 0..n {
        let vp = v[(r, p)];
        let vq = v[(r, q)];
        v[(r, p)] = vp * c + vq * jqp;
        v[(r, q)] = vp * s + vq * jqq;
    }
}

/// Largest generalized eigenpair of `A u = λ B u`, `B` positive definite.
///
/// Reduces to the standard problem `L⁻¹ A L⁻ᴴ v = λ v` with `B = L Lᴴ`
/// and maps back with `u = L⁻ᴴ v`. When the top eigenvalue is repeated,
/// the lowest-index vector of the ascending reduced spectrum is returned.
pub fn gev_largest(a: &CMatrix, b: &CMatrix) -> Result<GevResult, LinalgError> {
    if a.shape() != b.shape() {
        return Err(LinalgError::DimensionMismatch {
            expected: b.shape(),
            got: a.shape(),
        });
    }
    let l = cholesky(b)?;
    let y = solve_lower(&l, a);
    let reduced = solve_lower(&l, &y.adjoint());
    let eig = hermitian_eig(&reduced)?;

    let n = a.rows();
    let top = eig.eigenvalues[n - 1];
    let tie = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let pick = eig.eigenvalues.iter().position(|&x| x >= top - tie).unwrap_or(n - 1);

    let mut u = solve_lower_adjoint(&l, &eig.eigenvectors.col(pick));
    let norm = vec_norm(&u);
    for x in &mut u {
        *x /= norm;
    }
    Ok(GevResult {
        eigenvalue: eig.eigenvalues[pick],
        eigenvector: u,
    })
}

/// `A^{-1/2}` for Hermitian positive definite `A`, as `V Λ^{-1/2} Vᴴ`.
pub fn inv_sqrt_hermitian(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let eig = hermitian_eig(a)?;
    if let Some((index, &pivot)) = eig.eigenvalues.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(LinalgError::NotPositiveDefinite { index, pivot });
    }
    let n = a.rows();
    let v = &eig.eigenvectors;
    let inv_roots: Vec<f64> = eig.eigenvalues.iter().map(|&x| 1.0 / libm::sqrt(x)).collect();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * inv_roots[k]).sum()
    }))
}
