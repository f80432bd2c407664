//! Closed-form block updates of the per-bin objective `J_W`.

use alloc::vec::Vec;

use crate::linalg::{self, gev_largest, inv_sqrt_hermitian, quad_form, unit_vector, CMatrix, LinalgError, Lu, C64};

/// Exact minimizer of `J_W` over column `k`, all other columns fixed:
/// `u_k = (Wᴴ G)⁻¹ e_k`, `w_k = u_k (u_kᴴ G u_k)^{-1/2}`.
///
/// Column `k` of `w` is the pre-update estimate.
pub fn ip0_update_row(w: &CMatrix, g: &CMatrix, k: usize) -> Result<Vec<C64>, LinalgError> {
    let m = w.rows();
    let lhs = &w.adjoint() * g;
    let u = Lu::new(&lhs)?.solve_vec(&unit_vector(m, k))?;
    normalize_in_metric(u, g)
}

fn normalize_in_metric(mut u: Vec<C64>, g: &CMatrix) -> Result<Vec<C64>, LinalgError> {
    let q = quad_form(g, &u);
    if !(q > 0.0) {
        return Err(LinalgError::NotPositiveDefinite { index: 0, pivot: q });
    }
    let scale = 1.0 / libm::sqrt(q);
    for x in &mut u {
        *x *= scale;
    }
    Ok(u)
}

/// Global minimizer over `W_z` with the targets fixed:
/// `U_z = (Wᴴ G_z)⁻¹ E_z`, `W_z = U_z (U_zᴴ G_z U_z)^{-1/2}`.
pub fn update_wz_full(w: &CMatrix, gz: &CMatrix, targets: usize) -> Result<CMatrix, LinalgError> {
    let m = w.rows();
    let lhs = &w.adjoint() * gz;
    let uz = Lu::new(&lhs)?.solve(&CMatrix::selector(m, targets..m))?;
    let gram = (&(&uz.adjoint() * gz) * &uz).hermitian_part();
    Ok(&uz * &inv_sqrt_hermitian(&gram)?)
}

/// Cheap `W_z` refresh spanning the same subspace as [`update_wz_full`]:
/// `W_z = [−(W_sᴴ G_z E_s)⁻¹ (W_sᴴ G_z E_z); I]`.
///
/// The result satisfies the orthogonality constraint `W_sᴴ G_z W_z = O`.
pub fn update_wz_fast(ws: &CMatrix, gz: &CMatrix) -> Result<CMatrix, LinalgError> {
    let (m, k) = ws.shape();
    assert!(k < m, "need at least one noise dimension");
    let p = &ws.adjoint() * gz;
    let block = p.columns(0..k);
    let rest = p.columns(k..m);
    let lu = Lu::new(&block).map_err(|e| match e {
        LinalgError::SingularMatrix { .. } => LinalgError::DegenerateBlock,
        other => other,
    })?;
    let x = lu.solve(&rest)?;
    let mut wz = CMatrix::zeros(m, m - k);
    for i in 0..k {
        for j in 0..m - k {
            wz[(i, j)] = -x[(i, j)];
        }
    }
    for j in 0..m - k {
        wz[(k + j, j)] = C64::new(1.0, 0.0);
    }
    Ok(wz)
}

/// The `K = 1` joint solution of the target filter.
#[derive(Debug, Clone)]
pub struct Ip2Solution {
    /// `w_1 = u (uᴴ G_1 u)^{-1/2}`.
    pub filter: Vec<C64>,
    /// Unit-norm top generalized eigenvector `u` of `G_z u = λ G_1 u`.
    pub direction: Vec<C64>,
    /// Largest generalized eigenvalue `λ`.
    pub eigenvalue: f64,
}

/// Globally optimal target filter for `K = 1`: the top generalized
/// eigenvector of `G_z u = λ G_1 u`, scaled to `w_1ᴴ G_1 w_1 = 1`.
/// This is a MaxSNR beamformer and does not depend on `W_z`.
pub fn ip2_update(g1: &CMatrix, gz: &CMatrix) -> Result<Ip2Solution, LinalgError> {
    let gev = gev_largest(gz, g1)?;
    let filter = normalize_in_metric(gev.eigenvector.clone(), g1)?;
    Ok(Ip2Solution {
        filter,
        direction: gev.eigenvector,
        eigenvalue: gev.eigenvalue,
    })
}

/// `W_z = U_z (U_zᴴ G_z U_z)^{-1/2}` with `U_z` an orthonormal basis of the
/// complement of `G_z u_1`, so that `W_zᴴ G_z u_1 = 0` and `W_zᴴ G_z W_z = I`.
pub fn ip2_complete_wz(u1: &[C64], gz: &CMatrix) -> Result<CMatrix, LinalgError> {
    let uz = orthogonal_complement(&gz.matvec(u1));
    let gram = (&(&uz.adjoint() * gz) * &uz).hermitian_part();
    Ok(&uz * &inv_sqrt_hermitian(&gram)?)
}

/// Columns `2..m` of the Householder reflector mapping `v` onto `e_1`.
fn orthogonal_complement(v: &[C64]) -> CMatrix {
    let m = v.len();
    let norm = linalg::vec_norm(v);
    let mut h = CMatrix::identity(m);
    if norm > 0.0 {
        let phase = if v[0].norm() > 0.0 {
            v[0] / v[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut r: Vec<C64> = v.to_vec();
        r[0] += phase * norm;
        let rr: f64 = r.iter().map(|x| x.norm_sqr()).sum();
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] -= r[i] * r[j].conj() * (2.0 / rr);
            }
        }
    }
    h.columns(1..m)
}

/// `max |W_sᴴ G_z W_z|`, the orthogonality-constraint violation.
pub fn oc_residual(w: &CMatrix, gz: &CMatrix, targets: usize) -> f64 {
    let m = w.cols();
    if targets >= m {
        return 0.0;
    }
    let ws = w.columns(0..targets);
    let wz = w.columns(targets..m);
    (&(&ws.adjoint() * gz) * &wz).max_abs()
}
