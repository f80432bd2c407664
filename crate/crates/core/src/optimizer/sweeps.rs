//! Block coordinate descent schedules over one frequency bin.
//!
//! Every sweep updates `w` in place. `gs` holds the weighted covariances of
//! the modelled sources, so `gs.len()` is the target count `K`.

use crate::linalg::{CMatrix, LinalgError};

use super::updates::{ip0_update_row, ip2_update, update_wz_fast, update_wz_full};

/// How the noise block `W_z` is refreshed after target updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WzUpdate {
    /// Subspace-equivalent closed form; cheapest, and what production runs use.
    #[default]
    Fast,
    /// Exact block minimizer of the per-bin cost.
    Full,
}

fn refresh_wz(w: &mut CMatrix, gz: &CMatrix, targets: usize, mode: WzUpdate) -> Result<(), LinalgError> {
    let wz = match mode {
        WzUpdate::Fast => update_wz_fast(&w.columns(0..targets), gz)?,
        WzUpdate::Full => update_wz_full(w, gz, targets)?,
    };
    w.set_columns(targets, &wz);
    Ok(())
}

/// Plain iterative projection over all `M` columns. Columns beyond
/// `gs.len()` are updated against `G_z`.
pub fn ip0_sweep(w: &mut CMatrix, gs: &[CMatrix], gz: &CMatrix) -> Result<(), LinalgError> {
    for k in 0..w.cols() {
        let g = gs.get(k).unwrap_or(gz);
        let col = ip0_update_row(w, g, k)?;
        w.set_col(k, &col);
    }
    Ok(())
}

/// Updates `w_1 … w_K` in order, then `W_z` once.
pub fn ip1_sweep(w: &mut CMatrix, gs: &[CMatrix], gz: &CMatrix, mode: WzUpdate) -> Result<(), LinalgError> {
    ip1_sweep_observed(w, gs, gz, mode, &mut |_| {})
}

/// [`ip1_sweep`], calling `after_wz` with the matrix after the `W_z` refresh.
pub fn ip1_sweep_observed(
    w: &mut CMatrix,
    gs: &[CMatrix],
    gz: &CMatrix,
    mode: WzUpdate,
    after_wz: &mut dyn FnMut(&CMatrix),
) -> Result<(), LinalgError> {
    let targets = gs.len();
    for (k, g) in gs.iter().enumerate() {
        let col = ip0_update_row(w, g, k)?;
        w.set_col(k, &col);
    }
    refresh_wz(w, gz, targets, mode)?;
    after_wz(w);
    Ok(())
}

/// Refreshes `W_z` immediately after every target update, which keeps the
/// orthogonality constraint `W_sᴴ G_z W_z = O` enforced throughout.
pub fn ip3_sweep(w: &mut CMatrix, gs: &[CMatrix], gz: &CMatrix, mode: WzUpdate) -> Result<(), LinalgError> {
    ip3_sweep_observed(w, gs, gz, mode, &mut |_| {})
}

pub fn ip3_sweep_observed(
    w: &mut CMatrix,
    gs: &[CMatrix],
    gz: &CMatrix,
    mode: WzUpdate,
    after_wz: &mut dyn FnMut(&CMatrix),
) -> Result<(), LinalgError> {
    let targets = gs.len();
    for (k, g) in gs.iter().enumerate() {
        let col = ip0_update_row(w, g, k)?;
        w.set_col(k, &col);
        refresh_wz(w, gz, targets, mode)?;
        after_wz(w);
    }
    Ok(())
}

/// Replaces `w_1` by the generalized-eigenvector solution. `W_z` is left
/// untouched; it is only needed once, after the final iteration.
pub fn ip2_step(w: &mut CMatrix, g1: &CMatrix, gz: &CMatrix) -> Result<f64, LinalgError> {
    let sol = ip2_update(g1, gz)?;
    w.set_col(0, &sol.filter);
    Ok(sol.eigenvalue)
}
