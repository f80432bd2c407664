//! Probabilistic model state and the quantities derived from it.
//!
//! Targets `s_k(f,t) = w_k(f)ᴴ x(f,t)` are complex Gaussian with a
//! frequency-independent, time-varying variance `λ_k(t)`; the remaining
//! `M − K` outputs `z(f,t) = W_z(f)ᴴ x(f,t)` are unit-covariance stationary
//! noise. With `λ` fixed the negative log-likelihood splits into one
//! objective per frequency bin, [`cost_jw`].

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, dot, logabsdet, quad_form, CMatrix, LinalgError, C64};
use crate::{Error, Result, Spectrogram};

/// Per-bin demixing matrices `W(f) = [w_1 … w_K | W_z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingStack {
    targets: usize,
    mats: Vec<CMatrix>,
}

impl DemixingStack {
    /// `W(f) = I` for every bin.
    pub fn identity(bins: usize, channels: usize, targets: usize) -> Self {
        assert!(targets >= 1 && targets <= channels);
        Self {
            targets,
            mats: vec![CMatrix::identity(channels); bins],
        }
    }

    pub fn from_matrices(targets: usize, mats: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::ShapeMismatch("demixing stack needs at least one bin"));
        };
        let m = first.rows();
        if mats.iter().any(|w| w.shape() != (m, m)) {
            return Err(Error::ShapeMismatch("demixing matrices must be square and equal-sized"));
        }
        if targets == 0 || targets > m {
            return Err(Error::InvalidK {
                k: targets,
                channels: m,
                reason: "target count must be between 1 and M",
            });
        }
        Ok(Self { targets, mats })
    }

    pub fn bins(&self) -> usize {
        self.mats.len()
    }

    pub fn channels(&self) -> usize {
        self.mats[0].rows()
    }

    /// Number of columns modelled as nonstationary sources.
    pub fn targets(&self) -> usize {
        self.targets
    }

    pub fn get(&self, bin: usize) -> &CMatrix {
        &self.mats[bin]
    }

    pub fn get_mut(&mut self, bin: usize) -> &mut CMatrix {
        &mut self.mats[bin]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn matrices_mut(&mut self) -> &mut [CMatrix] {
        &mut self.mats
    }

    /// Multiplies column `k` of every `W(f)` by `factor`.
    pub fn scale_column(&mut self, k: usize, factor: f64) {
        for w in &mut self.mats {
            for i in 0..w.rows() {
                w[(i, k)] *= factor;
            }
        }
    }
}

/// Source variances `λ_k(t)`, `sources × frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap {
    sources: usize,
    frames: usize,
    data: Vec<f64>,
}

impl VarianceMap {
    pub fn filled(sources: usize, frames: usize, value: f64) -> Self {
        Self {
            sources,
            frames,
            data: vec![value; sources * frames],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let frames = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == frames));
        Self {
            sources: rows.len(),
            frames,
            data: rows.concat(),
        }
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn get(&self, k: usize, t: usize) -> f64 {
        self.data[k * self.frames + t]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.frames..(k + 1) * self.frames]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.frames..(k + 1) * self.frames]
    }

    /// Time average `c_k = (1/T) Σ_t λ_k(t)`.
    pub fn mean(&self, k: usize) -> f64 {
        self.row(k).iter().sum::<f64>() / self.frames as f64
    }
}

/// Diagonal loading applied to covariance estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ridge {
    /// `G + ε I`.
    Absolute(f64),
    /// `G + ε (tr G / M) I`.
    TraceRelative(f64),
}

impl Ridge {
    pub fn none() -> Self {
        Ridge::Absolute(0.0)
    }

    pub fn apply(&self, g: &mut CMatrix) {
        let m = g.rows();
        let load = match *self {
            Ridge::Absolute(eps) => eps,
            Ridge::TraceRelative(eps) => eps * g.trace().re / m as f64,
        };
        if load != 0.0 {
            for i in 0..m {
                g[(i, i)] += C64::new(load, 0.0);
            }
        }
    }
}

/// Weighted covariances `G_k(f)` and sample covariance `G_z(f)`.
#[derive(Debug, Clone)]
pub struct CovarianceSet {
    /// Indexed `[bin][k]`.
    pub weighted: Vec<Vec<CMatrix>>,
    /// Indexed `[bin]`.
    pub noise: Vec<CMatrix>,
}

impl CovarianceSet {
    /// Builds every `G_k(f)` from the current variances plus the given
    /// noise covariances.
    pub fn build(x: &Spectrogram, lambda: &VarianceMap, ridge: Ridge, noise: Vec<CMatrix>) -> Self {
        let weighted = (0..x.bins())
            .map(|f| weighted_covariances_bin(x, f, lambda, ridge))
            .collect();
        Self { weighted, noise }
    }

    pub fn bins(&self) -> usize {
        self.noise.len()
    }
}

const SUM_BLOCK: usize = 16;

/// `(1/T) Σ_t w_s(t) x(t) x(t)ᴴ` for each weight sequence `w_s`.
///
/// Frames are summed in index order, in blocks whose partial sums are
/// combined pairwise (cascade summation). Only the upper triangle is
/// accumulated; the lower one is mirrored so the result is exactly
/// Hermitian.
fn weighted_outer_sums(x: &Spectrogram, bin: usize, weights: &[&[f64]]) -> Vec<CMatrix> {
    let m = x.channels();
    let frames = x.frames();
    let sets = weights.len();
    let stride = m * m;
    let mut stack: Vec<(u32, Vec<C64>)> = Vec::new();

    let mut start = 0;
    while start < frames {
        let end = (start + SUM_BLOCK).min(frames);
        let mut acc = vec![C64::new(0.0, 0.0); sets * stride];
        for t in start..end {
            let xt = x.frame(bin, t);
            for i in 0..m {
                for j in i..m {
                    let p = xt[i] * xt[j].conj();
                    for (s, w) in weights.iter().enumerate() {
                        acc[s * stride + i * m + j] += p * w[t];
                    }
                }
            }
        }
        let mut level = 0;
        while matches!(stack.last(), Some((l, _)) if *l == level) {
            let (_, prev) = stack.pop().unwrap();
            acc = prev.iter().zip(&acc).map(|(a, b)| a + b).collect();
            level += 1;
        }
        stack.push((level, acc));
        start = end;
    }
    let mut total = stack.pop().map(|(_, v)| v).unwrap_or_default();
    while let Some((_, prev)) = stack.pop() {
        total = prev.iter().zip(&total).map(|(a, b)| a + b).collect();
    }

    let inv_t = 1.0 / frames as f64;
    (0..sets)
        .map(|s| {
            let block = &total[s * stride..(s + 1) * stride];
            let mut g = CMatrix::zeros(m, m);
            for i in 0..m {
                g[(i, i)] = C64::new(block[i * m + i].re * inv_t, 0.0);
                for j in i + 1..m {
                    let v = block[i * m + j] * inv_t;
                    g[(i, j)] = v;
                    g[(j, i)] = v.conj();
                }
            }
            g
        })
        .collect()
}

/// Sample covariance `G_z(f) = (1/T) Σ_t x(f,t) x(f,t)ᴴ` for every bin.
pub fn noise_covariance(x: &Spectrogram) -> Vec<CMatrix> {
    if x.frames() < x.channels() {
        log::warn!(
            "only {} frames for {} channels: sample covariances are rank deficient",
            x.frames(),
            x.channels()
        );
    }
    let ones = vec![1.0; x.frames()];
    (0..x.bins())
        .map(|f| weighted_outer_sums(x, f, &[&ones]).pop().unwrap())
        .collect()
}

/// `G_k(f) = (1/T) Σ_t x xᴴ / λ_k(t)` plus the ridge, for every bin.
pub fn weighted_covariance(x: &Spectrogram, lambda_k: &[f64], ridge: Ridge) -> Vec<CMatrix> {
    assert_eq!(lambda_k.len(), x.frames(), "variance row length must equal frame count");
    let inv: Vec<f64> = lambda_k.iter().map(|l| 1.0 / l).collect();
    (0..x.bins())
        .map(|f| {
            let mut g = weighted_outer_sums(x, f, &[&inv]).pop().unwrap();
            ridge.apply(&mut g);
            g
        })
        .collect()
}

/// All `G_k(bin)`, `k < lambda.sources()`, in a single pass over the frames.
pub fn weighted_covariances_bin(x: &Spectrogram, bin: usize, lambda: &VarianceMap, ridge: Ridge) -> Vec<CMatrix> {
    let inv: Vec<Vec<f64>> = (0..lambda.sources())
        .map(|k| lambda.row(k).iter().map(|l| 1.0 / l).collect())
        .collect();
    let refs: Vec<&[f64]> = inv.iter().map(Vec::as_slice).collect();
    let mut gs = weighted_outer_sums(x, bin, &refs);
    for g in &mut gs {
        ridge.apply(g);
    }
    gs
}

/// Separated outputs `w_k(f)ᴴ x(f,t)` for `k < count`, as a spectrogram
/// whose channels are the sources.
pub fn separate(w: &DemixingStack, x: &Spectrogram, count: usize) -> Spectrogram {
    assert!(count <= w.channels());
    let mut s = Spectrogram::zeros(x.bins(), x.frames(), count);
    for f in 0..x.bins() {
        let wf = w.get(f);
        let cols: Vec<Vec<C64>> = (0..count).map(|k| wf.col(k)).collect();
        for t in 0..x.frames() {
            let xt = x.frame(f, t);
            for (k, col) in cols.iter().enumerate() {
                s.set(f, t, k, dot(col, xt));
            }
        }
    }
    s
}

/// `λ_k(t) = max{ (1/F) Σ_f |s_k(f,t)|², ε₁ }`, the exact minimizer of the
/// total cost over `λ ≥ ε₁` for fixed demixing matrices.
pub fn update_variances(s: &Spectrogram, eps1: f64) -> VarianceMap {
    let (bins, frames, sources) = (s.bins(), s.frames(), s.channels());
    let mut lambda = VarianceMap::filled(sources, frames, 0.0);
    for t in 0..frames {
        for k in 0..sources {
            let mut acc = 0.0;
            for f in 0..bins {
                acc += s.get(f, t, k).norm_sqr();
            }
            lambda.row_mut(k)[t] = (acc / bins as f64).max(eps1);
        }
    }
    lambda
}

/// Negative log-likelihood without its additive constant:
///
/// `Σ_{k,t} [‖s_k(t)‖²/λ_k(t) + F log λ_k(t)] + Σ_{f,t} ‖z(f,t)‖² − 2T Σ_f log|det W(f)|`.
pub fn cost_total(w: &DemixingStack, lambda: &VarianceMap, x: &Spectrogram) -> Result<f64> {
    let k_src = w.targets();
    if lambda.sources() != k_src || lambda.frames() != x.frames() {
        return Err(Error::ShapeMismatch(
            "variance map does not match demixing stack and frames",
        ));
    }
    if w.bins() != x.bins() || w.channels() != x.channels() {
        return Err(Error::ShapeMismatch("demixing stack does not match spectrogram"));
    }
    let (bins, frames, m) = (x.bins(), x.frames(), x.channels());
    let mut energy = vec![0.0; k_src * frames];
    let mut noise = 0.0;
    let mut logdet = 0.0;
    for f in 0..bins {
        let wf = w.get(f);
        logdet += logabsdet(wf).map_err(Error::at_bin(f))?;
        let cols: Vec<Vec<C64>> = (0..m).map(|k| wf.col(k)).collect();
        for t in 0..frames {
            let xt = x.frame(f, t);
            for (k, col) in cols.iter().enumerate() {
                let p = dot(col, xt).norm_sqr();
                if k < k_src {
                    energy[k * frames + t] += p;
                } else {
                    noise += p;
                }
            }
        }
    }
    let mut total = 0.0;
    for k in 0..k_src {
        for t in 0..frames {
            let l = lambda.get(k, t);
            total += energy[k * frames + t] / l + bins as f64 * libm::log(l);
        }
    }
    Ok(total + noise - 2.0 * frames as f64 * logdet)
}

/// Per-bin objective
/// `J_W = Σ_k w_kᴴ G_k w_k + tr(W_zᴴ G_z W_z) − 2 log|det W|`, with `K = gs.len()`.
pub fn cost_jw(w: &CMatrix, gs: &[CMatrix], gz: &CMatrix) -> Result<f64, LinalgError> {
    let m = w.cols();
    let k_src = gs.len();
    assert!(k_src <= m);
    let mut j = 0.0;
    for (k, g) in gs.iter().enumerate() {
        j += quad_form(g, &w.col(k));
    }
    for k in k_src..m {
        j += quad_form(gz, &w.col(k));
    }
    Ok(j - 2.0 * logabsdet(w)?)
}

/// Wirtinger gradient `∂J_W/∂W* = [G_1 w_1, …, G_K w_K, G_z W_z] − W^{−ᴴ}`.
pub fn cost_jw_gradient(w: &CMatrix, gs: &[CMatrix], gz: &CMatrix) -> Result<CMatrix, LinalgError> {
    let m = w.cols();
    let inv_h = linalg::inverse(w)?.adjoint();
    let mut grad = CMatrix::zeros(m, m);
    for k in 0..m {
        let g = gs.get(k).unwrap_or(gz);
        let gw = g.matvec(&w.col(k));
        for i in 0..m {
            grad[(i, k)] = gw[i] - inv_h[(i, k)];
        }
    }
    Ok(grad)
}

/// Violation of the first-order stationarity conditions of [`cost_jw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityResidual {
    /// `max_k ‖Wᴴ G_k w_k − e_k‖₂`.
    pub targets: f64,
    /// `‖Wᴴ G_z W_z − E_z‖_F`; its first `K` rows are the orthogonality
    /// constraint `W_sᴴ G_z W_z = O`.
    pub noise: f64,
}

impl StationarityResidual {
    pub fn combined(&self) -> f64 {
        self.targets.max(self.noise)
    }
}

pub fn stationarity_residual(w: &CMatrix, gs: &[CMatrix], gz: &CMatrix) -> StationarityResidual {
    let m = w.cols();
    let k_src = gs.len();
    let mut targets: f64 = 0.0;
    for (k, g) in gs.iter().enumerate() {
        let mut r = w.adjoint_matvec(&g.matvec(&w.col(k)));
        r[k] -= C64::new(1.0, 0.0);
        targets = targets.max(linalg::vec_norm(&r));
    }
    let mut noise = 0.0;
    if k_src < m {
        let wz = w.columns(k_src..m);
        let mut r = &w.adjoint() * &(gz * &wz);
        for j in 0..m - k_src {
            r[(k_src + j, j)] -= C64::new(1.0, 0.0);
        }
        noise = r.fro_norm();
    }
    StationarityResidual { targets, noise }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;

    fn random_spec(rng: &mut TestRng, bins: usize, frames: usize, channels: usize) -> Spectrogram {
        Spectrogram::from_fn(bins, frames, channels, |_, _, _| rng.complex())
    }

    fn naive_cov(x: &Spectrogram, f: usize, weights: &[f64]) -> CMatrix {
        let m = x.channels();
        let mut g = CMatrix::zeros(m, m);
        for t in 0..x.frames() {
            let v = CMatrix::from_column(x.frame(f, t));
            g = &g + &(&v * &v.adjoint()).scale(c(weights[t], 0.0));
        }
        g.scale(c(1.0 / x.frames() as f64, 0.0))
    }

    #[test]
    fn single_frame_noise_covariance_is_outer_product() {
        let mut rng = TestRng::new(30);
        let x = random_spec(&mut rng, 1, 1, 3);
        let g = noise_covariance(&x);
        let v = CMatrix::from_column(x.frame(0, 0));
        assert!((&g[0] - &(&v * &v.adjoint())).fro_norm() < 1e-15);
    }

    #[test]
    fn zero_input_covariances() {
        let x = Spectrogram::zeros(2, 5, 3);
        assert_eq!(noise_covariance(&x)[1], CMatrix::zeros(3, 3));
        let g = weighted_covariance(&x, &[1.0; 5], Ridge::Absolute(0.1));
        assert_eq!(g[0], CMatrix::from_real_diag(&[0.1; 3]));
    }

    #[test]
    fn covariances_match_naive_loop() {
        let mut rng = TestRng::new(31);
        let x = random_spec(&mut rng, 3, 100, 3);
        let lam: Vec<f64> = (0..100).map(|_| 0.1 + rng.uniform()).collect();
        let inv: Vec<f64> = lam.iter().map(|l| 1.0 / l).collect();
        let gz = noise_covariance(&x);
        let gk = weighted_covariance(&x, &lam, Ridge::none());
        for f in 0..3 {
            let oz = naive_cov(&x, f, &[1.0; 100]);
            let ok = naive_cov(&x, f, &inv);
            assert!((&gz[f] - &oz).fro_norm() <= 1e-12 * oz.fro_norm());
            assert!((&gk[f] - &ok).fro_norm() <= 1e-12 * ok.fro_norm());
            assert_eq!(gz[f].hermitian_asymmetry(), 0.0);
        }
    }

    #[test]
    fn unit_weights_reduce_to_sample_covariance() {
        let mut rng = TestRng::new(32);
        let x = random_spec(&mut rng, 2, 37, 4);
        assert_eq!(weighted_covariance(&x, &[1.0; 37], Ridge::none()), noise_covariance(&x));
    }

    #[test]
    fn batched_bin_covariances_match_single() {
        let mut rng = TestRng::new(33);
        let x = random_spec(&mut rng, 2, 40, 3);
        let rows: Vec<Vec<f64>> = (0..2).map(|_| (0..40).map(|_| 0.5 + rng.uniform()).collect()).collect();
        let lam = VarianceMap::from_rows(&rows);
        let ridge = Ridge::Absolute(0.1);
        let batched = weighted_covariances_bin(&x, 1, &lam, ridge);
        for k in 0..2 {
            assert_eq!(batched[k], weighted_covariance(&x, lam.row(k), ridge)[1]);
        }
    }

    #[test]
    fn ridge_makes_covariances_positive_definite() {
        // Rank one data (T = 1) is singular without the ridge.
        let mut rng = TestRng::new(34);
        let x = random_spec(&mut rng, 1, 1, 4);
        assert!(linalg::cholesky(&noise_covariance(&x)[0]).is_err());
        let g = weighted_covariance(&x, &[1.0], Ridge::Absolute(1e-3));
        assert!(linalg::cholesky(&g[0]).is_ok());
        let g = weighted_covariance(&x, &[1.0], Ridge::TraceRelative(1e-3));
        assert!(linalg::cholesky(&g[0]).is_ok());
    }

    #[test]
    fn variance_update_examples() {
        let mut s = Spectrogram::zeros(2, 1, 1);
        s.set(0, 0, 0, c(1.0, 0.0));
        s.set(1, 0, 0, c(0.0, 1.0));
        assert_eq!(update_variances(&s, 1e-5).get(0, 0), 1.0);
        let z = update_variances(&Spectrogram::zeros(4, 3, 2), 1e-5);
        assert!((0..2).all(|k| z.row(k).iter().all(|&l| l == 1e-5)));

        let mut rng = TestRng::new(35);
        let s = random_spec(&mut rng, 5, 7, 2);
        let lam = update_variances(&s, 1e-5);
        for k in 0..2 {
            for t in 0..7 {
                let mean: f64 = (0..5).map(|f| s.get(f, t, k).norm_sqr()).sum::<f64>() / 5.0;
                assert!((lam.get(k, t) - mean).abs() <= 1e-15 * mean);
            }
        }
    }

    #[test]
    fn cost_total_trivial_values() {
        let x = Spectrogram::zeros(3, 4, 2);
        let w = DemixingStack::identity(3, 2, 1);
        let lam = VarianceMap::filled(1, 4, 1.0);
        assert_eq!(cost_total(&w, &lam, &x).unwrap(), 0.0);

        let mut x = Spectrogram::zeros(1, 1, 3);
        x.set(0, 0, 0, c(1.0, 0.0));
        let w = DemixingStack::identity(1, 3, 1);
        let lam = VarianceMap::filled(1, 1, 1.0);
        assert_eq!(cost_total(&w, &lam, &x).unwrap(), 1.0);
    }

    fn naive_cost_total(w: &DemixingStack, lam: &VarianceMap, x: &Spectrogram) -> f64 {
        let (bins, frames, m) = (x.bins(), x.frames(), x.channels());
        let k_src = w.targets();
        let mut j = 0.0;
        for k in 0..k_src {
            for t in 0..frames {
                let mut e = 0.0;
                for f in 0..bins {
                    let s: C64 = (0..m).map(|i| w.get(f)[(i, k)].conj() * x.get(f, t, i)).sum();
                    e += s.norm_sqr();
                }
                j += e / lam.get(k, t) + bins as f64 * lam.get(k, t).ln();
            }
        }
        for f in 0..bins {
            for t in 0..frames {
                for k in k_src..m {
                    let z: C64 = (0..m).map(|i| w.get(f)[(i, k)].conj() * x.get(f, t, i)).sum();
                    j += z.norm_sqr();
                }
            }
            j -= 2.0 * frames as f64 * logabsdet(w.get(f)).unwrap();
        }
        j
    }

    #[test]
    fn cost_total_matches_naive_and_per_bin_decomposition() {
        let mut rng = TestRng::new(36);
        let (bins, frames, m, k) = (4, 9, 3, 2);
        let x = random_spec(&mut rng, bins, frames, m);
        let mats = (0..bins).map(|_| rng.matrix(m, m)).collect();
        let w = DemixingStack::from_matrices(k, mats).unwrap();
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..frames).map(|_| 0.2 + rng.uniform()).collect())
            .collect();
        let lam = VarianceMap::from_rows(&rows);
        let got = cost_total(&w, &lam, &x).unwrap();
        let oracle = naive_cost_total(&w, &lam, &x);
        assert!((got - oracle).abs() <= 1e-10 * oracle.abs());

        // T Σ_f J_W(f) plus the λ-only terms.
        let gz = noise_covariance(&x);
        let mut per_bin = 0.0;
        for f in 0..bins {
            let gs = weighted_covariances_bin(&x, f, &lam, Ridge::none());
            per_bin += frames as f64 * cost_jw(w.get(f), &gs, &gz[f]).unwrap();
        }
        let lam_terms: f64 = (0..k)
            .flat_map(|kk| lam.row(kk).iter().map(|l| bins as f64 * l.ln()).collect::<Vec<_>>())
            .sum();
        assert!((per_bin + lam_terms - got).abs() <= 1e-10 * got.abs());
    }

    #[test]
    fn cost_jw_closed_forms() {
        let m = 4;
        let id = CMatrix::identity(m);
        let gs = vec![id.clone(), id.clone()];
        assert_eq!(cost_jw(&id, &gs, &id).unwrap(), m as f64);
        let mut w = id.clone();
        for i in 0..m {
            w[(i, 0)] *= 2.0;
        }
        let delta = cost_jw(&w, &gs, &id).unwrap() - m as f64;
        assert!((delta - (3.0 - 2.0 * 2f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn cost_jw_matches_naive_terms() {
        let mut rng = TestRng::new(37);
        let w = rng.matrix(3, 3);
        let gs = vec![rng.pd(3)];
        let gz = rng.pd(3);
        let wz = w.columns(1..3);
        let oracle = (&(&w.columns(0..1).adjoint() * &gs[0]) * &w.columns(0..1))[(0, 0)].re
            + (&(&wz.adjoint() * &gz) * &wz).trace().re
            - 2.0 * logabsdet(&w).unwrap();
        assert!((cost_jw(&w, &gs, &gz).unwrap() - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
    }

    #[test]
    fn identities_are_stationary() {
        let id = CMatrix::identity(2);
        let r = stationarity_residual(&id, core::slice::from_ref(&id), &id);
        assert_eq!(r.combined(), 0.0);
    }

    #[test]
    fn stationarity_residual_matches_naive() {
        let mut rng = TestRng::new(38);
        let w = rng.matrix(4, 4);
        let gs = vec![rng.pd(4), rng.pd(4)];
        let gz = rng.pd(4);
        let r = stationarity_residual(&w, &gs, &gz);
        let wh = w.adjoint();
        let mut t: f64 = 0.0;
        for k in 0..2 {
            let v = &(&wh * &gs[k]) * &w.columns(k..k + 1);
            let e = CMatrix::from_column(&linalg::unit_vector(4, k));
            t = t.max((&v - &e).fro_norm());
        }
        let n = (&(&(&wh * &gz) * &w.columns(2..4)) - &CMatrix::selector(4, 2..4)).fro_norm();
        assert!((r.targets - t).abs() < 1e-12 * t);
        assert!((r.noise - n).abs() < 1e-12 * n);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = TestRng::new(39);
        for trial in 0..20 {
            let m = 2 + trial % 3;
            let k = 1 + trial % (m - 1);
            let mut w = rng.matrix(m, m);
            for i in 0..m {
                w[(i, i)] += c(2.0, 0.0);
            }
            let gs: Vec<CMatrix> = (0..k).map(|_| rng.pd(m)).collect();
            let gz = rng.pd(m);
            let grad = cost_jw_gradient(&w, &gs, &gz).unwrap();
            let h = 1e-6;
            for i in 0..m {
                for j in 0..m {
                    let mut fd = [0.0; 2];
                    for (p, dir) in [c(1.0, 0.0), c(0.0, 1.0)].into_iter().enumerate() {
                        let mut wp = w.clone();
                        wp[(i, j)] += dir * h;
                        let mut wm = w.clone();
                        wm[(i, j)] -= dir * h;
                        fd[p] = (cost_jw(&wp, &gs, &gz).unwrap() - cost_jw(&wm, &gs, &gz).unwrap()) / (2.0 * h);
                    }
                    let numeric = c(fd[0], fd[1]) * 0.5;
                    let err = (numeric - grad[(i, j)]).norm();
                    assert!(err <= 1e-5 * grad.max_abs(), "trial {trial} ({i},{j}): {err:e}");
                }
            }
        }
    }
}
