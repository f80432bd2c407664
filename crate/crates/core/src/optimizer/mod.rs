//! Iterative-projection updates and the separation main loop.

mod sweeps;
mod updates;

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::linalg::{cholesky, dot, inverse, CMatrix, LinalgError, C64};
use crate::model::{
    cost_total, noise_covariance, separate, update_variances, weighted_covariances_bin, DemixingStack, Ridge,
    VarianceMap,
};
use crate::{Error, Result, Spectrogram};

pub use sweeps::{ip0_sweep, ip1_sweep, ip1_sweep_observed, ip2_step, ip3_sweep, ip3_sweep_observed, WzUpdate};
pub use updates::{
    ip0_update_row, ip2_complete_wz, ip2_update, oc_residual, update_wz_fast, update_wz_full, Ip2Solution,
};

/// Separation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Determined IVA over all `M` outputs, keeping the `K` most powerful.
    AuxIva,
    Ip1,
    /// Only valid for a single target.
    Ip2,
    Ip3,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::AuxIva, Method::Ip1, Method::Ip2, Method::Ip3];

    pub fn name(self) -> &'static str {
        match self {
            Method::AuxIva => "auxiva",
            Method::Ip1 => "ip1",
            Method::Ip2 => "ip2",
            Method::Ip3 => "ip3",
        }
    }

    pub fn default_iterations(self) -> usize {
        match self {
            Method::Ip2 => 3,
            _ => 50,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod;

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected one of auxiva, ip1, ip2, ip3")
    }
}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or(UnknownMethod)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub iterations: usize,
    /// Variance floor.
    pub eps1: f64,
    /// Diagonal loading of every covariance.
    pub eps2: f64,
    /// Scale `eps2` by `tr G / M` instead of applying it as is.
    pub relative_ridge: bool,
    /// Recorded for reports; the optimizer itself is deterministic.
    pub seed: u64,
    /// Stop once the relative cost change falls below this.
    pub convergence_delta: Option<f64>,
    pub wz_update: WzUpdate,
    /// Process bins on the rayon pool (needs the `parallel` feature).
    pub parallel: bool,
    /// Evaluate the total cost after every iteration.
    pub record_cost: bool,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            iterations: method.default_iterations(),
            eps1: 1e-5,
            eps2: 1e-1,
            relative_ridge: false,
            seed: 0,
            convergence_delta: None,
            wz_update: WzUpdate::Fast,
            parallel: false,
            record_cost: true,
        }
    }

    pub fn ridge(&self) -> Ridge {
        if self.relative_ridge {
            Ridge::TraceRelative(self.eps2)
        } else {
            Ridge::Absolute(self.eps2)
        }
    }

    fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1"));
        }
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) {
            return Err(Error::InvalidConfig("eps1 must be positive"));
        }
        if !(self.eps2 > 0.0 && self.eps2.is_finite()) {
            return Err(Error::InvalidConfig("eps2 must be positive"));
        }
        if matches!(self.convergence_delta, Some(d) if !(d >= 0.0)) {
            return Err(Error::InvalidConfig("convergence delta must be nonnegative"));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::new(Method::Ip1)
    }
}

/// Callbacks into a running separation.
pub trait RunHooks {
    /// Monotonic clock in seconds. Without one, no wall time is reported.
    fn now(&mut self) -> Option<f64> {
        None
    }

    /// Whether [`RunHooks::after_wz_update`] should be called. Returning
    /// `true` forces sequential processing of the bins.
    fn observes_wz(&self) -> bool {
        false
    }

    /// Called with `W(f)` and the (loaded) `G_z(f)` after every `W_z`
    /// refresh inside a sweep.
    fn after_wz_update(&mut self, _iteration: usize, _bin: usize, _w: &CMatrix, _gz: &CMatrix) {}
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoHooks;

impl RunHooks for NoHooks {}

#[derive(Debug, Clone)]
pub struct SeparationResult {
    /// Final demixing matrices; for AuxIVA the selected outputs are moved
    /// to the leading columns.
    pub demixing: DemixingStack,
    /// Normalized variances of the returned targets.
    pub variances: VarianceMap,
    /// One projected-back spatial image per target, `F × T × M`.
    pub images: Vec<Spectrogram>,
    /// AuxIVA output indices kept, in order; `0..K` otherwise.
    pub selected: Vec<usize>,
    /// Total cost after each iteration, when recorded.
    pub cost_trace: Vec<f64>,
    pub iterations_run: usize,
    /// Seconds spent in the algorithm proper, when a clock was supplied.
    pub wall_time: Option<f64>,
}

/// `(W^{−ᴴ} e_k)(w_kᴴ x)`: output `k` rescaled to its image at the microphones.
pub fn projection_back(w: &CMatrix, x: &[C64], k: usize) -> core::result::Result<Vec<C64>, LinalgError> {
    let a = inverse(w)?.adjoint().col(k);
    let s = dot(&w.col(k), x);
    Ok(a.into_iter().map(|v| v * s).collect())
}

/// Spatial images of the first `count` outputs.
pub fn spatial_images(w: &DemixingStack, x: &Spectrogram, count: usize) -> Result<Vec<Spectrogram>> {
    let (bins, frames, m) = (x.bins(), x.frames(), x.channels());
    let mut images: Vec<Spectrogram> = (0..count).map(|_| Spectrogram::zeros(bins, frames, m)).collect();
    for f in 0..bins {
        let wf = w.get(f);
        let a = inverse(wf).map_err(Error::at_bin(f))?.adjoint();
        let filters: Vec<Vec<C64>> = (0..count).map(|k| wf.col(k)).collect();
        let steering: Vec<Vec<C64>> = (0..count).map(|k| a.col(k)).collect();
        for t in 0..frames {
            let xt = x.frame(f, t);
            for k in 0..count {
                let s = dot(&filters[k], xt);
                let out = images[k].frame_mut(f, t);
                for (o, ai) in out.iter_mut().zip(&steering[k]) {
                    *o = ai * s;
                }
            }
        }
    }
    Ok(images)
}

/// Indices of the `k` images with the largest total power, descending;
/// ties go to the lower index.
pub fn pick_top_k(images: &[Spectrogram], k: usize) -> Vec<usize> {
    let powers: Vec<f64> = images.iter().map(Spectrogram::power).collect();
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.sort_by(|&a, &b| powers[b].total_cmp(&powers[a]));
    order.truncate(k);
    order
}

/// Rescales every variance row to unit mean and the matching filter by
/// `c_k^{-1/2}`. The total cost is unchanged when no variance sits on the floor.
pub fn normalize(w: &mut DemixingStack, lambda: &mut VarianceMap) {
    for k in 0..lambda.sources() {
        let c = lambda.mean(k);
        if !(c > 0.0 && c.is_finite()) {
            continue;
        }
        for l in lambda.row_mut(k) {
            *l /= c;
        }
        w.scale_column(k, 1.0 / libm::sqrt(c));
    }
}

pub fn run(x: &Spectrogram, k: usize, cfg: &RunConfig) -> Result<SeparationResult> {
    run_with(x, k, cfg, &mut NoHooks)
}

fn check_inputs(x: &Spectrogram, k: usize, cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let m = x.channels();
    match cfg.method {
        Method::AuxIva if k == 0 || k > m => {
            return Err(Error::InvalidK {
                k,
                channels: m,
                reason: "need 1 <= K <= M",
            })
        }
        Method::Ip1 | Method::Ip2 | Method::Ip3 if k == 0 || k >= m => {
            return Err(Error::InvalidK {
                k,
                channels: m,
                reason: "need 1 <= K <= M-1",
            })
        }
        Method::Ip2 if k != 1 => return Err(Error::Ip2RequiresSingleSource { k }),
        _ => {}
    }
    if !x.is_finite() {
        return Err(Error::InvalidConfig("input spectrogram is not finite"));
    }
    Ok(())
}

struct BinContext<'a> {
    x: &'a Spectrogram,
    lambda: &'a VarianceMap,
    gz: &'a [CMatrix],
    cfg: &'a RunConfig,
}

impl BinContext<'_> {
    fn step(&self, f: usize, w: &mut CMatrix, observer: &mut dyn FnMut(&CMatrix)) -> Result<()> {
        let gs = weighted_covariances_bin(self.x, f, self.lambda, self.cfg.ridge());
        let gz = &self.gz[f];
        let mode = self.cfg.wz_update;
        match self.cfg.method {
            Method::AuxIva => ip0_sweep(w, &gs, gz),
            Method::Ip1 => ip1_sweep_observed(w, &gs, gz, mode, observer),
            Method::Ip3 => ip3_sweep_observed(w, &gs, gz, mode, observer),
            Method::Ip2 => ip2_step(w, &gs[0], gz).map(|_| ()),
        }
        .map_err(Error::at_bin(f))
    }
}

/// Runs the separation with caller-supplied hooks. `k` is the number of
/// targets returned.
pub fn run_with(x: &Spectrogram, k: usize, cfg: &RunConfig, hooks: &mut dyn RunHooks) -> Result<SeparationResult> {
    check_inputs(x, k, cfg)?;
    let (bins, m) = (x.bins(), x.channels());
    let modelled = if cfg.method == Method::AuxIva { m } else { k };

    let mut elapsed = 0.0;
    let mut start = hooks.now();

    let mut w = DemixingStack::identity(bins, m, modelled);
    let mut gz = noise_covariance(x);
    for g in &mut gz {
        // Only rank-deficient sample covariances are loaded; a ridge on a
        // healthy G_z biases the noise subspace.
        if cholesky(g).is_err() {
            cfg.ridge().apply(g);
        }
    }
    let mut lambda = VarianceMap::filled(modelled, x.frames(), 1.0);
    let mut cost_trace = Vec::new();
    let mut iterations_run = 0;

    for iteration in 0..cfg.iterations {
        let s = separate(&w, x, modelled);
        lambda = update_variances(&s, cfg.eps1);
        let ctx = BinContext {
            x,
            lambda: &lambda,
            gz: &gz,
            cfg,
        };
        sweep_all(&ctx, &mut w, iteration, hooks)?;
        normalize(&mut w, &mut lambda);
        iterations_run += 1;

        if let (Some(t0), Some(t1)) = (start, hooks.now()) {
            elapsed += t1 - t0;
        }
        let track = cfg.record_cost || cfg.convergence_delta.is_some();
        if track {
            let j = traced_cost(&w, &lambda, x, &gz, cfg.method)?;
            let prev = cost_trace.last().copied();
            cost_trace.push(j);
            if let (Some(delta), Some(prev)) = (cfg.convergence_delta, prev) {
                if libm::fabs(prev - j) <= delta * libm::fabs(j) {
                    break;
                }
            }
        }
        start = hooks.now();
    }

    if cfg.method == Method::Ip2 {
        for (f, wf) in w.matrices_mut().iter_mut().enumerate() {
            let wz = match cfg.wz_update {
                WzUpdate::Fast => update_wz_fast(&wf.columns(0..1), &gz[f]),
                WzUpdate::Full => update_wz_full(wf, &gz[f], 1),
            }
            .map_err(Error::at_bin(f))?;
            wf.set_columns(1, &wz);
        }
    }

    let mut images = spatial_images(&w, x, modelled)?;
    let selected: Vec<usize> = if cfg.method == Method::AuxIva {
        pick_top_k(&images, k)
    } else {
        (0..k).collect()
    };
    if cfg.method == Method::AuxIva {
        let mut slots: Vec<Option<Spectrogram>> = images.into_iter().map(Some).collect();
        images = selected.iter().map(|&i| slots[i].take().unwrap()).collect();
        let mut order = selected.clone();
        order.extend((0..m).filter(|i| !selected.contains(i)));
        let mats = w
            .matrices()
            .iter()
            .map(|wf| CMatrix::from_fn(m, m, |r, c| wf[(r, order[c])]))
            .collect();
        w = DemixingStack::from_matrices(k, mats)?;
        let rows: Vec<Vec<f64>> = selected.iter().map(|&i| lambda.row(i).to_vec()).collect();
        lambda = VarianceMap::from_rows(&rows);
    }

    if let (Some(t0), Some(t1)) = (start, hooks.now()) {
        elapsed += t1 - t0;
    }
    let wall_time = hooks.now().map(|_| elapsed);

    Ok(SeparationResult {
        demixing: w,
        variances: lambda,
        images,
        selected,
        cost_trace,
        iterations_run,
        wall_time,
    })
}

fn sweep_all(ctx: &BinContext<'_>, w: &mut DemixingStack, iteration: usize, hooks: &mut dyn RunHooks) -> Result<()> {
    if hooks.observes_wz() {
        for (f, wf) in w.matrices_mut().iter_mut().enumerate() {
            let gz = &ctx.gz[f];
            ctx.step(f, wf, &mut |w| hooks.after_wz_update(iteration, f, w, gz))?;
        }
        return Ok(());
    }
    #[cfg(feature = "parallel")]
    if ctx.cfg.parallel {
        use rayon::prelude::*;
        return w
            .matrices_mut()
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(f, wf)| ctx.step(f, wf, &mut |_| {}));
    }
    for (f, wf) in w.matrices_mut().iter_mut().enumerate() {
        ctx.step(f, wf, &mut |_| {})?;
    }
    Ok(())
}

/// IP-2 leaves `W_z` stale until the end, so its cost is evaluated with the
/// noise block minimized on a copy.
fn traced_cost(
    w: &DemixingStack,
    lambda: &VarianceMap,
    x: &Spectrogram,
    gz: &[CMatrix],
    method: Method,
) -> Result<f64> {
    if method != Method::Ip2 {
        return cost_total(w, lambda, x);
    }
    let mut full = w.clone();
    for (f, wf) in full.matrices_mut().iter_mut().enumerate() {
        let wz = update_wz_full(wf, &gz[f], 1).map_err(Error::at_bin(f))?;
        wf.set_columns(1, &wz);
    }
    cost_total(&full, lambda, x)
}
