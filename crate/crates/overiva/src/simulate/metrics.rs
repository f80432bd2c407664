use itertools::Itertools;

/// SDR ceiling, reached by exact (scaled) matches.
pub const SDR_CAP_DB: f64 = 200.0;

/// Largest source count handled by the exhaustive permutation search.
pub const MAX_PERMUTED: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("reference image is silent")]
    ZeroReference,
    #[error("reference and estimate differ in shape")]
    LengthMismatch,
    #[error("{0} sources exceed the permutation search limit of {MAX_PERMUTED}")]
    TooManySources(usize),
}

fn inner(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

/// Scale-invariant SDR of a multichannel image: the estimate is projected
/// onto the reference with a single optimal gain `α`, and
/// `SDR = 10 log10(‖α r‖² / ‖α r − e‖²)`, clamped to `±SDR_CAP_DB`.
pub fn sdr(reference: &[Vec<f64>], estimate: &[Vec<f64>]) -> Result<f64, MetricError> {
    if reference.len() != estimate.len() || reference.iter().zip(estimate).any(|(r, e)| r.len() != e.len()) {
        return Err(MetricError::LengthMismatch);
    }
    let rr = inner(reference, reference);
    if rr == 0.0 {
        return Err(MetricError::ZeroReference);
    }
    let alpha = inner(estimate, reference) / rr;
    let target = alpha * alpha * rr;
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| r.iter().zip(e).map(|(p, q)| (alpha * p - q).powi(2)).sum::<f64>())
        .sum();
    let db = 10.0 * (target / err).log10();
    Ok(if db.is_nan() {
        -SDR_CAP_DB
    } else {
        db.clamp(-SDR_CAP_DB, SDR_CAP_DB)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrSet {
    /// SDR of each reference against its assigned estimate.
    pub per_source: Vec<f64>,
    pub mean: f64,
    /// `permutation[k]` is the estimate assigned to reference `k`.
    pub permutation: Vec<usize>,
}

/// Best assignment of estimates to references by mean SDR, over all
/// permutations (the first one found wins ties).
pub fn sdr_set(references: &[Vec<Vec<f64>>], estimates: &[Vec<Vec<f64>>]) -> Result<SdrSet, MetricError> {
    let k = references.len();
    if estimates.len() != k || k == 0 {
        return Err(MetricError::LengthMismatch);
    }
    if k > MAX_PERMUTED {
        return Err(MetricError::TooManySources(k));
    }
    let mut table = vec![vec![0.0; k]; k];
    for (r, row) in table.iter_mut().enumerate() {
        for (e, cell) in row.iter_mut().enumerate() {
            *cell = sdr(&references[r], &estimates[e])?;
        }
    }
    let mut best: Option<SdrSet> = None;
    for perm in (0..k).permutations(k) {
        let per_source: Vec<f64> = perm.iter().enumerate().map(|(r, &e)| table[r][e]).collect();
        let mean = per_source.iter().sum::<f64>() / k as f64;
        if best.as_ref().is_none_or(|b| mean > b.mean) {
            best = Some(SdrSet {
                per_source,
                mean,
                permutation: perm,
            });
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Real-time factor: compute seconds per second of audio.
pub fn rtf(wall_time_s: f64, signal_duration_s: f64) -> f64 {
    wall_time_s / signal_duration_s
}
