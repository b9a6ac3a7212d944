//! Bootstrap confidence intervals, mean-squared-deviation studies and the
//! empirical concentration diagnostic.
//!
//! Bootstrap replicates resample both the pick-freeze pairs and the W pool
//! with replacement; each replicate runs on its own RNG sub-stream, so the
//! replicate set is identical no matter how many worker threads execute it.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::estimators::{estimate_b_with_tau_rng, estimate_s, EstimatorError, Mode};
use crate::manifold::ManifoldKind;
use crate::models::{pick_freeze, sample_w_pool, DistributionSpec, ModelError, ModelSpec,
    PickFreezeSample, WPool};
use crate::rng::{StreamKey, StreamRole};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("bootstrap needs at least 100 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("confidence level must lie strictly between 0 and 1, got {0}")]
    InvalidLevel(f64),
    #[error("only {valid} of {requested} bootstrap replicates were usable")]
    TooFewValidReplicates { valid: usize, requested: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, InferenceError>;

/// Percentile-bootstrap interval for the ball index.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    /// Valid replicates that entered the percentile computation.
    pub replicates: usize,
    /// Replicates discarded because their resample was degenerate.
    pub discarded: usize,
    pub method: &'static str,
}

impl ConfidenceInterval {
    /// More than 5% of the replicates degenerated; the interval deserves a
    /// warning downstream.
    pub fn excessive_discards(&self) -> bool {
        let total = self.replicates + self.discarded;
        total > 0 && (self.discarded as f64) > 0.05 * total as f64
    }
}

/// Empirical quantile with linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Percentile bootstrap for B-hat: resample N pair indices and Nw W indices
/// with replacement, re-estimate, and take the (1-level)/2 tails.
///
/// Replicates whose resample has a degenerate denominator (or loses every
/// ball) are discarded and counted; fewer than reps/2 survivors is an error.
pub fn bootstrap_ci(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
    reps: usize,
    level: f64,
    stream: StreamKey,
) -> Result<ConfidenceInterval> {
    if reps < 100 {
        return Err(InferenceError::TooFewReplicates(reps));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(InferenceError::InvalidLevel(level));
    }
    let n = pairs.len();
    let n_w = wpool.len();
    let replicate_values: Vec<std::result::Result<Option<f64>, EstimatorError>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.child(r).rng();
            let resampled_pairs = PickFreezeSample {
                nu: pairs.nu.clone(),
                pairs: (0..n).map(|_| pairs.pairs[rng.random_range(0..n)].clone()).collect(),
                stream: pairs.stream,
            };
            let resampled_pool = WPool {
                points: (0..n_w).map(|_| wpool.points[rng.random_range(0..n_w)].clone()).collect(),
                stream: wpool.stream,
            };
            match estimate_b_with_tau_rng(&resampled_pairs, &resampled_pool, kind, mode, Some(&mut rng))
            {
                Ok(est) => Ok(Some(est.b_hat)),
                Err(EstimatorError::DegenerateDenominator(_)) | Err(EstimatorError::DegenerateBalls) => {
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut values = Vec::with_capacity(reps);
    let mut discarded = 0usize;
    for item in replicate_values {
        match item? {
            Some(v) => values.push(v),
            None => discarded += 1,
        }
    }
    if values.len() < reps.div_ceil(2) {
        return Err(InferenceError::TooFewValidReplicates { valid: values.len(), requested: reps });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tail = 0.5 * (1.0 - level);
    Ok(ConfidenceInterval {
        lower: percentile(&values, tail),
        upper: percentile(&values, 1.0 - tail),
        level,
        replicates: values.len(),
        discarded,
        method: "percentile-bootstrap",
    })
}

/// One row of a mean-squared-deviation study.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdRow {
    pub n: usize,
    pub mode: Mode,
    pub msd: f64,
    /// Monte Carlo standard error of the MSD estimate.
    pub mc_se: f64,
}

/// Mean squared deviation of B-hat from the known true index, across
/// `replicates` independent experiments per sample size.
#[allow(clippy::too_many_arguments)]
pub fn msd_study(
    model: &ModelSpec,
    dist: &DistributionSpec,
    nu: &[usize],
    kind: &ManifoldKind,
    sizes: &[(usize, Mode)],
    replicates: usize,
    b_true: f64,
    seed: u64,
) -> Result<Vec<MsdRow>> {
    if replicates == 0 {
        return Err(InferenceError::InvalidGrid("need at least one replicate".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for (size_idx, &(n, mode)) in sizes.iter().enumerate() {
        let sq_errors: Vec<Result<f64>> = (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let rep = size_idx as u64 * replicates as u64 + r;
                let pairs =
                    pick_freeze(model, dist, nu, n, StreamKey::new(seed, StreamRole::Pairs, rep))?;
                let pool =
                    sample_w_pool(model, dist, n, StreamKey::new(seed, StreamRole::WPool, rep))?;
                let est = estimate_b_with_tau_rng(&pairs, &pool, kind, mode, None)?;
                let err = est.b_hat - b_true;
                Ok(err * err)
            })
            .collect();
        let sq_errors: Vec<f64> = sq_errors.into_iter().collect::<Result<_>>()?;
        let r = sq_errors.len() as f64;
        let msd = sq_errors.iter().sum::<f64>() / r;
        let var = if sq_errors.len() > 1 {
            sq_errors.iter().map(|e| (e - msd) * (e - msd)).sum::<f64>() / (r - 1.0)
        } else {
            0.0
        };
        rows.push(MsdRow { n, mode, msd, mc_se: (var / r).sqrt() });
    }
    Ok(rows)
}

/// Empirical tail of |S-hat - S| against the exponential bound
/// 16 exp(-N (s/9)^2 / 8).
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub s_grid: Vec<f64>,
    /// P-hat(|S-hat - S| > s), one entry per grid point.
    pub empirical_tail: Vec<f64>,
    pub theoretical_bound: Vec<f64>,
    pub replicates: usize,
    /// Sorted absolute errors, kept for rate diagnostics.
    pub abs_errors: Vec<f64>,
}

impl ConcentrationReport {
    /// Quantile of |S-hat - S| over the replicates.
    pub fn error_quantile(&self, q: f64) -> f64 {
        percentile(&self.abs_errors, q)
    }
}

/// Estimate the tail frequencies of the numerator error at sample size `n`
/// (with Nw = n), over independent replicates.
#[allow(clippy::too_many_arguments)]
pub fn concentration_diagnostic(
    model: &ModelSpec,
    dist: &DistributionSpec,
    nu: &[usize],
    kind: &ManifoldKind,
    n: usize,
    replicates: usize,
    s_grid: &[f64],
    s_true: f64,
    seed: u64,
) -> Result<ConcentrationReport> {
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[0] > w[1]) || s_grid[0] < 0.0 {
        return Err(InferenceError::InvalidGrid(
            "grid must be non-empty, non-negative and ascending".into(),
        ));
    }
    if replicates == 0 {
        return Err(InferenceError::InvalidGrid("need at least one replicate".into()));
    }
    let errors: Vec<Result<f64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let pairs = pick_freeze(model, dist, nu, n, StreamKey::new(seed, StreamRole::Pairs, rep))?;
            let pool = sample_w_pool(model, dist, n, StreamKey::new(seed, StreamRole::WPool, rep))?;
            let s_hat = estimate_s(&pairs, &pool, kind, Mode::ExactU)?;
            Ok((s_hat - s_true).abs())
        })
        .collect();
    let mut abs_errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
    abs_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let r = abs_errors.len() as f64;
    let empirical_tail: Vec<f64> = s_grid
        .iter()
        .map(|&s| abs_errors.iter().filter(|&&e| e > s).count() as f64 / r)
        .collect();
    let theoretical_bound: Vec<f64> = s_grid
        .iter()
        .map(|&s| 16.0 * (-(n as f64) * (s / 9.0) * (s / 9.0) / 8.0).exp())
        .collect();
    Ok(ConcentrationReport {
        s_grid: s_grid.to_vec(),
        empirical_tail,
        theoretical_bound,
        replicates: abs_errors.len(),
        abs_errors,
    })
}
