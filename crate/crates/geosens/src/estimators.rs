//! The ball sensitivity index estimator and its companions.
//!
//! For a W-pool pair tau = (W_a, W_b) write h for the indicator of the ball
//! of diameter W_a W_b. With G_j = h(Z_j) h(Z_j^nu) and
//! J_j = (h(Z_j) + h(Z_j^nu)) / 2 the estimator accumulates, per tau,
//!
//! ```text
//!   S_tau = mean_j G_j - (mean_j J_j)^2
//!   D_tau = Jbar (1 - Jbar),   Jbar = mean_j J_j
//! ```
//!
//! and averages over all C(Nw, 2) pairs (exact mode) or a uniform subset of
//! them (incomplete mode). The single-sum form of S_tau equals the double
//! H-sum it replaces because sum_{i,j} J_i J_j = (sum_j J_j)^2; it just
//! avoids the quadratic pass.
//!
//! Per-tau tallies are kept as integers, so estimates are bit-identical
//! under any reordering of the pairs and depend only on the multiset of
//! indicator bits. That is what makes the isometry-invariance guarantees
//! exact rather than approximate.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::manifold::{FastPoint, ManifoldError, ManifoldKind, ManifoldPoint, PreparedBall};
use crate::models::{PickFreezeSample, WPool};
use crate::rng::{StreamKey, StreamRole};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("every W pair failed to produce a ball; no term left to average")]
    DegenerateBalls,
    #[error("degenerate denominator: D-hat = {0:e} is not positive")]
    DegenerateDenominator(f64),
    #[error("outputs cannot be embedded in R^p: {0}")]
    EmbeddingUnsupported(String),
    #[error("expected scalar outputs, found {0}")]
    NotScalar(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// How the average over W pairs is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// All C(Nw, 2) pairs.
    ExactU,
    /// `m` pairs drawn uniformly without replacement from the C(Nw, 2).
    IncompleteU(usize),
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::ExactU => write!(f, "exact"),
            Mode::IncompleteU(m) => write!(f, "incomplete:{m}"),
        }
    }
}

/// Point estimate of (S, D, B = S/D) with its sampling metadata.
#[derive(Debug, Clone)]
pub struct IndexEstimate {
    pub s_hat: f64,
    pub d_hat: f64,
    pub b_hat: f64,
    pub n_pairs: usize,
    pub n_w: usize,
    pub mode: Mode,
    /// W pairs dropped because no unique geodesic joined them.
    pub dropped_tau: usize,
    /// W pairs actually averaged.
    pub used_tau: usize,
    pub elapsed: Duration,
}

impl IndexEstimate {
    /// True when more than 1% of the W pairs were dropped and the estimate
    /// deserves a second look.
    pub fn excessive_drops(&self) -> bool {
        let total = self.used_tau + self.dropped_tau;
        total > 0 && (self.dropped_tau as f64) > 0.01 * total as f64
    }
}

/// Denominators below this are reported as degenerate rather than divided by.
const DENOMINATOR_FLOOR: f64 = 1e-12;

/// G kernel: both members of the pick-freeze pair fall in the ball of
/// diameter w_pair.
pub fn kernel_g(
    kind: &ManifoldKind,
    z_pair: (&ManifoldPoint, &ManifoldPoint),
    w_pair: (&ManifoldPoint, &ManifoldPoint),
) -> Result<u8> {
    let ball = kind.prepare_ball(w_pair.0, w_pair.1)?;
    Ok(u8::from(ball.contains(z_pair.0) && ball.contains(z_pair.1)))
}

/// J kernel: the average of the two memberships, in {0, 1/2, 1}.
pub fn kernel_j(
    kind: &ManifoldKind,
    z_pair: (&ManifoldPoint, &ManifoldPoint),
    w_pair: (&ManifoldPoint, &ManifoldPoint),
) -> Result<f64> {
    let ball = kind.prepare_ball(w_pair.0, w_pair.1)?;
    Ok(0.5 * (f64::from(ball.contains(z_pair.0)) + f64::from(ball.contains(z_pair.1))))
}

/// Deduplicated view of the pick-freeze sample: membership is evaluated once
/// per distinct point and per ball, then weighted by pair multiplicities.
/// This is exact (bits are bits) and turns discrete-output models from the
/// worst case into the cheapest one.
pub struct KernelCache {
    unique: Vec<FastPoint>,
    /// (index of Z_j, index of Z_j^nu, multiplicity).
    classes: Vec<(u32, u32, u64)>,
    member: Vec<bool>,
}

impl KernelCache {
    pub fn build(pairs: &PickFreezeSample) -> Self {
        let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
        let mut unique = Vec::new();
        let mut intern = |p: &ManifoldPoint, unique: &mut Vec<FastPoint>| -> u32 {
            let key = p.canonical_bytes();
            *ids.entry(key).or_insert_with(|| {
                unique.push(FastPoint::of(p));
                (unique.len() - 1) as u32
            })
        };
        let mut class_counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (z, z_nu) in &pairs.pairs {
            let a = intern(z, &mut unique);
            let b = intern(z_nu, &mut unique);
            *class_counts.entry((a, b)).or_insert(0) += 1;
        }
        let mut classes: Vec<(u32, u32, u64)> =
            class_counts.into_iter().map(|((a, b), c)| (a, b, c)).collect();
        classes.sort_unstable();
        let member = vec![false; unique.len()];
        KernelCache { unique, classes, member }
    }

    /// Integer tallies for one ball: (sum of G_j, sum of 2 J_j).
    fn tally(&mut self, ball: &PreparedBall) -> (u64, u64) {
        for (slot, point) in self.member.iter_mut().zip(&self.unique) {
            *slot = ball.contains_fast(point);
        }
        let mut c_g = 0u64;
        let mut c_j2 = 0u64;
        for &(a, b, count) in &self.classes {
            let ha = u64::from(self.member[a as usize]);
            let hb = u64::from(self.member[b as usize]);
            c_g += count * (ha & hb);
            c_j2 += count * (ha + hb);
        }
        (c_g, c_j2)
    }
}

/// Pair (i, j), i < j, at the given lexicographic rank over n items.
/// Rank of (i, j) is i(n-1) - i(i-1)/2 + (j - i - 1).
fn unrank_pair(index: u64, n: u64) -> (usize, usize) {
    // Rank of (i, i+1), written without u64 underflow at i = 0.
    let row_start = |i: u64| i * (n - 1) - (i * i - i) / 2;
    // Float guess for the row, then an integer fix-up to make it exact.
    let nf = n as f64;
    let disc = ((2.0 * nf - 1.0).powi(2) - 8.0 * index as f64).max(0.0).sqrt();
    let mut i = ((2.0 * nf - 1.0 - disc) * 0.5).floor().max(0.0) as u64;
    i = i.min(n - 2);
    while i < n - 2 && row_start(i + 1) <= index {
        i += 1;
    }
    while i > 0 && row_start(i) > index {
        i -= 1;
    }
    let j = i + 1 + (index - row_start(i));
    (i as usize, j as usize)
}

/// Sample `m` distinct values from 0..limit (Floyd's algorithm), sorted.
fn sample_indices(limit: u64, m: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut chosen = std::collections::HashSet::with_capacity(m as usize);
    for j in limit - m..limit {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut out: Vec<u64> = chosen.into_iter().collect();
    out.sort_unstable();
    out
}

struct SdAccumulator {
    s_sum: f64,
    d_sum: f64,
    used: usize,
    dropped: usize,
}

/// Core engine shared by `estimate_s`, `estimate_d` and `estimate_b`.
/// Iterates over W pairs in a canonical order and accumulates both sums.
fn accumulate_sd(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
    tau_rng: Option<&mut ChaCha8Rng>,
) -> Result<SdAccumulator> {
    let n = pairs.len();
    let n_w = wpool.len();
    if n < 2 {
        return Err(EstimatorError::TooFewSamples(format!("N = {n} pick-freeze pairs")));
    }
    if n_w < 2 {
        return Err(EstimatorError::TooFewSamples(format!("Nw = {n_w} W points")));
    }
    let total_tau = (n_w as u64) * (n_w as u64 - 1) / 2;
    let tau_indices: Option<Vec<u64>> = match mode {
        Mode::ExactU => None,
        Mode::IncompleteU(m) => {
            if m == 0 {
                return Err(EstimatorError::TooFewSamples("incomplete mode with m = 0".into()));
            }
            if (m as u64) >= total_tau {
                None
            } else {
                let mut own;
                let rng = match tau_rng {
                    Some(r) => r,
                    None => {
                        // Default tau-selection stream: bootstrap role of the
                        // W pool's stream, which no sampler ever uses.
                        own = StreamKey::new(
                            wpool.stream.seed,
                            StreamRole::Bootstrap,
                            wpool.stream.replicate,
                        )
                        .rng();
                        &mut own
                    }
                };
                Some(sample_indices(total_tau, m as u64, rng))
            }
        }
    };

    let mut cache = KernelCache::build(pairs);
    let inv_n = 1.0 / n as f64;
    let inv_2n = 0.5 * inv_n;
    let mut acc = SdAccumulator { s_sum: 0.0, d_sum: 0.0, used: 0, dropped: 0 };
    let mut visit = |a: usize, b: usize, acc: &mut SdAccumulator| -> Result<()> {
        let ball = match kind.prepare_ball(&wpool.points[a], &wpool.points[b]) {
            Ok(ball) => ball,
            Err(ManifoldError::AntipodalPoints) => {
                acc.dropped += 1;
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        let (c_g, c_j2) = cache.tally(&ball);
        let g_bar = c_g as f64 * inv_n;
        let j_bar = c_j2 as f64 * inv_2n;
        acc.s_sum += g_bar - j_bar * j_bar;
        // Written as j - j^2 (not j(1-j)) so that a model depending only on
        // the frozen coordinates gives S-hat == D-hat bitwise.
        acc.d_sum += j_bar - j_bar * j_bar;
        acc.used += 1;
        Ok(())
    };
    match &tau_indices {
        None => {
            for a in 0..n_w {
                for b in a + 1..n_w {
                    visit(a, b, &mut acc)?;
                }
            }
        }
        Some(indices) => {
            for &idx in indices {
                let (a, b) = unrank_pair(idx, n_w as u64);
                visit(a, b, &mut acc)?;
            }
        }
    }
    if acc.used == 0 {
        return Err(EstimatorError::DegenerateBalls);
    }
    Ok(acc)
}

/// Numerator estimate S-hat. May be negative in finite samples; it is
/// reported as-is.
pub fn estimate_s(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
) -> Result<f64> {
    let acc = accumulate_sd(pairs, wpool, kind, mode, None)?;
    Ok(acc.s_sum / acc.used as f64)
}

/// Denominator estimate D-hat, in [0, 1/4].
pub fn estimate_d(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
) -> Result<f64> {
    let acc = accumulate_sd(pairs, wpool, kind, mode, None)?;
    Ok(acc.d_sum / acc.used as f64)
}

/// The normalized ball index B-hat = S-hat / D-hat with metadata.
pub fn estimate_b(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
) -> Result<IndexEstimate> {
    estimate_b_with_tau_rng(pairs, wpool, kind, mode, None)
}

/// Same as [`estimate_b`] but with an explicit stream for the incomplete-U
/// pair selection (used by bootstrap replicates).
pub fn estimate_b_with_tau_rng(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
    mode: Mode,
    tau_rng: Option<&mut ChaCha8Rng>,
) -> Result<IndexEstimate> {
    let start = Instant::now();
    let acc = accumulate_sd(pairs, wpool, kind, mode, tau_rng)?;
    let s_hat = acc.s_sum / acc.used as f64;
    let d_hat = acc.d_sum / acc.used as f64;
    if d_hat.is_nan() || d_hat <= DENOMINATOR_FLOOR {
        return Err(EstimatorError::DegenerateDenominator(d_hat));
    }
    Ok(IndexEstimate {
        s_hat,
        d_hat,
        b_hat: s_hat / d_hat,
        n_pairs: pairs.len(),
        n_w: wpool.len(),
        mode,
        dropped_tau: acc.dropped,
        used_tau: acc.used,
        elapsed: start.elapsed(),
    })
}

/// Embed an output point in R^p for the quadrant (Cramér-von Mises) kernel.
pub fn embed(point: &ManifoldPoint) -> Result<Vec<f64>> {
    match point {
        ManifoldPoint::Scalar(v) => Ok(vec![*v]),
        ManifoldPoint::UnitVector(v) | ManifoldPoint::Euclid(v) => Ok(v.clone()),
        ManifoldPoint::LogSurface(c) => Ok(c.to_vec()),
        ManifoldPoint::Spd(m) => {
            // Lower triangle, row by row; duplicated entries would not
            // change a componentwise comparison.
            let n = m.nrows();
            let mut out = Vec::with_capacity(n * (n + 1) / 2);
            for i in 0..n {
                for j in 0..=i {
                    out.push(m[(i, j)]);
                }
            }
            Ok(out)
        }
    }
}

fn leq_componentwise(z: &[f64], w: &[f64]) -> bool {
    z.iter().zip(w).all(|(a, b)| a <= b)
}

/// Quadrant-kernel comparison index: the same S/D construction with the
/// ball indicator replaced by the left-lower-quadrant indicator 1{z <= w}
/// and single-point W sets.
pub fn estimate_cvm(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    mode: Mode,
) -> Result<f64> {
    let n = pairs.len();
    let n_w = wpool.len();
    if n < 2 {
        return Err(EstimatorError::TooFewSamples(format!("N = {n} pick-freeze pairs")));
    }
    if n_w < 1 {
        return Err(EstimatorError::TooFewSamples("empty W pool".into()));
    }
    let embedded: Vec<(Vec<f64>, Vec<f64>)> = pairs
        .pairs
        .iter()
        .map(|(z, z_nu)| Ok((embed(z)?, embed(z_nu)?)))
        .collect::<Result<_>>()?;
    let w_points: Vec<Vec<f64>> = wpool.points.iter().map(embed).collect::<Result<_>>()?;
    let dim = w_points[0].len();
    if embedded.iter().any(|(a, b)| a.len() != dim || b.len() != dim) {
        return Err(EstimatorError::EmbeddingUnsupported(
            "pairs and W pool embed with different dimensions".into(),
        ));
    }

    let w_indices: Vec<usize> = match mode {
        Mode::ExactU => (0..n_w).collect(),
        Mode::IncompleteU(m) => {
            if m >= n_w {
                (0..n_w).collect()
            } else {
                let mut rng = StreamKey::new(
                    wpool.stream.seed,
                    StreamRole::Bootstrap,
                    wpool.stream.replicate,
                )
                .rng();
                sample_indices(n_w as u64, m as u64, &mut rng)
                    .into_iter()
                    .map(|i| i as usize)
                    .collect()
            }
        }
    };

    let inv_n = 1.0 / n as f64;
    let mut s_sum = 0.0;
    let mut d_sum = 0.0;
    for &k in &w_indices {
        let w = &w_points[k];
        let mut c_g = 0u64;
        let mut c_j2 = 0u64;
        for (z, z_nu) in &embedded {
            let hz = u64::from(leq_componentwise(z, w));
            let hv = u64::from(leq_componentwise(z_nu, w));
            c_g += hz & hv;
            c_j2 += hz + hv;
        }
        let g_bar = c_g as f64 * inv_n;
        let j_bar = c_j2 as f64 * 0.5 * inv_n;
        s_sum += g_bar - j_bar * j_bar;
        d_sum += j_bar - j_bar * j_bar;
    }
    let used = w_indices.len() as f64;
    let d_hat = d_sum / used;
    if d_hat.is_nan() || d_hat <= DENOMINATOR_FLOOR {
        return Err(EstimatorError::DegenerateDenominator(d_hat));
    }
    Ok((s_sum / used) / d_hat)
}

/// Classical pick-freeze estimator of Var(E[Z | X_nu]) for scalar outputs:
/// mean of Z_j Z_j^nu minus the squared pooled mean.
pub fn pick_freeze_variance_t(pairs: &PickFreezeSample) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(EstimatorError::TooFewSamples(format!("N = {n} pick-freeze pairs")));
    }
    let mut cross = 0.0;
    let mut pooled = 0.0;
    for (z, z_nu) in &pairs.pairs {
        match (z, z_nu) {
            (ManifoldPoint::Scalar(a), ManifoldPoint::Scalar(b)) => {
                cross += a * b;
                pooled += a + b;
            }
            other => return Err(EstimatorError::NotScalar(format!("{other:?}"))),
        }
    }
    let mean_pooled = pooled / (2.0 * n as f64);
    Ok(cross / n as f64 - mean_pooled * mean_pooled)
}
