//! Input distributions, the benchmark models, and pick-freeze sampling.
//!
//! A pick-freeze pair (Z_j, Z_j^nu) shares the same draw on the frozen
//! coordinates nu and uses an independent draw elsewhere. The W pool is a
//! separate i.i.d. sample of the output used to index geodesic balls; it is
//! drawn from a different RNG stream so its independence from the pairs is
//! a structural property, not a convention.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use thiserror::Error;

use crate::manifold::{ManifoldError, ManifoldKind, ManifoldPoint};
use crate::rng::{StreamKey, StreamRole};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid frozen index set: {0}")]
    InvalidNu(String),
    #[error("sampling stalled: {0} consecutive rejected draws")]
    SamplingStalled(usize),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// One independent input coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Bernoulli { p: f64 },
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, variance: f64 },
    /// Shape/scale parameterization: mean = shape * scale.
    Gamma { shape: f64, scale: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Marginal::Bernoulli { p } => (0.0..=1.0).contains(p),
            Marginal::Uniform { a, b } => b > a && a.is_finite() && b.is_finite(),
            Marginal::Normal { mean, variance } => mean.is_finite() && *variance > 0.0,
            Marginal::Gamma { shape, scale } => *shape > 0.0 && *scale > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidDistribution(format!("{self:?}")))
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Marginal::Bernoulli { p } => {
                if rng.random_bool(*p) {
                    1.0
                } else {
                    0.0
                }
            }
            Marginal::Uniform { a, b } => rng.random_range(*a..*b),
            Marginal::Normal { mean, variance } => {
                Normal::new(*mean, variance.sqrt()).expect("validated").sample(rng)
            }
            Marginal::Gamma { shape, scale } => {
                Gamma::new(*shape, *scale).expect("validated").sample(rng)
            }
        }
    }
}

/// Product law of independent coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub marginals: Vec<Marginal>,
}

impl DistributionSpec {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(ModelError::InvalidDistribution("no coordinates".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(DistributionSpec { marginals })
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    fn sample_row(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (slot, m) in out.iter_mut().zip(&self.marginals) {
            *slot = m.sample(rng);
        }
    }
}

/// Row-major n x d sample of the input law.
#[derive(Debug, Clone)]
pub struct InputMatrix {
    pub dim: usize,
    data: Vec<f64>,
}

impl InputMatrix {
    pub fn n_rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Draw `n` i.i.d. rows from the product law. Deterministic given the stream.
pub fn sample_inputs(dist: &DistributionSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<InputMatrix> {
    if n == 0 {
        return Err(ModelError::InvalidDistribution("need at least one row".into()));
    }
    let d = dist.dim();
    let mut data = vec![0.0; n * d];
    for i in 0..n {
        dist.sample_row(rng, &mut data[i * d..(i + 1) * d]);
    }
    Ok(InputMatrix { dim: d, data })
}

/// Which of the two stiffness scenarios to sample: Gamma-distributed or
/// uniformly distributed moduli.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StiffnessCase {
    Gamma,
    Uniform,
}

type CustomEval = Arc<dyn Fn(&[f64]) -> Result<ManifoldPoint> + Send + Sync>;

/// The model f mapping inputs to a manifold-valued output.
#[derive(Clone)]
pub enum ModelSpec {
    /// Z = alpha X1 + X2 with X1 ~ Bernoulli(p), X2 ~ U(0, b).
    Example1 { alpha: f64, p: f64, b: f64 },
    /// Z = X / |X| with X bivariate normal.
    Example2 { mu1: f64, mu2: f64, sigma1_sq: f64, sigma2_sq: f64 },
    /// Z = (X+Y, 1/X, X/(X+Y)) with X, Y i.i.d. Gamma(mu1, 1).
    Example3 { mu1: f64 },
    /// 6x6 isotropic stiffness matrix from the moduli (mu, K).
    /// Input coordinate 0 is mu, coordinate 1 is K.
    Stiffness { case: StiffnessCase, lambda_k: f64, lambda_mu: f64 },
    /// User-supplied evaluation hook.
    Custom { dim: usize, output: ManifoldKind, eval: CustomEval },
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Example1 { alpha, p, b } => {
                write!(f, "Example1 {{ alpha: {alpha}, p: {p}, b: {b} }}")
            }
            ModelSpec::Example2 { mu1, mu2, sigma1_sq, sigma2_sq } => write!(
                f,
                "Example2 {{ mu1: {mu1}, mu2: {mu2}, sigma1_sq: {sigma1_sq}, sigma2_sq: {sigma2_sq} }}"
            ),
            ModelSpec::Example3 { mu1 } => write!(f, "Example3 {{ mu1: {mu1} }}"),
            ModelSpec::Stiffness { case, lambda_k, lambda_mu } => write!(
                f,
                "Stiffness {{ case: {case:?}, lambda_k: {lambda_k}, lambda_mu: {lambda_mu} }}"
            ),
            ModelSpec::Custom { dim, output, .. } => {
                write!(f, "Custom {{ dim: {dim}, output: {output:?}, eval: <fn> }}")
            }
        }
    }
}

/// Threshold below which a stiffness modulus draw is treated as degenerate
/// and redrawn; keeps the output matrix safely positive definite when a
/// uniform case touches zero.
const MODULUS_FLOOR: f64 = 1e-10;

impl ModelSpec {
    /// Example 1 with the variance-matching uniform width b = sqrt(12 a^2 p (1-p)).
    pub fn example1(alpha: f64, p: f64) -> Self {
        let b = (12.0 * alpha * alpha * p * (1.0 - p)).sqrt();
        ModelSpec::Example1 { alpha, p, b }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ModelSpec::Example1 { .. }
            | ModelSpec::Example2 { .. }
            | ModelSpec::Example3 { .. }
            | ModelSpec::Stiffness { .. } => 2,
            ModelSpec::Custom { dim, .. } => *dim,
        }
    }

    /// Geometry of the output space.
    pub fn output_kind(&self) -> ManifoldKind {
        match self {
            ModelSpec::Example1 { .. } => ManifoldKind::real_line(),
            ModelSpec::Example2 { .. } => ManifoldKind::circle(2),
            ModelSpec::Example3 { .. } => ManifoldKind::log_surface(),
            ModelSpec::Stiffness { .. } => ManifoldKind::spd(6),
            ModelSpec::Custom { output, .. } => *output,
        }
    }

    /// The input law the model was defined with (None for custom models,
    /// which carry no canonical law).
    pub fn input_distribution(&self) -> Option<DistributionSpec> {
        let marginals = match self {
            ModelSpec::Example1 { p, b, .. } => {
                vec![Marginal::Bernoulli { p: *p }, Marginal::Uniform { a: 0.0, b: *b }]
            }
            ModelSpec::Example2 { mu1, mu2, sigma1_sq, sigma2_sq } => vec![
                Marginal::Normal { mean: *mu1, variance: *sigma1_sq },
                Marginal::Normal { mean: *mu2, variance: *sigma2_sq },
            ],
            ModelSpec::Example3 { mu1 } => vec![
                Marginal::Gamma { shape: *mu1, scale: 1.0 },
                Marginal::Gamma { shape: *mu1, scale: 1.0 },
            ],
            // gamma(1/lambda, lambda): mean 1, variance lambda.
            ModelSpec::Stiffness { case: StiffnessCase::Gamma, lambda_k, lambda_mu } => vec![
                Marginal::Gamma { shape: 1.0 / lambda_mu, scale: *lambda_mu },
                Marginal::Gamma { shape: 1.0 / lambda_k, scale: *lambda_k },
            ],
            ModelSpec::Stiffness { case: StiffnessCase::Uniform, lambda_k, lambda_mu } => vec![
                Marginal::Uniform { a: 1.0 - lambda_mu, b: 1.0 + lambda_mu },
                Marginal::Uniform { a: 1.0 - lambda_k, b: 1.0 + lambda_k },
            ],
            ModelSpec::Custom { .. } => return None,
        };
        Some(DistributionSpec { marginals })
    }
}

/// Evaluate the model at one input point.
pub fn evaluate_model(model: &ModelSpec, x: &[f64]) -> Result<ManifoldPoint> {
    if x.len() != model.input_dim() {
        return Err(ModelError::DegenerateInput(format!(
            "input has {} coordinates, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    match model {
        ModelSpec::Example1 { alpha, .. } => Ok(ManifoldPoint::Scalar(alpha * x[0] + x[1])),
        ModelSpec::Example2 { .. } => {
            let norm = x[0].hypot(x[1]);
            if norm < 1e-12 {
                return Err(ModelError::DegenerateInput(format!("|x| = {norm} below 1e-12")));
            }
            Ok(ManifoldPoint::UnitVector(vec![x[0] / norm, x[1] / norm]))
        }
        ModelSpec::Example3 { .. } => {
            let (a, b) = (x[0], x[1]);
            if a <= 0.0 || b <= 0.0 {
                return Err(ModelError::DegenerateInput(format!("need X, Y > 0, got ({a}, {b})")));
            }
            Ok(ManifoldPoint::LogSurface([a + b, 1.0 / a, a / (a + b)]))
        }
        ModelSpec::Stiffness { .. } => {
            let (mu, k) = (x[0], x[1]);
            if mu < MODULUS_FLOOR || k < MODULUS_FLOOR {
                return Err(ModelError::DegenerateInput(format!(
                    "moduli must exceed {MODULUS_FLOOR}, got mu = {mu}, K = {k}"
                )));
            }
            Ok(ManifoldPoint::Spd(stiffness_matrix(k, mu)))
        }
        ModelSpec::Custom { eval, .. } => eval(x),
    }
}

/// The 6x6 isotropic stiffness matrix: the upper 3x3 block is
/// (K - 2 mu / 3) on off-diagonal entries and K + 4 mu / 3 on the diagonal,
/// the lower block is mu I, and the off-blocks vanish.
pub fn stiffness_matrix(k: f64, mu: f64) -> DMatrix<f64> {
    let off = k - 2.0 * mu / 3.0;
    let diag = k + 4.0 * mu / 3.0;
    let mut m = DMatrix::zeros(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = if i == j { diag } else { off };
        }
        m[(i + 3, i + 3)] = mu;
    }
    m
}

/// N aligned pick-freeze pairs plus the frozen index set.
#[derive(Debug, Clone)]
pub struct PickFreezeSample {
    /// Sorted zero-based coordinate indices held fixed within each pair.
    pub nu: Vec<usize>,
    pub pairs: Vec<(ManifoldPoint, ManifoldPoint)>,
    pub stream: StreamKey,
}

impl PickFreezeSample {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Independent sample of Z used to index geodesic balls.
#[derive(Debug, Clone)]
pub struct WPool {
    pub points: Vec<ManifoldPoint>,
    pub stream: StreamKey,
}

impl WPool {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn validated_nu(nu: &[usize], dim: usize) -> Result<Vec<usize>> {
    let mut sorted = nu.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != nu.len() {
        return Err(ModelError::InvalidNu("duplicate indices".into()));
    }
    if sorted.is_empty() {
        return Err(ModelError::InvalidNu("empty index set".into()));
    }
    if sorted.last().is_some_and(|&last| last >= dim) {
        return Err(ModelError::InvalidNu(format!("index out of range for dimension {dim}")));
    }
    if sorted.len() == dim {
        return Err(ModelError::InvalidNu(
            "freezing every coordinate leaves nothing to resample".into(),
        ));
    }
    Ok(sorted)
}

/// Maximum consecutive rejected draws before sampling gives up.
const MAX_REJECTIONS: usize = 100;

/// Generate N pick-freeze pairs: Z_j = f(X_j) and Z_j^nu = f with the nu
/// coordinates copied from X_j and the rest taken from an independent draw.
///
/// Draws that the model rejects (degenerate inputs) are discarded and both
/// input vectors are redrawn, so the pair coupling is preserved.
pub fn pick_freeze(
    model: &ModelSpec,
    dist: &DistributionSpec,
    nu: &[usize],
    n: usize,
    stream: StreamKey,
) -> Result<PickFreezeSample> {
    let d = dist.dim();
    if d != model.input_dim() {
        return Err(ModelError::InvalidDistribution(format!(
            "law has {d} coordinates, model expects {}",
            model.input_dim()
        )));
    }
    let nu = validated_nu(nu, d)?;
    if n < 2 {
        return Err(ModelError::InvalidDistribution("need at least two pairs".into()));
    }
    let mut rng = stream.rng();
    let mut pairs = Vec::with_capacity(n);
    let mut x = vec![0.0; d];
    let mut x_prime = vec![0.0; d];
    let mut frozen = vec![0.0; d];
    for _ in 0..n {
        let mut rejections = 0;
        let pair = loop {
            dist.sample_row(&mut rng, &mut x);
            dist.sample_row(&mut rng, &mut x_prime);
            frozen.copy_from_slice(&x_prime);
            for &i in &nu {
                frozen[i] = x[i];
            }
            match (evaluate_model(model, &x), evaluate_model(model, &frozen)) {
                (Ok(z), Ok(z_nu)) => break (z, z_nu),
                _ => {
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        return Err(ModelError::SamplingStalled(rejections));
                    }
                }
            }
        };
        pairs.push(pair);
    }
    Ok(PickFreezeSample { nu, pairs, stream })
}

/// Draw Nw i.i.d. copies of Z from a stream disjoint from the pair stream.
pub fn sample_w_pool(
    model: &ModelSpec,
    dist: &DistributionSpec,
    n_w: usize,
    stream: StreamKey,
) -> Result<WPool> {
    if n_w < 2 {
        return Err(ModelError::InvalidDistribution("need at least two W points".into()));
    }
    if dist.dim() != model.input_dim() {
        return Err(ModelError::InvalidDistribution(format!(
            "law has {} coordinates, model expects {}",
            dist.dim(),
            model.input_dim()
        )));
    }
    let mut rng = stream.rng();
    let mut points = Vec::with_capacity(n_w);
    let mut x = vec![0.0; dist.dim()];
    for _ in 0..n_w {
        let mut rejections = 0;
        let z = loop {
            dist.sample_row(&mut rng, &mut x);
            match evaluate_model(model, &x) {
                Ok(z) => break z,
                Err(_) => {
                    rejections += 1;
                    if rejections >= MAX_REJECTIONS {
                        return Err(ModelError::SamplingStalled(rejections));
                    }
                }
            }
        };
        points.push(z);
    }
    Ok(WPool { points, stream })
}

/// Convenience: pairs and W pool for a model's canonical law, on the
/// standard stream roles for `seed` and `replicate`.
pub fn sample_study(
    model: &ModelSpec,
    nu: &[usize],
    n: usize,
    n_w: usize,
    seed: u64,
    replicate: u64,
) -> Result<(PickFreezeSample, WPool)> {
    let dist = model
        .input_distribution()
        .ok_or_else(|| ModelError::InvalidDistribution("custom model needs an explicit law".into()))?;
    let pairs = pick_freeze(model, &dist, nu, n, StreamKey::new(seed, StreamRole::Pairs, replicate))?;
    let pool = sample_w_pool(model, &dist, n_w, StreamKey::new(seed, StreamRole::WPool, replicate))?;
    Ok((pairs, pool))
}
