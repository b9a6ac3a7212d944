//! Generators for randomized testing: points, isometries, synthetic
//! pick-freeze instances and discrete models, all driven by an explicit RNG
//! so suites stay reproducible.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::manifold::{Geometry, Isometry, ManifoldKind, ManifoldPoint};
use crate::models::{PickFreezeSample, WPool};
use crate::oracles::DiscreteModel;
use crate::rng::{StreamKey, StreamRole};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| normal(rng));
    g.qr().q()
}

/// A well-spread random point of the given backend.
pub fn random_point(kind: &ManifoldKind, rng: &mut ChaCha8Rng) -> ManifoldPoint {
    match kind.geometry {
        Geometry::RealLine => ManifoldPoint::Scalar(2.0 * normal(rng)),
        Geometry::Circle { dim } => {
            loop {
                let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    return ManifoldPoint::UnitVector(v.into_iter().map(|x| x / norm).collect());
                }
            }
        }
        Geometry::SpdAffine { size } => {
            // Q diag(e^u) Q^T with u uniform in [-1.2, 1.2]: condition <= e^2.4.
            let q = random_orthogonal(size, rng);
            let vals = DMatrix::from_fn(size, size, |i, j| {
                if i == j {
                    rng.random_range(-1.2..1.2_f64).exp()
                } else {
                    0.0
                }
            });
            let m = &q * vals * q.transpose();
            ManifoldPoint::Spd(0.5 * (&m + m.transpose()))
        }
        Geometry::LogSurface => {
            let u: f64 = rng.random_range(-1.5..1.5);
            let v: f64 = rng.random_range(-1.5..1.5);
            ManifoldPoint::LogSurface([u.exp(), v.exp(), (-u - v).exp()])
        }
        Geometry::EuclidQuadrant { dim } => {
            ManifoldPoint::Euclid((0..dim).map(|_| 2.0 * normal(rng)).collect())
        }
    }
}

/// A random isometry valid for the backend. Congruence matrices are built
/// with singular values in [1/2, 2], keeping the condition number small.
pub fn random_isometry(kind: &ManifoldKind, rng: &mut ChaCha8Rng) -> Isometry {
    match kind.geometry {
        Geometry::RealLine => Isometry::ScalarAffine {
            reflect: rng.random_bool(0.5),
            offset: rng.random_range(-2.0..2.0),
        },
        Geometry::Circle { dim } => Isometry::Rotation(random_orthogonal(dim, rng)),
        Geometry::SpdAffine { size } => {
            let q1 = random_orthogonal(size, rng);
            let q2 = random_orthogonal(size, rng);
            let sv = DMatrix::from_fn(size, size, |i, j| {
                if i == j {
                    rng.random_range(0.5..2.0)
                } else {
                    0.0
                }
            });
            Isometry::Congruence(q1 * sv * q2)
        }
        Geometry::LogSurface => {
            let mut perm = [0usize, 1, 2];
            for i in (1..3).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            Isometry::CoordPermutation(perm)
        }
        Geometry::EuclidQuadrant { dim } => Isometry::Rotation(random_orthogonal(dim, rng)),
    }
}

/// Synthetic pick-freeze instance: the pair members are correlated draws so
/// both kernels see a mix of agreements and disagreements.
pub fn random_instance(
    kind: &ManifoldKind,
    n: usize,
    n_w: usize,
    seed: u64,
) -> (PickFreezeSample, WPool) {
    let mut rng = StreamKey::new(seed, StreamRole::Pairs, 0).rng();
    let pairs = (0..n)
        .map(|_| {
            let z = random_point(kind, &mut rng);
            // Half the pairs coincide, the rest are independent.
            let z_nu = if rng.random_bool(0.5) { z.clone() } else { random_point(kind, &mut rng) };
            (z, z_nu)
        })
        .collect();
    let mut wrng = StreamKey::new(seed, StreamRole::WPool, 0).rng();
    let points = (0..n_w).map(|_| random_point(kind, &mut wrng)).collect();
    (
        PickFreezeSample {
            nu: vec![0],
            pairs,
            stream: StreamKey::new(seed, StreamRole::Pairs, 0),
        },
        WPool { points, stream: StreamKey::new(seed, StreamRole::WPool, 0) },
    )
}

/// The four geometries the experiments run on.
pub fn core_backends() -> Vec<ManifoldKind> {
    vec![
        ManifoldKind::real_line(),
        ManifoldKind::circle(2),
        ManifoldKind::spd(2),
        ManifoldKind::log_surface(),
    ]
}

/// Random discrete model on the given backend: 2-3 input coordinates with
/// 2-3 support points each and a random output table.
pub fn random_discrete_model(kind: &ManifoldKind, rng: &mut ChaCha8Rng) -> (DiscreteModel, Vec<usize>) {
    let dim = rng.random_range(2..=3);
    let mut grids = Vec::with_capacity(dim);
    for _ in 0..dim {
        let support = rng.random_range(2..=3);
        let raw: Vec<f64> = (0..support).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        // Renormalize so the weights sum to 1 exactly enough for the
        // constructor; fix the last weight to absorb rounding.
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let head: f64 = weights[..support - 1].iter().sum();
        weights[support - 1] = 1.0 - head;
        grids.push(
            weights
                .into_iter()
                .enumerate()
                .map(|(i, w)| (i as f64, w))
                .collect::<Vec<(f64, f64)>>(),
        );
    }
    let n_cells: usize = grids.iter().map(Vec::len).product();
    // Draw from a small palette so balls see repeated values, with a
    // fallback to fresh points to keep the table from being constant.
    let palette: Vec<ManifoldPoint> =
        (0..3).map(|_| random_point(kind, rng)).collect();
    let outputs: Vec<ManifoldPoint> = (0..n_cells)
        .map(|_| {
            if rng.random_bool(0.7) {
                palette[rng.random_range(0..palette.len())].clone()
            } else {
                random_point(kind, rng)
            }
        })
        .collect();
    let dm = DiscreteModel::new(grids, outputs, kind).expect("generated model is valid");
    let nu = vec![rng.random_range(0..dim)];
    (dm, nu)
}
