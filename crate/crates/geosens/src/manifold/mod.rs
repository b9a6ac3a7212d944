//! Output-space geometries: distances, geodesic midpoints and the closed
//! balls of diameter pq that the sensitivity index integrates over.
//!
//! Five backends are provided: the real line, the unit sphere S^{d-1}
//! embedded in R^d, symmetric positive-definite matrices under the
//! affine-invariant metric, the surface {xyz = 1, x,y,z > 0} with the flat
//! metric in log coordinates, and plain Euclidean space. All operations are
//! pure functions; nothing here holds mutable state.

mod spd;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub(crate) use spd::log_norm_congruent;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("antipodal points: the geodesic joining them is not unique")]
    AntipodalPoints,
    #[error("isometry incompatible with this backend: {0}")]
    IncompatibleIsometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, ManifoldError>;

/// A point of one of the supported output spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldPoint {
    Scalar(f64),
    /// Unit vector in R^d, d >= 2.
    UnitVector(Vec<f64>),
    /// Symmetric positive-definite matrix.
    Spd(DMatrix<f64>),
    /// (x, y, z) with x, y, z > 0 and xyz = 1.
    LogSurface([f64; 3]),
    Euclid(Vec<f64>),
}

impl ManifoldPoint {
    pub fn scalar(v: f64) -> Self {
        ManifoldPoint::Scalar(v)
    }

    /// Unit vector on the circle at the given angle.
    pub fn from_angle(theta: f64) -> Self {
        ManifoldPoint::UnitVector(vec![theta.cos(), theta.sin()])
    }

    /// Stable byte encoding used for exact equality, hashing and the
    /// canonical ordering of ball diameters.
    pub(crate) fn canonical_bytes(&self) -> Vec<u8> {
        let (tag, coords): (u8, Box<dyn Iterator<Item = f64> + '_>) = match self {
            ManifoldPoint::Scalar(v) => (0, Box::new(std::iter::once(*v))),
            ManifoldPoint::UnitVector(v) => (1, Box::new(v.iter().copied())),
            ManifoldPoint::Spd(m) => (2, Box::new(m.iter().copied())),
            ManifoldPoint::LogSurface(c) => (3, Box::new(c.iter().copied())),
            ManifoldPoint::Euclid(v) => (4, Box::new(v.iter().copied())),
        };
        let mut bytes = vec![tag];
        for x in coords {
            bytes.extend_from_slice(&x.to_bits().to_le_bytes());
        }
        bytes
    }
}

/// Which geometry a set of points lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    RealLine,
    /// Unit sphere embedded in R^dim (dim = 2 is the circle).
    Circle { dim: usize },
    /// size x size SPD matrices with the affine-invariant metric.
    SpdAffine { size: usize },
    /// {xyz = 1, x,y,z > 0} with distance |log p - log q|_2.
    LogSurface,
    /// R^dim with the Euclidean metric.
    EuclidQuadrant { dim: usize },
}

/// A geometry together with the ball-membership slack.
///
/// The slack is added to the ball radius when testing membership so that the
/// diameter endpoints always belong to their own closed ball despite
/// rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldKind {
    pub geometry: Geometry,
    pub tolerance: f64,
}

/// Hard tolerances of the point invariants themselves (unit norm, symmetry,
/// surface constraint). These are properties of the types, not of the ball
/// test, so they are not configurable.
const POINT_TOL: f64 = 1e-9;
/// Inner product below -1 + this triggers the antipodal error on spheres.
const ANTIPODAL_TOL: f64 = 1e-9;

impl ManifoldKind {
    pub fn new(geometry: Geometry) -> Self {
        ManifoldKind { geometry, tolerance: 1e-10 }
    }

    pub fn with_tolerance(geometry: Geometry, tolerance: f64) -> Result<Self> {
        if !tolerance.is_finite() || tolerance < 0.0 {
            return Err(ManifoldError::InvalidArgument(format!(
                "tolerance must be >= 0, got {tolerance}"
            )));
        }
        Ok(ManifoldKind { geometry, tolerance })
    }

    pub fn real_line() -> Self {
        Self::new(Geometry::RealLine)
    }

    pub fn circle(dim: usize) -> Self {
        Self::new(Geometry::Circle { dim })
    }

    pub fn spd(size: usize) -> Self {
        Self::new(Geometry::SpdAffine { size })
    }

    pub fn log_surface() -> Self {
        Self::new(Geometry::LogSurface)
    }

    pub fn euclid(dim: usize) -> Self {
        Self::new(Geometry::EuclidQuadrant { dim })
    }

    /// Check that `p` is a valid point of this geometry, reporting which
    /// invariant failed otherwise.
    pub fn validate_point(&self, p: &ManifoldPoint) -> Result<()> {
        match (self.geometry, p) {
            (Geometry::RealLine, ManifoldPoint::Scalar(v)) => {
                if !v.is_finite() {
                    return Err(ManifoldError::InvalidPoint(format!("scalar not finite: {v}")));
                }
                Ok(())
            }
            (Geometry::Circle { dim }, ManifoldPoint::UnitVector(v)) => {
                if v.len() != dim || dim < 2 {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "unit vector of length {} does not match embedding dim {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ManifoldError::InvalidPoint("non-finite coordinate".into()));
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > POINT_TOL {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "norm {norm} deviates from 1 by more than {POINT_TOL}"
                    )));
                }
                Ok(())
            }
            (Geometry::SpdAffine { size }, ManifoldPoint::Spd(m)) => {
                if m.nrows() != size || m.ncols() != size {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "matrix is {}x{}, backend expects {size}x{size}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(ManifoldError::InvalidPoint("non-finite entry".into()));
                }
                let asym = (m - m.transpose()).abs().max();
                if asym > POINT_TOL {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "asymmetry {asym} exceeds {POINT_TOL}"
                    )));
                }
                let min_eig = spd::sym_eigenvalues(m).min();
                if min_eig.is_nan() || min_eig <= 0.0 {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "not positive definite: smallest eigenvalue {min_eig}"
                    )));
                }
                Ok(())
            }
            (Geometry::LogSurface, ManifoldPoint::LogSurface(c)) => {
                if c.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "coordinates must be finite and positive, got {c:?}"
                    )));
                }
                let prod = c[0] * c[1] * c[2];
                if (prod - 1.0).abs() > POINT_TOL {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "product {prod} deviates from 1 by more than {POINT_TOL}"
                    )));
                }
                Ok(())
            }
            (Geometry::EuclidQuadrant { dim }, ManifoldPoint::Euclid(v)) => {
                if v.len() != dim || dim == 0 {
                    return Err(ManifoldError::InvalidPoint(format!(
                        "vector of length {} does not match dim {dim}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ManifoldError::InvalidPoint("non-finite coordinate".into()));
                }
                Ok(())
            }
            (geo, point) => Err(ManifoldError::InvalidPoint(format!(
                "point variant {point:?} does not belong to backend {geo:?}"
            ))),
        }
    }

    /// Geodesic distance between two valid points.
    pub fn distance(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        // SPD evaluation is not numerically symmetric in its arguments, so
        // order the pair canonically; the other backends use formulas that
        // are already exactly symmetric.
        let (p, q) = canonical_pair(p, q);
        self.distance_unchecked(p, q)
    }

    fn distance_unchecked(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64> {
        let d = match (p, q) {
            (ManifoldPoint::Scalar(a), ManifoldPoint::Scalar(b)) => (a - b).abs(),
            (ManifoldPoint::UnitVector(a), ManifoldPoint::UnitVector(b)) => {
                dot(a, b).clamp(-1.0, 1.0).acos()
            }
            (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => spd::affine_distance(a, b),
            (ManifoldPoint::LogSurface(a), ManifoldPoint::LogSurface(b)) => log_coord_dist(a, b),
            (ManifoldPoint::Euclid(a), ManifoldPoint::Euclid(b)) => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            _ => unreachable!("validated points match the backend"),
        };
        if !d.is_finite() {
            return Err(ManifoldError::NumericalFailure(format!("distance evaluated to {d}")));
        }
        Ok(d)
    }

    /// Midpoint of the (unique) geodesic joining `p` and `q`.
    pub fn midpoint(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<ManifoldPoint> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        let (p, q) = canonical_pair(p, q);
        self.midpoint_unchecked(p, q)
    }

    fn midpoint_unchecked(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<ManifoldPoint> {
        match (p, q) {
            (ManifoldPoint::Scalar(a), ManifoldPoint::Scalar(b)) => {
                Ok(ManifoldPoint::Scalar(0.5 * (a + b)))
            }
            (ManifoldPoint::UnitVector(a), ManifoldPoint::UnitVector(b)) => {
                if dot(a, b) < -1.0 + ANTIPODAL_TOL {
                    return Err(ManifoldError::AntipodalPoints);
                }
                let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
                Ok(ManifoldPoint::UnitVector(sum.into_iter().map(|x| x / norm).collect()))
            }
            (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => {
                Ok(ManifoldPoint::Spd(spd_geodesic(a, b, 0.5)?))
            }
            (ManifoldPoint::LogSurface(a), ManifoldPoint::LogSurface(b)) => {
                let mut mid = [0.0; 3];
                for i in 0..3 {
                    mid[i] = (0.5 * (a[i].ln() + b[i].ln())).exp();
                }
                Ok(ManifoldPoint::LogSurface(mid))
            }
            (ManifoldPoint::Euclid(a), ManifoldPoint::Euclid(b)) => Ok(ManifoldPoint::Euclid(
                a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect(),
            )),
            _ => unreachable!("validated points match the backend"),
        }
    }

    /// Whether `t` lies in the closed ball of diameter pq.
    pub fn ball_contains(
        &self,
        p: &ManifoldPoint,
        q: &ManifoldPoint,
        t: &ManifoldPoint,
    ) -> Result<bool> {
        self.validate_point(t)?;
        let ball = self.prepare_ball(p, q)?;
        Ok(ball.contains(t))
    }

    /// Precompute the ball of diameter pq so that repeated membership tests
    /// only pay one distance evaluation each.
    pub(crate) fn prepare_ball(&self, p: &ManifoldPoint, q: &ManifoldPoint) -> Result<PreparedBall> {
        self.validate_point(p)?;
        self.validate_point(q)?;
        let (p, q) = canonical_pair(p, q);
        let tol = self.tolerance;
        match (p, q) {
            (ManifoldPoint::Scalar(a), ManifoldPoint::Scalar(b)) => Ok(PreparedBall::Interval {
                lo: a.min(*b) - tol,
                hi: a.max(*b) + tol,
            }),
            (ManifoldPoint::UnitVector(_), ManifoldPoint::UnitVector(_)) => {
                let center = match self.midpoint_unchecked(p, q)? {
                    ManifoldPoint::UnitVector(c) => c,
                    _ => unreachable!(),
                };
                let radius = 0.5 * self.distance_unchecked(p, q)?;
                // Arc length <= pi/2 + tol stays in the monotone range of
                // cos, so the membership test can compare dot products.
                Ok(PreparedBall::Sphere { center, cos_limit: (radius + tol).cos() })
            }
            (ManifoldPoint::Spd(a), ManifoldPoint::Spd(b)) => {
                let mid = spd_geodesic(a, b, 0.5)?;
                let inv_sqrt_center = spd::spd_inv_sqrt(&mid);
                if inv_sqrt_center.iter().any(|x| !x.is_finite()) {
                    return Err(ManifoldError::NumericalFailure(
                        "inverse square root of midpoint is not finite".into(),
                    ));
                }
                let radius = 0.5 * spd::affine_distance(a, b);
                Ok(PreparedBall::SpdBall { inv_sqrt_center, limit: radius + tol })
            }
            (ManifoldPoint::LogSurface(a), ManifoldPoint::LogSurface(b)) => {
                let la = [a[0].ln(), a[1].ln(), a[2].ln()];
                let lb = [b[0].ln(), b[1].ln(), b[2].ln()];
                let log_center = [
                    0.5 * (la[0] + lb[0]),
                    0.5 * (la[1] + lb[1]),
                    0.5 * (la[2] + lb[2]),
                ];
                let radius = 0.5 * log_coord_dist(a, b);
                Ok(PreparedBall::LogBall { log_center, limit_sq: (radius + tol) * (radius + tol) })
            }
            (ManifoldPoint::Euclid(_), ManifoldPoint::Euclid(_)) => {
                let center = match self.midpoint_unchecked(p, q)? {
                    ManifoldPoint::Euclid(c) => c,
                    _ => unreachable!(),
                };
                let radius = 0.5 * self.distance_unchecked(p, q)?;
                Ok(PreparedBall::EuclidBall { center, limit_sq: (radius + tol) * (radius + tol) })
            }
            _ => unreachable!("validated points match the backend"),
        }
    }

    /// Apply an isometry compatible with this backend.
    pub fn apply_isometry(&self, iso: &Isometry, p: &ManifoldPoint) -> Result<ManifoldPoint> {
        self.validate_point(p)?;
        match (self.geometry, iso, p) {
            (Geometry::RealLine, Isometry::ScalarAffine { reflect, offset }, ManifoldPoint::Scalar(v)) => {
                let a = if *reflect { -1.0 } else { 1.0 };
                Ok(ManifoldPoint::Scalar(a * v + offset))
            }
            (Geometry::Circle { dim }, Isometry::Rotation(q), ManifoldPoint::UnitVector(v)) => {
                check_orthogonal(q, dim)?;
                let x = DVector::from_vec(v.clone());
                Ok(ManifoldPoint::UnitVector((q * x).iter().copied().collect()))
            }
            (Geometry::SpdAffine { size }, Isometry::Congruence(m), ManifoldPoint::Spd(a)) => {
                check_invertible(m, size)?;
                let mapped = m * a * m.transpose();
                Ok(ManifoldPoint::Spd(0.5 * (&mapped + mapped.transpose())))
            }
            (Geometry::LogSurface, Isometry::CoordPermutation(perm), ManifoldPoint::LogSurface(c)) => {
                let mut sorted = *perm;
                sorted.sort_unstable();
                if sorted != [0, 1, 2] {
                    return Err(ManifoldError::IncompatibleIsometry(format!(
                        "{perm:?} is not a permutation of (0,1,2)"
                    )));
                }
                Ok(ManifoldPoint::LogSurface([c[perm[0]], c[perm[1]], c[perm[2]]]))
            }
            (Geometry::EuclidQuadrant { dim }, Isometry::Rotation(q), ManifoldPoint::Euclid(v)) => {
                check_orthogonal(q, dim)?;
                let x = DVector::from_vec(v.clone());
                Ok(ManifoldPoint::Euclid((q * x).iter().copied().collect()))
            }
            (geo, iso, _) => Err(ManifoldError::IncompatibleIsometry(format!(
                "{iso:?} cannot act on {geo:?}"
            ))),
        }
    }
}

/// Isometric maps used to test invariance of the indices.
#[derive(Debug, Clone)]
pub enum Isometry {
    /// x -> (+/-) x + offset on the real line.
    ScalarAffine { reflect: bool, offset: f64 },
    /// Orthogonal matrix acting on unit vectors or Euclidean points.
    Rotation(DMatrix<f64>),
    /// A -> M A M^T for invertible M on SPD matrices.
    Congruence(DMatrix<f64>),
    /// Coordinate permutation of the log surface.
    CoordPermutation([usize; 3]),
}

fn check_orthogonal(q: &DMatrix<f64>, dim: usize) -> Result<()> {
    if q.nrows() != dim || q.ncols() != dim {
        return Err(ManifoldError::IncompatibleIsometry(format!(
            "rotation is {}x{}, backend dim is {dim}",
            q.nrows(),
            q.ncols()
        )));
    }
    let dev = (q.transpose() * q - DMatrix::<f64>::identity(dim, dim)).abs().max();
    if dev > POINT_TOL {
        return Err(ManifoldError::IncompatibleIsometry(format!(
            "matrix deviates from orthogonality by {dev}"
        )));
    }
    Ok(())
}

fn check_invertible(m: &DMatrix<f64>, size: usize) -> Result<()> {
    if m.nrows() != size || m.ncols() != size {
        return Err(ManifoldError::IncompatibleIsometry(format!(
            "congruence matrix is {}x{}, backend size is {size}",
            m.nrows(),
            m.ncols()
        )));
    }
    let sv = m.clone().svd(false, false).singular_values;
    let (max, min) = (sv.max(), sv.min());
    if min.is_nan() || min <= 0.0 || !(max / min).is_finite() {
        return Err(ManifoldError::IncompatibleIsometry(format!(
            "congruence matrix is singular (condition number {})",
            max / min
        )));
    }
    Ok(())
}

/// Point on the geodesic from A to B at parameter t in [0, 1]:
/// A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}.
pub fn spd_geodesic(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(ManifoldError::InvalidArgument(format!(
            "geodesic parameter must lie in [0, 1], got {t}"
        )));
    }
    let (sqrt_a, inv_sqrt_a) = spd::spd_sqrt_pair(a);
    let inner = &inv_sqrt_a * b * &inv_sqrt_a;
    let powered = spd::spd_power(&inner, t);
    let out = &sqrt_a * powered * &sqrt_a;
    let out = 0.5 * (&out + out.transpose());
    if out.iter().any(|x| !x.is_finite()) {
        return Err(ManifoldError::NumericalFailure("geodesic point is not finite".into()));
    }
    Ok(out)
}

/// A point reduced to the representation the ball test actually reads:
/// log coordinates for the surface, raw coordinates elsewhere. Built once
/// per point, reused across every ball.
#[derive(Debug, Clone)]
pub(crate) enum FastPoint {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(DMatrix<f64>),
    LogCoords([f64; 3]),
}

impl FastPoint {
    pub(crate) fn of(p: &ManifoldPoint) -> FastPoint {
        match p {
            ManifoldPoint::Scalar(v) => FastPoint::Scalar(*v),
            ManifoldPoint::UnitVector(v) | ManifoldPoint::Euclid(v) => FastPoint::Vector(v.clone()),
            ManifoldPoint::Spd(m) => FastPoint::Matrix(m.clone()),
            ManifoldPoint::LogSurface(c) => {
                FastPoint::LogCoords([c[0].ln(), c[1].ln(), c[2].ln()])
            }
        }
    }
}

/// A ball of diameter pq, reduced to the data needed for membership tests.
/// Sphere membership stores cos(limit) so the per-point test is a dot
/// product against a threshold instead of an arccos.
#[derive(Debug, Clone)]
pub(crate) enum PreparedBall {
    Interval { lo: f64, hi: f64 },
    Sphere { center: Vec<f64>, cos_limit: f64 },
    SpdBall { inv_sqrt_center: DMatrix<f64>, limit: f64 },
    LogBall { log_center: [f64; 3], limit_sq: f64 },
    EuclidBall { center: Vec<f64>, limit_sq: f64 },
}

impl PreparedBall {
    pub(crate) fn contains(&self, t: &ManifoldPoint) -> bool {
        self.contains_fast(&FastPoint::of(t))
    }

    pub(crate) fn contains_fast(&self, t: &FastPoint) -> bool {
        match (self, t) {
            (PreparedBall::Interval { lo, hi }, FastPoint::Scalar(v)) => *lo <= *v && *v <= *hi,
            (PreparedBall::Sphere { center, cos_limit }, FastPoint::Vector(v)) => {
                dot(center, v) >= *cos_limit
            }
            (PreparedBall::SpdBall { inv_sqrt_center, limit }, FastPoint::Matrix(a)) => {
                log_norm_congruent(inv_sqrt_center, a) <= *limit
            }
            (PreparedBall::LogBall { log_center, limit_sq }, FastPoint::LogCoords(c)) => {
                let mut d2 = 0.0;
                for i in 0..3 {
                    let d = c[i] - log_center[i];
                    d2 += d * d;
                }
                d2 <= *limit_sq
            }
            (PreparedBall::EuclidBall { center, limit_sq }, FastPoint::Vector(v)) => {
                center.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= *limit_sq
            }
            _ => panic!("point variant does not match the prepared ball backend"),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn log_coord_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let d = a[i].ln() - b[i].ln();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Order a pair of points by their canonical encoding.
fn canonical_pair<'a>(
    p: &'a ManifoldPoint,
    q: &'a ManifoldPoint,
) -> (&'a ManifoldPoint, &'a ManifoldPoint) {
    if p.canonical_bytes() <= q.canonical_bytes() {
        (p, q)
    } else {
        (q, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vals.to_vec()))
    }

    #[test]
    fn real_line_distance_and_midpoint() {
        let kind = ManifoldKind::real_line();
        let (p, q) = (ManifoldPoint::scalar(1.0), ManifoldPoint::scalar(3.0));
        assert_eq!(kind.distance(&p, &q).unwrap(), 2.0);
        assert_eq!(kind.midpoint(&p, &q).unwrap(), ManifoldPoint::scalar(2.0));
    }

    #[test]
    fn spd_distance_matches_scalar_log_oracle() {
        let kind = ManifoldKind::spd(2);
        let i2 = ManifoldPoint::Spd(DMatrix::identity(2, 2));
        let b = ManifoldPoint::Spd(diag(&[4.0, 1.0]));
        // With A = I the distance reduces to |ln 4| on the first eigenvalue.
        let d = kind.distance(&i2, &b).unwrap();
        assert!((d - 4.0_f64.ln()).abs() < 1e-10, "got {d}");
        let a = ManifoldPoint::Spd(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]));
        assert!(kind.distance(&a, &a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn circle_quarter_arc() {
        let kind = ManifoldKind::circle(2);
        let d = kind
            .distance(&ManifoldPoint::from_angle(0.0), &ManifoldPoint::from_angle(std::f64::consts::FRAC_PI_2))
            .unwrap();
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn spd_midpoint_of_identity_and_diag() {
        let kind = ManifoldKind::spd(2);
        let i2 = ManifoldPoint::Spd(DMatrix::identity(2, 2));
        let b = ManifoldPoint::Spd(diag(&[4.0, 1.0]));
        let mid = kind.midpoint(&i2, &b).unwrap();
        if let ManifoldPoint::Spd(m) = &mid {
            assert!((m - diag(&[2.0, 1.0])).abs().max() < 1e-10);
        } else {
            panic!("wrong variant");
        }
        // Bisection postcondition.
        let half = 0.5 * kind.distance(&i2, &b).unwrap();
        assert!((kind.distance(&i2, &mid).unwrap() - half).abs() < 1e-8);
        assert!((kind.distance(&b, &mid).unwrap() - half).abs() < 1e-8);
    }

    #[test]
    fn log_surface_midpoint_of_inverse_pairs() {
        let kind = ManifoldKind::log_surface();
        let e = std::f64::consts::E;
        let p = ManifoldPoint::LogSurface([e, e, (-2.0_f64).exp()]);
        let q = ManifoldPoint::LogSurface([1.0 / e, 1.0 / e, (2.0_f64).exp()]);
        match kind.midpoint(&p, &q).unwrap() {
            ManifoldPoint::LogSurface(c) => {
                for x in c {
                    assert!((x - 1.0).abs() < 1e-12);
                }
            }
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn ball_membership_on_the_line() {
        let kind = ManifoldKind::real_line();
        let (p, q) = (ManifoldPoint::scalar(1.0), ManifoldPoint::scalar(3.0));
        assert!(kind.ball_contains(&p, &q, &ManifoldPoint::scalar(2.5)).unwrap());
        assert!(kind.ball_contains(&p, &q, &ManifoldPoint::scalar(3.0)).unwrap());
        assert!(!kind.ball_contains(&p, &q, &ManifoldPoint::scalar(3.2)).unwrap());
        // Endpoints always belong to the closed ball.
        assert!(kind.ball_contains(&p, &q, &p).unwrap());
        assert!(kind.ball_contains(&p, &q, &q).unwrap());
    }

    #[test]
    fn ball_membership_spd_center() {
        let kind = ManifoldKind::spd(2);
        let i2 = ManifoldPoint::Spd(DMatrix::identity(2, 2));
        let b = ManifoldPoint::Spd(diag(&[4.0, 1.0]));
        let mid = ManifoldPoint::Spd(diag(&[2.0, 1.0]));
        assert!(kind.ball_contains(&i2, &b, &mid).unwrap());
    }

    #[test]
    fn ball_membership_circle_far_point() {
        // d(pi, pi/4) = 3 pi / 4 > pi / 4 = radius of the ball over (0, pi/2).
        let kind = ManifoldKind::circle(2);
        let p = ManifoldPoint::from_angle(0.0);
        let q = ManifoldPoint::from_angle(std::f64::consts::FRAC_PI_2);
        let t = ManifoldPoint::from_angle(std::f64::consts::PI);
        assert!(!kind.ball_contains(&p, &q, &t).unwrap());
    }

    #[test]
    fn geodesic_endpoints_and_powers() {
        let b = diag(&[4.0, 1.0]);
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!((spd_geodesic(&i2, &b, 0.5).unwrap() - diag(&[2.0, 1.0])).abs().max() < 1e-10);
        // From the identity the geodesic is the matrix power B^t.
        let pow = spd_geodesic(&i2, &b, 0.3).unwrap();
        assert!((pow - diag(&[4.0_f64.powf(0.3), 1.0])).abs().max() < 1e-10);
        assert!((spd_geodesic(&i2, &b, 0.0).unwrap() - &i2).abs().max() < 1e-10);
        assert!((spd_geodesic(&i2, &b, 1.0).unwrap() - &b).abs().max() < 1e-10);
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        assert!((spd_geodesic(&a, &a, 0.7).unwrap() - &a).abs().max() < 1e-10);
        assert!(spd_geodesic(&i2, &b, 1.5).is_err());
    }

    #[test]
    fn antipodal_points_are_detected() {
        let kind = ManifoldKind::circle(2);
        let p = ManifoldPoint::from_angle(0.0);
        let q = ManifoldPoint::from_angle(std::f64::consts::PI);
        assert!(matches!(kind.midpoint(&p, &q), Err(ManifoldError::AntipodalPoints)));
        assert!(matches!(
            kind.ball_contains(&p, &q, &p),
            Err(ManifoldError::AntipodalPoints)
        ));
    }

    #[test]
    fn isometries_examples() {
        let line = ManifoldKind::real_line();
        let shifted = line
            .apply_isometry(
                &Isometry::ScalarAffine { reflect: false, offset: 5.0 },
                &ManifoldPoint::scalar(2.0),
            )
            .unwrap();
        assert_eq!(shifted, ManifoldPoint::scalar(7.0));

        let circle = ManifoldKind::circle(2);
        let theta = std::f64::consts::FRAC_PI_3;
        let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let moved = circle
            .apply_isometry(&Isometry::Rotation(rot), &ManifoldPoint::from_angle(0.0))
            .unwrap();
        match (&moved, &ManifoldPoint::from_angle(theta)) {
            (ManifoldPoint::UnitVector(a), ManifoldPoint::UnitVector(b)) => {
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
            _ => panic!("wrong variant"),
        }

        let spd = ManifoldKind::spd(2);
        let mapped = spd
            .apply_isometry(
                &Isometry::Congruence(diag(&[2.0, 1.0])),
                &ManifoldPoint::Spd(DMatrix::identity(2, 2)),
            )
            .unwrap();
        match &mapped {
            ManifoldPoint::Spd(m) => assert!((m - diag(&[4.0, 1.0])).abs().max() < 1e-12),
            _ => panic!("wrong variant"),
        }

        // Distance preservation under the same congruence.
        let a = ManifoldPoint::Spd(DMatrix::from_row_slice(2, 2, &[3.0, 0.4, 0.4, 1.5]));
        let b = ManifoldPoint::Spd(DMatrix::from_row_slice(2, 2, &[1.2, -0.1, -0.1, 2.0]));
        let iso = Isometry::Congruence(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.0, 1.0]));
        let d0 = spd.distance(&a, &b).unwrap();
        let d1 = spd
            .distance(&spd.apply_isometry(&iso, &a).unwrap(), &spd.apply_isometry(&iso, &b).unwrap())
            .unwrap();
        assert!((d0 - d1).abs() < 1e-8, "congruence broke the distance: {d0} vs {d1}");

        // Incompatible pairings are rejected.
        assert!(matches!(
            line.apply_isometry(&Isometry::CoordPermutation([0, 1, 2]), &ManifoldPoint::scalar(0.0)),
            Err(ManifoldError::IncompatibleIsometry(_))
        ));
    }

    #[test]
    fn validate_point_examples() {
        assert!(ManifoldKind::circle(2)
            .validate_point(&ManifoldPoint::UnitVector(vec![0.6, 0.8]))
            .is_ok());
        // [[1, 2], [2, 1]] has eigenvalues 3 and -1.
        let err = ManifoldKind::spd(2)
            .validate_point(&ManifoldPoint::Spd(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])))
            .unwrap_err();
        assert!(matches!(err, ManifoldError::InvalidPoint(_)), "{err}");
        assert!(ManifoldKind::log_surface()
            .validate_point(&ManifoldPoint::LogSurface([2.0, 1.0, 0.5]))
            .is_ok());
        assert!(ManifoldKind::log_surface()
            .validate_point(&ManifoldPoint::LogSurface([2.0, 1.0, 0.6]))
            .is_err());
    }
}
