//! Ground truth: closed forms for the Bernoulli-plus-uniform benchmark,
//! an independent quadrature transcription of the same integrals, exact
//! population indices for finite discrete models, and a literal-sum
//! reference estimator used to validate the optimized one.

use thiserror::Error;

use crate::manifold::{ManifoldError, ManifoldKind, ManifoldPoint};
use crate::models::{PickFreezeSample, WPool};
use crate::rng::StreamKey;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid too large: {0} cells exceeds the enumeration cap of {MAX_CELLS}")]
    GridTooLarge(usize),
    #[error("instance too large for the reference estimator: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Closed-form population quantities for Z = alpha X1 + X2,
/// X1 ~ Bernoulli(p), X2 ~ U(0, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1ClosedForm {
    /// Ball index B^1_2.
    pub b1: f64,
    /// Scalar Cramér-von Mises index C^1_2.
    pub c1: f64,
    /// Ball numerator S^1_2.
    pub s1: f64,
    /// CvM numerator (the integral of the squared conditional CDF gap).
    pub d1_cvm: f64,
}

/// Evaluate the piecewise closed forms, both branches.
pub fn closed_form_example1(p: f64, alpha: f64, b: f64) -> Result<Example1ClosedForm> {
    if !(0.0..=1.0).contains(&p) || alpha.is_nan() || alpha <= 0.0 || b.is_nan() || b <= 0.0 {
        return Err(OracleError::InvalidArgument(format!(
            "need p in [0,1], alpha > 0, b > 0; got ({p}, {alpha}, {b})"
        )));
    }
    let r = alpha / b;
    let pq = p * (1.0 - p);
    let (var_piece, msq_piece) = if alpha <= b {
        (r.powi(3) * (1.0 / 3.0 - 0.25 * r), r * r * (1.0 - 2.0 * r / 3.0))
    } else {
        (1.0 / 12.0, 1.0 / 3.0)
    };
    Ok(Example1ClosedForm {
        b1: 12.0 * pq * var_piece,
        c1: 6.0 * pq * msq_piece,
        s1: 2.0 * pq * var_piece,
        d1_cvm: pq * msq_piece,
    })
}

/// Independent numerical evaluation of (B^1_2, C^1_2) by quadrature against
/// the uniform-mixture law of Z. Validates the transcription of the closed
/// forms, including both normalizing denominators.
pub fn quadrature_index_example1(
    p: f64,
    alpha: f64,
    b: f64,
    resolution: usize,
) -> Result<(f64, f64)> {
    if resolution < 1_000 {
        return Err(OracleError::InvalidArgument(format!(
            "resolution must be at least 1000, got {resolution}"
        )));
    }
    if !(0.0..=1.0).contains(&p) || alpha.is_nan() || alpha <= 0.0 || b.is_nan() || b <= 0.0 {
        return Err(OracleError::InvalidArgument("parameters out of range".into()));
    }
    let f_u = |t: f64| (t / b).clamp(0.0, 1.0);
    // g(z) = F(z) - F(z - alpha): the conditional-CDF gap between the two
    // mixture components.
    let g = |z: f64| f_u(z) - f_u(z - alpha);
    let f_z = |t: f64| (1.0 - p) * f_u(t) + p * f_u(t - alpha);

    // E[phi(Z)] over the mixture, midpoint rule on each component.
    let expect = |phi: &dyn Fn(f64) -> f64| -> f64 {
        let mut low = 0.0;
        let mut high = 0.0;
        for i in 0..resolution {
            let x = (i as f64 + 0.5) * b / resolution as f64;
            low += phi(x);
            high += phi(x + alpha);
        }
        ((1.0 - p) * low + p * high) / resolution as f64
    };

    let e_g = expect(&|z| g(z));
    let e_g2 = expect(&|z| g(z) * g(z));
    let s_num = 2.0 * p * (1.0 - p) * (e_g2 - e_g * e_g);
    let cvm_num = p * (1.0 - p) * e_g2;
    // CvM denominator: integral of F(1-F) dF, about 1/6 for continuous F.
    let cvm_den = expect(&|z| f_z(z) * (1.0 - f_z(z)));

    // Ball denominator E[H(Z1,Z2)(1 - H(Z1,Z2))] by 2D quadrature over the
    // four mixture components.
    let res2 = resolution.min(1_200);
    let mut ball_den = 0.0;
    for (w1, shift1) in [(1.0 - p, 0.0), (p, alpha)] {
        for (w2, shift2) in [(1.0 - p, 0.0), (p, alpha)] {
            let mut acc = 0.0;
            for i in 0..res2 {
                let z1 = shift1 + (i as f64 + 0.5) * b / res2 as f64;
                for j in 0..res2 {
                    let z2 = shift2 + (j as f64 + 0.5) * b / res2 as f64;
                    let h = (f_z(z1.max(z2)) - f_z(z1.min(z2))).clamp(0.0, 1.0);
                    acc += h * (1.0 - h);
                }
            }
            ball_den += w1 * w2 * acc / (res2 * res2) as f64;
        }
    }

    let b1 = if ball_den > 0.0 { s_num / ball_den } else { 0.0 };
    let c1 = if cvm_den > 0.0 { cvm_num / cvm_den } else { 0.0 };
    Ok((b1, c1))
}

/// Enumeration cap for the exact population index.
const MAX_CELLS: usize = 10_000;

/// A finite model: per-coordinate grids with weights and an output table.
#[derive(Debug, Clone)]
pub struct DiscreteModel {
    /// grids[k] lists the (value, probability) support of coordinate k.
    pub grids: Vec<Vec<(f64, f64)>>,
    /// Output per grid cell, row-major with the last coordinate fastest.
    pub outputs: Vec<ManifoldPoint>,
}

impl DiscreteModel {
    pub fn new(
        grids: Vec<Vec<(f64, f64)>>,
        outputs: Vec<ManifoldPoint>,
        kind: &ManifoldKind,
    ) -> Result<Self> {
        if grids.is_empty() || grids.iter().any(|g| g.is_empty()) {
            return Err(OracleError::InvalidArgument("empty grid".into()));
        }
        for grid in &grids {
            let total: f64 = grid.iter().map(|&(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(OracleError::InvalidArgument(format!(
                    "coordinate weights sum to {total}, expected 1"
                )));
            }
            if grid.iter().any(|&(_, w)| w < 0.0) {
                return Err(OracleError::InvalidArgument("negative weight".into()));
            }
        }
        let n_cells: usize = grids.iter().map(Vec::len).product();
        if outputs.len() != n_cells {
            return Err(OracleError::InvalidArgument(format!(
                "output table has {} entries for {n_cells} cells",
                outputs.len()
            )));
        }
        for out in &outputs {
            kind.validate_point(out)?;
        }
        Ok(DiscreteModel { grids, outputs })
    }

    pub fn dim(&self) -> usize {
        self.grids.len()
    }

    pub fn n_cells(&self) -> usize {
        self.grids.iter().map(Vec::len).product()
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &i) in idx.iter().enumerate() {
            flat = flat * self.grids[k].len() + i;
        }
        flat
    }

    /// All multi-indices of the coordinate subset `coords`, with weights.
    fn assignments(&self, coords: &[usize]) -> Vec<(Vec<usize>, f64)> {
        let mut acc = vec![(Vec::new(), 1.0)];
        for &k in coords {
            let mut next = Vec::with_capacity(acc.len() * self.grids[k].len());
            for (prefix, w) in &acc {
                for (i, &(_, wi)) in self.grids[k].iter().enumerate() {
                    let mut idx = prefix.clone();
                    idx.push(i);
                    next.push((idx, w * wi));
                }
            }
            acc = next;
        }
        acc
    }

    fn sample_coordinate(&self, k: usize, u: f64) -> usize {
        let grid = &self.grids[k];
        let mut cum = 0.0;
        for (i, &(_, w)) in grid.iter().enumerate() {
            cum += w;
            if u < cum {
                return i;
            }
        }
        grid.len() - 1
    }

    /// Pick-freeze sample drawn from the discrete law.
    pub fn pick_freeze(&self, nu: &[usize], n: usize, stream: StreamKey) -> Result<PickFreezeSample> {
        use rand::Rng;
        let d = self.dim();
        let nu = validate_nu(nu, d)?;
        let mut rng = stream.rng();
        let mut pairs = Vec::with_capacity(n);
        let mut x = vec![0usize; d];
        let mut x_prime = vec![0usize; d];
        for _ in 0..n {
            for (k, slot) in x.iter_mut().enumerate() {
                *slot = self.sample_coordinate(k, rng.random::<f64>());
            }
            for (k, slot) in x_prime.iter_mut().enumerate() {
                *slot = self.sample_coordinate(k, rng.random::<f64>());
            }
            let mut frozen = x_prime.clone();
            for &k in &nu {
                frozen[k] = x[k];
            }
            pairs.push((
                self.outputs[self.flat_index(&x)].clone(),
                self.outputs[self.flat_index(&frozen)].clone(),
            ));
        }
        Ok(PickFreezeSample { nu, pairs, stream })
    }

    /// Independent W pool from the discrete law.
    pub fn w_pool(&self, n_w: usize, stream: StreamKey) -> Result<WPool> {
        use rand::Rng;
        let d = self.dim();
        let mut rng = stream.rng();
        let mut points = Vec::with_capacity(n_w);
        let mut x = vec![0usize; d];
        for _ in 0..n_w {
            for (k, slot) in x.iter_mut().enumerate() {
                *slot = self.sample_coordinate(k, rng.random::<f64>());
            }
            points.push(self.outputs[self.flat_index(&x)].clone());
        }
        Ok(WPool { points, stream })
    }
}

fn validate_nu(nu: &[usize], dim: usize) -> Result<Vec<usize>> {
    let mut sorted = nu.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() >= dim || sorted.last().is_some_and(|&l| l >= dim) {
        return Err(OracleError::InvalidArgument(format!(
            "nu must be a non-empty proper subset of 0..{dim}"
        )));
    }
    Ok(sorted)
}

/// Exact population index of a discrete model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationIndex {
    pub s: f64,
    pub d: f64,
    /// None when D vanishes and the ratio is undefined.
    pub b: Option<f64>,
}

/// Enumerate S, D and B = S/D exactly by summing over every combination of
/// ball diameter (Z1, Z2), frozen assignment and output cell. Cost grows
/// with the cube of the cell count; the cap keeps it honest.
pub fn enumerate_population_index(
    dm: &DiscreteModel,
    nu: &[usize],
    kind: &ManifoldKind,
) -> Result<PopulationIndex> {
    let n_cells = dm.n_cells();
    if n_cells > MAX_CELLS {
        return Err(OracleError::GridTooLarge(n_cells));
    }
    let d = dm.dim();
    let nu = validate_nu(nu, d)?;
    let nu_bar: Vec<usize> = (0..d).filter(|k| !nu.contains(k)).collect();

    let cells = dm.assignments(&(0..d).collect::<Vec<_>>());
    let nu_assign = dm.assignments(&nu);
    let bar_assign = dm.assignments(&nu_bar);

    let mut s = 0.0;
    let mut d_acc = 0.0;
    for (c1, w1) in &cells {
        let z1 = &dm.outputs[dm.flat_index(c1)];
        for (c2, w2) in &cells {
            let z2 = &dm.outputs[dm.flat_index(c2)];
            let pair_w = w1 * w2;
            let ball = kind.prepare_ball(z1, z2)?;
            // Memberships of every output cell in this ball.
            let h: Vec<f64> = cells
                .iter()
                .map(|(c, _)| f64::from(ball.contains(&dm.outputs[dm.flat_index(c)])))
                .collect();
            let big_h: f64 = cells.iter().zip(&h).map(|((_, w), hv)| w * hv).sum();
            // Conditional mean of h given each frozen assignment.
            let mut var = 0.0;
            for (inu, wnu) in &nu_assign {
                let mut cond = 0.0;
                let mut idx = vec![0usize; d];
                for (ibar, wbar) in &bar_assign {
                    for (slot, &k) in inu.iter().zip(&nu) {
                        idx[k] = *slot;
                    }
                    for (slot, &k) in ibar.iter().zip(&nu_bar) {
                        idx[k] = *slot;
                    }
                    cond += wbar * h[dm.flat_index(&idx)];
                }
                var += wnu * (cond - big_h) * (cond - big_h);
            }
            s += pair_w * var;
            d_acc += pair_w * big_h * (1.0 - big_h);
        }
    }
    let b = if d_acc > 1e-12 { Some(s / d_acc) } else { None };
    Ok(PopulationIndex { s, d: d_acc, b })
}

/// Cap on the reference estimator's sample sizes.
const MAX_REFERENCE: usize = 50;

/// Literal transcription of the estimator sums as nested loops: the U-sum
/// of G over (j, tau) minus the normalized double sum of J_i J_j, and the
/// pooled mean-minus-square for the denominator. Deliberately shares no
/// machinery with the optimized path beyond the public geometry operations.
pub fn naive_estimate_reference(
    pairs: &PickFreezeSample,
    wpool: &WPool,
    kind: &ManifoldKind,
) -> Result<(f64, f64)> {
    let n = pairs.len();
    let n_w = wpool.len();
    if n > MAX_REFERENCE || n_w > MAX_REFERENCE {
        return Err(OracleError::TooLarge(format!("N = {n}, Nw = {n_w}, cap {MAX_REFERENCE}")));
    }
    if n < 2 || n_w < 2 {
        return Err(OracleError::InvalidArgument("need N >= 2 and Nw >= 2".into()));
    }
    let mut sum_g = 0.0;
    let mut sum_h = 0.0;
    let mut d_terms = 0.0;
    let mut used = 0usize;
    for a in 0..n_w {
        for b in a + 1..n_w {
            let mid = match kind.midpoint(&wpool.points[a], &wpool.points[b]) {
                Ok(m) => m,
                Err(ManifoldError::AntipodalPoints) => continue,
                Err(e) => return Err(e.into()),
            };
            let limit = 0.5 * kind.distance(&wpool.points[a], &wpool.points[b])? + kind.tolerance;
            let mut j_vals = vec![0.0; n];
            for (j, (z, z_nu)) in pairs.pairs.iter().enumerate() {
                let hz = f64::from(kind.distance(z, &mid)? <= limit);
                let hv = f64::from(kind.distance(z_nu, &mid)? <= limit);
                sum_g += hz * hv;
                j_vals[j] = 0.5 * (hz + hv);
            }
            for i in 0..n {
                for j in 0..n {
                    sum_h += j_vals[i] * j_vals[j];
                }
            }
            let pooled: f64 = j_vals.iter().map(|j| 2.0 * j).sum::<f64>() / (2.0 * n as f64);
            d_terms += pooled - pooled * pooled;
            used += 1;
        }
    }
    if used == 0 {
        return Err(OracleError::InvalidArgument("every W pair was degenerate".into()));
    }
    let c = used as f64;
    let nf = n as f64;
    let s = sum_g / (nf * c) - sum_h / (nf * nf * c);
    let d = d_terms / c;
    Ok((s, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{estimate_d, estimate_s, Mode};
    use crate::rng::{StreamKey, StreamRole};

    #[test]
    fn closed_form_reference_values() {
        // p = 1/2, alpha = 1, b = sqrt(3): the alpha <= b branch.
        let cf = closed_form_example1(0.5, 1.0, 3.0_f64.sqrt()).unwrap();
        assert!((cf.b1 - 0.10912).abs() < 5e-5, "B1 = {}", cf.b1);
        assert!((cf.c1 - 0.30755).abs() < 5e-5, "C1 = {}", cf.c1);
        assert!((cf.b1 - 6.0 * cf.s1).abs() < 1e-15, "B = S / (1/6) on the line");
        assert!((cf.c1 - 6.0 * cf.d1_cvm).abs() < 1e-15);

        // p = 0.05 puts alpha above b: the flat branch.
        let p = 0.05;
        let b = (12.0_f64 * p * (1.0 - p)).sqrt();
        let cf = closed_form_example1(p, 1.0, b).unwrap();
        assert!((cf.b1 - 0.0475).abs() < 1e-12, "B1 = {}", cf.b1);

        for p in [0.0, 1.0] {
            let cf = closed_form_example1(p, 1.0, 1.0).unwrap();
            assert_eq!(cf.b1, 0.0);
            assert_eq!(cf.c1, 0.0);
        }
    }

    #[test]
    fn quadrature_validates_the_closed_form() {
        let (b1, c1) = quadrature_index_example1(0.5, 1.0, 3.0_f64.sqrt(), 2_000).unwrap();
        let cf = closed_form_example1(0.5, 1.0, 3.0_f64.sqrt()).unwrap();
        assert!((b1 - cf.b1).abs() < 1e-4, "quadrature {b1} vs closed form {}", cf.b1);
        assert!((c1 - cf.c1).abs() < 1e-4, "quadrature {c1} vs closed form {}", cf.c1);

        // alpha -> 0: the output no longer depends on X1.
        let (b1, _) = quadrature_index_example1(0.5, 1e-4, 1.0, 2_000).unwrap();
        assert!(b1 < 1e-3, "B1 should vanish, got {b1}");

        // alpha >> b: the flat branch, B1 -> p(1-p).
        let (b1, _) = quadrature_index_example1(0.3, 50.0, 1.0, 2_000).unwrap();
        assert!((b1 - 0.21).abs() < 1e-3, "B1 should approach p(1-p), got {b1}");
    }

    #[test]
    fn quadrature_grid_agreement() {
        // 9 x 5 grid over (p, alpha/b) covering both branches.
        for ip in 1..=9 {
            let p = ip as f64 / 10.0;
            for r in [0.25, 0.5, 0.75, 1.0, 1.5] {
                let (b1, c1) = quadrature_index_example1(p, r, 1.0, 1_500).unwrap();
                let cf = closed_form_example1(p, r, 1.0).unwrap();
                assert!(
                    (b1 - cf.b1).abs() <= 1e-4,
                    "p={p} r={r}: quadrature {b1} vs {}",
                    cf.b1
                );
                assert!(
                    (c1 - cf.c1).abs() <= 1e-4,
                    "p={p} r={r}: quadrature {c1} vs {}",
                    cf.c1
                );
            }
        }
    }

    fn bernoulli_grid(p: f64) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0 - p), (1.0, p)]
    }

    #[test]
    fn quadrature_rejects_coarse_resolutions() {
        assert!(matches!(
            quadrature_index_example1(0.5, 1.0, 1.0, 999),
            Err(OracleError::InvalidArgument(_))
        ));
    }

    #[test]
    fn discrete_model_validates_weights_and_outputs() {
        let kind = ManifoldKind::real_line();
        // Weights off by more than 1e-12.
        let bad = DiscreteModel::new(
            vec![vec![(0.0, 0.6), (1.0, 0.5)]],
            vec![ManifoldPoint::Scalar(0.0); 2],
            &kind,
        );
        assert!(matches!(bad, Err(OracleError::InvalidArgument(_))));
        // Output of the wrong variant for the backend.
        let bad = DiscreteModel::new(
            vec![vec![(0.0, 0.5), (1.0, 0.5)]],
            vec![ManifoldPoint::Scalar(0.0), ManifoldPoint::Euclid(vec![1.0])],
            &kind,
        );
        assert!(matches!(bad, Err(OracleError::Manifold(_))));
    }

    #[test]
    fn enumeration_constant_output() {
        let kind = ManifoldKind::real_line();
        let dm = DiscreteModel::new(
            vec![bernoulli_grid(0.5), bernoulli_grid(0.5)],
            vec![ManifoldPoint::Scalar(2.0); 4],
            &kind,
        )
        .unwrap();
        let pop = enumerate_population_index(&dm, &[0], &kind).unwrap();
        assert_eq!(pop.s, 0.0);
        assert_eq!(pop.d, 0.0);
        assert!(pop.b.is_none(), "B undefined for constant output");
    }

    #[test]
    fn enumeration_deterministic_in_nu_gives_one() {
        // Output depends only on coordinate 0: S = D and B = 1.
        let kind = ManifoldKind::real_line();
        let outputs = vec![
            ManifoldPoint::Scalar(0.0),
            ManifoldPoint::Scalar(0.0),
            ManifoldPoint::Scalar(1.0),
            ManifoldPoint::Scalar(1.0),
        ];
        let dm = DiscreteModel::new(
            vec![bernoulli_grid(0.3), bernoulli_grid(0.6)],
            outputs,
            &kind,
        )
        .unwrap();
        let pop = enumerate_population_index(&dm, &[0], &kind).unwrap();
        assert!((pop.s - pop.d).abs() < 1e-15);
        assert!((pop.b.unwrap() - 1.0).abs() < 1e-12);
        assert!(pop.d > 0.0);
    }

    #[test]
    fn enumeration_invariants_on_a_small_grid() {
        // f(x1, x2) = 2 x1 + x2 over a 2x2 Bernoulli grid.
        let kind = ManifoldKind::real_line();
        let outputs = vec![
            ManifoldPoint::Scalar(0.0),
            ManifoldPoint::Scalar(1.0),
            ManifoldPoint::Scalar(2.0),
            ManifoldPoint::Scalar(3.0),
        ];
        let dm = DiscreteModel::new(
            vec![bernoulli_grid(0.4), bernoulli_grid(0.5)],
            outputs,
            &kind,
        )
        .unwrap();
        let pop = enumerate_population_index(&dm, &[0], &kind).unwrap();
        assert!(0.0 <= pop.s && pop.s <= pop.d && pop.d <= 0.25 + 1e-15, "{pop:?}");
        let b = pop.b.unwrap();
        assert!((0.0..=1.0).contains(&b), "B = {b}");
        // The estimator should agree at a large sample size; 3 sigma with a
        // generous hand bound on sigma.
        let pairs = dm.pick_freeze(&[0], 40_000, StreamKey::new(5, StreamRole::Pairs, 0)).unwrap();
        let pool = dm.w_pool(200, StreamKey::new(5, StreamRole::WPool, 0)).unwrap();
        let est = crate::estimators::estimate_b(&pairs, &pool, &kind, Mode::ExactU).unwrap();
        assert!((est.b_hat - b).abs() < 0.05, "estimator {} vs enumeration {b}", est.b_hat);
    }

    #[test]
    fn reference_estimator_matches_the_hand_instance() {
        let pairs = PickFreezeSample {
            nu: vec![0],
            pairs: vec![
                (ManifoldPoint::Scalar(1.0), ManifoldPoint::Scalar(1.0)),
                (ManifoldPoint::Scalar(5.0), ManifoldPoint::Scalar(2.0)),
            ],
            stream: StreamKey::new(0, StreamRole::Pairs, 0),
        };
        let pool = WPool {
            points: vec![ManifoldPoint::Scalar(0.0), ManifoldPoint::Scalar(4.0)],
            stream: StreamKey::new(0, StreamRole::WPool, 0),
        };
        let kind = ManifoldKind::real_line();
        let (s, d) = naive_estimate_reference(&pairs, &pool, &kind).unwrap();
        assert_eq!(s, -0.0625);
        assert_eq!(d, 0.1875);
        // Single tau: both paths reduce to one covariance term.
        assert_eq!(s, estimate_s(&pairs, &pool, &kind, Mode::ExactU).unwrap());
        assert_eq!(d, estimate_d(&pairs, &pool, &kind, Mode::ExactU).unwrap());
    }

    #[test]
    fn reference_estimator_rejects_large_instances() {
        let mk = |n: usize| PickFreezeSample {
            nu: vec![0],
            pairs: (0..n)
                .map(|i| (ManifoldPoint::Scalar(i as f64), ManifoldPoint::Scalar(i as f64)))
                .collect(),
            stream: StreamKey::new(0, StreamRole::Pairs, 0),
        };
        let pool = WPool {
            points: vec![ManifoldPoint::Scalar(0.0), ManifoldPoint::Scalar(1.0)],
            stream: StreamKey::new(0, StreamRole::WPool, 0),
        };
        assert!(matches!(
            naive_estimate_reference(&mk(51), &pool, &ManifoldKind::real_line()),
            Err(OracleError::TooLarge(_))
        ));
    }
}
