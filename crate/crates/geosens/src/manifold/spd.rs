//! Matrix functions for the affine-invariant SPD geometry.
//!
//! Everything here goes through a symmetric eigendecomposition. Eigenvalues
//! are clamped at [`EIG_CLAMP`] before logs and negative powers so that
//! matrices touching the SPD boundary degrade gracefully instead of
//! producing NaN.

use nalgebra::{DMatrix, DVector};

/// Floor applied to eigenvalues before `ln` / negative powers.
pub(crate) const EIG_CLAMP: f64 = 1e-14;

/// Eigenvalues of a symmetric matrix, ascending order not guaranteed.
///
/// 1x1 and 2x2 use closed forms; larger sizes defer to nalgebra. The 2x2
/// case is the hot path for small discrete-model backends.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    match n {
        1 => DVector::from_vec(vec![m[(0, 0)]]),
        2 => {
            let a = m[(0, 0)];
            let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
            let c = m[(1, 1)];
            let half_tr = 0.5 * (a + c);
            let disc = (0.5 * (a - c)).hypot(b);
            DVector::from_vec(vec![half_tr - disc, half_tr + disc])
        }
        _ => m.clone().symmetric_eigenvalues(),
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Apply `f` to the eigenvalues of a symmetric matrix: Q f(L) Q^T.
fn map_eigenvalues(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let q = eig.eigenvectors;
    let vals = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let scaled = &q * DMatrix::from_diagonal(&vals);
    symmetrize(&(scaled * q.transpose()))
}

/// Principal square root and inverse square root from one decomposition.
pub(crate) fn spd_sqrt_pair(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let eig = symmetrize(a).symmetric_eigen();
    let q = eig.eigenvectors;
    let n = eig.eigenvalues.len();
    let sqrt_vals =
        DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| l.max(EIG_CLAMP).sqrt()));
    let inv_vals = DVector::from_iterator(n, sqrt_vals.iter().map(|&s| 1.0 / s));
    let sqrt = symmetrize(&(&q * DMatrix::from_diagonal(&sqrt_vals) * q.transpose()));
    let inv_sqrt = symmetrize(&(&q * DMatrix::from_diagonal(&inv_vals) * q.transpose()));
    (sqrt, inv_sqrt)
}

pub(crate) fn spd_inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    spd_sqrt_pair(a).1
}

/// Matrix power A^t for symmetric positive definite A.
pub(crate) fn spd_power(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    map_eigenvalues(a, |l| l.max(EIG_CLAMP).powf(t))
}

/// Affine-invariant distance assuming both matrices are valid SPD:
/// Frobenius norm of ln(A^{-1/2} B A^{-1/2}).
pub(crate) fn affine_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s = spd_inv_sqrt(a);
    log_norm_congruent(&s, b)
}

/// Frobenius norm of ln(S B S) for symmetric S; S is typically a cached
/// inverse square root, which makes this the per-point cost of a ball test.
pub(crate) fn log_norm_congruent(s: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let c = symmetrize(&(s * b * s));
    sym_eigenvalues(&c)
        .iter()
        .map(|&l| {
            let x = l.max(EIG_CLAMP).ln();
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(vals: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vals.to_vec()))
    }

    #[test]
    fn eigenvalues_2x2_closed_form() {
        // [[1, 2], [2, 1]] has eigenvalues 3 and -1.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let mut vals: Vec<f64> = sym_eigenvalues(&m).iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_pair_inverts() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let (s, si) = spd_sqrt_pair(&a);
        assert!(((&s * &s) - &a).abs().max() < 1e-12);
        assert!(((&s * &si) - DMatrix::<f64>::identity(2, 2)).abs().max() < 1e-12);
    }

    #[test]
    fn distance_reduces_to_scalar_log_for_diagonal() {
        let d = affine_distance(&DMatrix::identity(2, 2), &diag(&[4.0, 1.0]));
        assert!((d - 4.0_f64.ln()).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn power_of_diagonal() {
        let p = spd_power(&diag(&[4.0, 1.0]), 0.5);
        assert!((p - diag(&[2.0, 1.0])).abs().max() < 1e-12);
    }
}
