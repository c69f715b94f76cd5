//! Numerical check of the four-eigenvalue identity behind the minimax lower
//! bound for testing independence.
//!
//! For sign vectors `u_k` (length `p`) and `v_k` (length `q`), embedded as
//! `u = [sqrt(q) u_signs, 0]` and `v = [0, sqrt(p) v_signs]`, the perturbation
//!
//! ```text
//! S = -c1 [(u1+v1)(u1+v1)' + (u2+v2)(u2+v2)'] + c2 [(u1-v1)(u1-v1)' + (u2-v2)(u2-v2)']
//! ```
//!
//! with `c1 = a / (2(1 + a p q))`, `c2 = a / (2(1 - a p q))` has rank at most
//! four, and its nonzero eigenvalues pair up so that
//! `(1+l1)(1+l2) = (1+l3)(1+l4) = 1 + a^2 (p^2 q^2 - <u1,u2><v1,v2>) / (1 - (a p q)^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, sym_eigenvalues, DenseMatrix, SymmetricMatrix};

/// Eigenvalues with magnitude above this count as nontrivial.
pub const NONTRIVIAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCheckReport {
    /// Largest relative deviation from the predicted products.
    pub max_identity_error: f64,
    pub nontrivial_eigencount: usize,
    /// Nontrivial eigenvalues of the full `(p+q) x (p+q)` perturbation, ascending.
    pub lambda_values: Vec<f64>,
    /// Predicted value of each pair product.
    pub predicted_product: f64,
}

fn check_signs(signs: &[f64], len: usize, what: &str) -> Result<()> {
    if signs.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {len}",
            signs.len()
        )));
    }
    if let Some(bad) = signs.iter().find(|s| s.abs() != 1.0) {
        return Err(Error::InvalidParameter(format!("{what} must contain only +1/-1, found {bad}")));
    }
    Ok(())
}

fn embed(signs: &[f64], scale: f64, offset: usize, total: usize) -> Vec<f64> {
    let mut out = vec![0.0; total];
    for (k, s) in signs.iter().enumerate() {
        out[offset + k] = scale * s;
    }
    out
}

fn combine(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + sign * y).collect()
}

/// Eigenvalues of `S` compressed onto the span of `dirs` (mutually orthogonal; zero vectors dropped).
fn compressed_eigenvalues(s: &DenseMatrix, dirs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let basis: Vec<Vec<f64>> = dirs
        .iter()
        .filter_map(|d| {
            let norm = dot(d, d).sqrt();
            (norm > 0.0).then(|| d.iter().map(|x| x / norm).collect())
        })
        .collect();
    let images: Vec<Vec<f64>> = basis.iter().map(|b| s.matvec(b)).collect::<Result<_>>()?;
    let k = basis.len();
    let mut m = DenseMatrix::from_fn(k, k, |i, j| dot(&basis[i], &images[j]));
    // symmetrize away round-off before the symmetric solver sees it
    for i in 0..k {
        for j in 0..i {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    sym_eigenvalues(&SymmetricMatrix::new(m)?)
}

/// Builds the perturbation for the given sign vectors and checks the pair-product identity.
///
/// `u_signs` and `v_signs` hold the two draws `(u1, u2)` and `(v1, v2)`.
pub fn minimax_eigencheck(
    u_signs: (&[f64], &[f64]),
    v_signs: (&[f64], &[f64]),
    a: f64,
) -> Result<EigenCheckReport> {
    let p = u_signs.0.len();
    let q = v_signs.0.len();
    if p == 0 || q == 0 {
        return Err(Error::EmptyInput);
    }
    check_signs(u_signs.0, p, "u1")?;
    check_signs(u_signs.1, p, "u2")?;
    check_signs(v_signs.0, q, "v1")?;
    check_signs(v_signs.1, q, "v2")?;
    let pq = (p * q) as f64;
    if !a.is_finite() || a.abs() * pq >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "|a| p q must be below 1, got {}",
            a.abs() * pq
        )));
    }

    let d = p + q;
    let (sq, sp) = ((q as f64).sqrt(), (p as f64).sqrt());
    let u1 = embed(u_signs.0, sq, 0, d);
    let u2 = embed(u_signs.1, sq, 0, d);
    let v1 = embed(v_signs.0, sp, p, d);
    let v2 = embed(v_signs.1, sp, p, d);

    let c1 = a / (2.0 * (1.0 + a * pq));
    let c2 = a / (2.0 * (1.0 - a * pq));
    let plus = [combine(&u1, &v1, 1.0), combine(&u2, &v2, 1.0)];
    let minus = [combine(&u1, &v1, -1.0), combine(&u2, &v2, -1.0)];
    let s = DenseMatrix::from_fn(d, d, |i, j| {
        -c1 * (plus[0][i] * plus[0][j] + plus[1][i] * plus[1][j])
            + c2 * (minus[0][i] * minus[0][j] + minus[1][i] * minus[1][j])
    });

    let predicted = 1.0 + a * a / (1.0 - (a * pq).powi(2)) * (pq * pq - dot(&u1, &u2) * dot(&v1, &v2));
    let rel = |x: f64, target: f64| (x - target).abs() / target.abs();

    let sym_pair = compressed_eigenvalues(&s, &[combine(&u1, &u2, 1.0), combine(&v1, &v2, 1.0)])?;
    let anti_pair = compressed_eigenvalues(&s, &[combine(&u1, &u2, -1.0), combine(&v1, &v2, -1.0)])?;
    let pair_product = |ls: &[f64]| ls.iter().map(|l| 1.0 + l).product::<f64>();
    let mut err = rel(pair_product(&sym_pair), predicted).max(rel(pair_product(&anti_pair), predicted));

    let spectrum = sym_eigenvalues(&SymmetricMatrix::new(s)?)?;
    err = err.max(rel(pair_product(&spectrum), predicted * predicted));
    let lambda_values: Vec<f64> = spectrum.into_iter().filter(|l| l.abs() > NONTRIVIAL_TOL).collect();

    Ok(EigenCheckReport {
        max_identity_error: err,
        nontrivial_eigencount: lambda_values.len(),
        lambda_values,
        predicted_product: predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(bits: u32, len: usize) -> Vec<f64> {
        (0..len).map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 }).collect()
    }

    #[test]
    fn zero_perturbation() {
        let (u, v) = (signs(0b1011, 4), signs(0b110, 3));
        let r = minimax_eigencheck((&u, &u), (&v, &v), 0.0).unwrap();
        assert_eq!(r.max_identity_error, 0.0);
        assert_eq!(r.nontrivial_eigencount, 0);
        assert_eq!(r.predicted_product, 1.0);
    }

    #[test]
    fn aligned_draws_cancel() {
        let (u, v) = (signs(0b101101, 6), signs(0b011010, 6));
        let a = 1.0 / (4.0 * 36.0);
        let r = minimax_eigencheck((&u, &u), (&v, &v), a).unwrap();
        assert_eq!(r.predicted_product, 1.0);
        assert!(r.max_identity_error < 1e-12);
        // the aligned case is twice a rank-two perturbation
        assert_eq!(r.nontrivial_eigencount, 2);
        let apq = a * 36.0;
        let expected = [-2.0 * apq / (1.0 + apq), 2.0 * apq / (1.0 - apq)];
        for (l, e) in r.lambda_values.iter().zip(expected) {
            assert!((l - e).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_for_all_small_sign_patterns() {
        let (p, q) = (3, 2);
        let a = 0.7 / (p * q) as f64;
        for bu1 in 0..8 {
            for bu2 in 0..8 {
                for bv2 in 0..4 {
                    let (u1, u2) = (signs(bu1, p), signs(bu2, p));
                    let (v1, v2) = (signs(0b01, q), signs(bv2, q));
                    let r = minimax_eigencheck((&u1, &u2), (&v1, &v2), a).unwrap();
                    assert!(r.max_identity_error < 1e-10, "{bu1} {bu2} {bv2}: {r:?}");
                    assert!(r.nontrivial_eigencount <= 4);
                }
            }
        }
    }

    #[test]
    fn negative_a_is_allowed() {
        let (u1, u2, v1, v2) = (signs(5, 4), signs(9, 4), signs(3, 5), signs(17, 5));
        let r = minimax_eigencheck((&u1, &u2), (&v1, &v2), -0.01).unwrap();
        assert!(r.max_identity_error < 1e-10);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let (u, v) = (signs(1, 4), signs(1, 4));
        assert!(minimax_eigencheck((&u, &u), (&v, &v), 1.0 / 16.0).is_err());
        let bad = vec![1.0, 0.5, -1.0, 1.0];
        assert!(minimax_eigencheck((&bad, &u), (&v, &v), 0.01).is_err());
        let short = signs(1, 3);
        assert!(matches!(
            minimax_eigencheck((&u, &short), (&v, &v), 0.01),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
