//! Kolmogorov distance to the standard normal and empirical quantiles.

use crate::error::{Error, Result};
use crate::normal::normal_cdf;

fn sorted_finite(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("sample contains {bad}")));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_B(x) - Phi(x)|` for the empirical CDF `F_B` of `xs`.
pub fn ks_distance(xs: &[f64]) -> Result<f64> {
    let v = sorted_finite(xs)?;
    let b = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let phi = normal_cdf(x);
        let i = i as f64;
        acc.max((i + 1.0) / b - phi).max(phi - i / b)
    }))
}

/// Quantiles by linear interpolation of the order statistics at position `p (B - 1)`
/// (zero-based).
pub fn empirical_quantiles(xs: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    let v = sorted_finite(xs)?;
    let last = v.len() - 1;
    probs
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
            }
            let pos = p * last as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(last);
            Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
        })
        .collect()
}

/// The fixed grid `0.01, 0.02, ..., 0.99` used for QQ output.
pub fn standard_probs() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal::normal_inv_cdf;

    #[test]
    fn ks_of_plotting_positions() {
        for b in [1usize, 7, 50, 400] {
            let xs: Vec<f64> = (1..=b)
                .map(|i| normal_inv_cdf((i as f64 - 0.5) / b as f64).unwrap())
                .collect();
            let d = ks_distance(&xs).unwrap();
            assert!((d - 0.5 / b as f64).abs() < 1e-12, "B = {b}: {d}");
        }
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_distance(&[0.0; 4]).unwrap(), 0.5);
        assert!(ks_distance(&[]).is_err());
        assert!(ks_distance(&[f64::INFINITY]).is_err());
        assert!(ks_distance(&[1.0, f64::NAN]).is_err());
        // order does not matter
        let a = ks_distance(&[0.3, -1.2, 2.0, 0.1]).unwrap();
        let b = ks_distance(&[2.0, 0.1, 0.3, -1.2]).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(empirical_quantiles(&[3.0, 1.0, 2.0], &[0.5]).unwrap(), vec![2.0]);
        assert_eq!(empirical_quantiles(&[0.0, 10.0], &[0.25]).unwrap(), vec![2.5]);
        let xs = [4.0, -1.0, 7.5, 2.0];
        let q = empirical_quantiles(&xs, &[0.0, 1e-9, 1.0]).unwrap();
        assert_eq!(q[0], -1.0);
        assert!((q[1] + 1.0).abs() < 1e-8);
        assert_eq!(q[2], 7.5);
        assert!(empirical_quantiles(&[], &[0.5]).is_err());
        assert!(empirical_quantiles(&xs, &[1.5]).is_err());
        assert_eq!(empirical_quantiles(&[5.0], &[0.3]).unwrap(), vec![5.0]);
    }

    #[test]
    fn probs_grid() {
        let p = standard_probs();
        assert_eq!(p.len(), 99);
        assert_eq!(p[0], 0.01);
        assert_eq!(p[98], 0.99);
    }
}
