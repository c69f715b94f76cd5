//! Truncated Hoeffding expansion of `dcov*^2` for Gaussian data with known
//! covariance.
//!
//! Both functions return the truncated statistic minus its constant term
//! `dcov^2(X, Y)`, which has no closed form. They are two routes to the same
//! number: [`hoeffding_sum`] averages the main-term kernels directly, while
//! [`tbar_fluctuation`] uses the `psi_1, psi_2, psi_3` representation.

use crate::dcov::PairedSample;
use crate::error::{Error, Result};
use crate::matrix::{dot, frobenius_norm_sq};
use crate::theory::CovarianceBlocks;

struct Constants {
    tau_x: f64,
    tau_y: f64,
    tr_x: f64,
    tr_y: f64,
    cross2: f64,
}

fn constants(sample: &PairedSample, sigma: &CovarianceBlocks) -> Result<Constants> {
    if sample.p() != sigma.p() || sample.q() != sigma.q() {
        return Err(Error::DimensionMismatch(format!(
            "sample is ({}, {}) dimensional but the covariance blocks are ({}, {})",
            sample.p(),
            sample.q(),
            sigma.p(),
            sigma.q()
        )));
    }
    if sample.n() < 2 {
        return Err(Error::SampleTooSmall {
            required: 2,
            actual: sample.n(),
        });
    }
    let (tau_x, tau_y) = sigma.taus();
    if !(tau_x > 0.0 && tau_y > 0.0) {
        return Err(Error::InvalidParameter("tau_X and tau_Y must be positive".into()));
    }
    Ok(Constants {
        tau_x,
        tau_y,
        tr_x: sigma.sigma_x().trace(),
        tr_y: sigma.sigma_y().trace(),
        cross2: frobenius_norm_sq(sigma.sigma_xy()),
    })
}

/// Rows of `Y Sigma_YX`, i.e. `Sigma_XY y_i` for each observation.
fn cross_images(sample: &PairedSample, sigma: &CovarianceBlocks) -> Result<Vec<Vec<f64>>> {
    (0..sample.n())
        .map(|i| sigma.sigma_xy().matvec(sample.y().row(i)))
        .collect()
}

/// First-order main kernel `g1_bar(x, y)`.
pub fn g1_bar(x: &[f64], y: &[f64], sigma: &CovarianceBlocks) -> Result<f64> {
    if x.len() != sigma.p() || y.len() != sigma.q() {
        return Err(Error::DimensionMismatch("kernel arguments do not match Sigma".into()));
    }
    let (tx, ty) = sigma.taus();
    let cross2 = frobenius_norm_sq(sigma.sigma_xy());
    let sy = sigma.sigma_xy().matvec(y)?;
    Ok(g1_from_parts(
        dot(x, &sy),
        dot(x, x),
        dot(y, y),
        &Constants {
            tau_x: tx,
            tau_y: ty,
            tr_x: sigma.sigma_x().trace(),
            tr_y: sigma.sigma_y().trace(),
            cross2,
        },
    ))
}

fn g1_from_parts(x_s_y: f64, xx: f64, yy: f64, c: &Constants) -> f64 {
    let (tx2, ty2) = (c.tau_x * c.tau_x, c.tau_y * c.tau_y);
    (x_s_y - c.cross2 - c.cross2 / (2.0 * tx2) * (xx - c.tr_x) - c.cross2 / (2.0 * ty2) * (yy - c.tr_y))
        / (2.0 * c.tau_x * c.tau_y)
}

/// Second-order main kernel `g2_bar((x1, y1), (x2, y2))`.
pub fn g2_bar(
    (x1, y1): (&[f64], &[f64]),
    (x2, y2): (&[f64], &[f64]),
    sigma: &CovarianceBlocks,
) -> Result<f64> {
    for (x, y) in [(x1, y1), (x2, y2)] {
        if x.len() != sigma.p() || y.len() != sigma.q() {
            return Err(Error::DimensionMismatch("kernel arguments do not match Sigma".into()));
        }
    }
    let (tx, ty) = sigma.taus();
    let s = sigma.sigma_xy();
    let (s1, s2) = (s.matvec(y1)?, s.matvec(y2)?);
    Ok(g2_from_parts(
        dot(x1, x2) * dot(y1, y2),
        [dot(x1, &s1), dot(x2, &s2), dot(x1, &s2), dot(x2, &s1)],
        frobenius_norm_sq(s),
        tx * ty,
    ))
}

/// `terms = [x1'S y1, x2'S y2, x1'S y2, x2'S y1]`.
fn g2_from_parts(xy_prod: f64, terms: [f64; 4], cross2: f64, tau_prod: f64) -> f64 {
    ((xy_prod - terms[0] - terms[1] + cross2) - (terms[2] + terms[3])) / (6.0 * tau_prod)
}

/// `4 U_n(g1_bar) + 6 U_n(g2_bar)`.
pub fn hoeffding_sum(sample: &PairedSample, sigma: &CovarianceBlocks) -> Result<f64> {
    let c = constants(sample, sigma)?;
    let n = sample.n();
    let (x, y) = (sample.x(), sample.y());
    let sy = cross_images(sample, sigma)?;
    let tau_prod = c.tau_x * c.tau_y;

    let mut u1 = 0.0;
    for (i, syi) in sy.iter().enumerate() {
        let (xi, yi) = (x.row(i), y.row(i));
        u1 += g1_from_parts(dot(xi, syi), dot(xi, xi), dot(yi, yi), &c);
    }
    u1 /= n as f64;

    let mut u2 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (xi, xj) = (x.row(i), x.row(j));
            let terms = [
                dot(xi, &sy[i]),
                dot(xj, &sy[j]),
                dot(xi, &sy[j]),
                dot(xj, &sy[i]),
            ];
            u2 += g2_from_parts(dot(xi, xj) * dot(y.row(i), y.row(j)), terms, c.cross2, tau_prod);
        }
    }
    u2 /= binom2(n);
    Ok(4.0 * u1 + 6.0 * u2)
}

fn binom2(n: usize) -> f64 {
    (n * (n - 1)) as f64 / 2.0
}

/// The `psi_1, psi_2, psi_3` representation of the truncated statistic minus `dcov^2`.
pub fn tbar_fluctuation(sample: &PairedSample, sigma: &CovarianceBlocks) -> Result<f64> {
    let c = constants(sample, sigma)?;
    let n = sample.n();
    let (x, y) = (sample.x(), sample.y());
    let sy = cross_images(sample, sigma)?;

    let mut psi1 = 0.0;
    let mut psi2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            psi1 += dot(x.row(i), x.row(j)) * dot(y.row(i), y.row(j)) - c.cross2;
            psi2 += dot(x.row(i), &sy[j]) + dot(x.row(j), &sy[i]);
        }
    }
    let (tx2, ty2) = (c.tau_x * c.tau_x, c.tau_y * c.tau_y);
    let psi3: f64 = (0..n)
        .map(|i| {
            let (xi, yi) = (x.row(i), y.row(i));
            c.cross2 / tx2 * (dot(xi, xi) - c.tr_x) + c.cross2 / ty2 * (dot(yi, yi) - c.tr_y)
        })
        .sum();
    let tau_prod = c.tau_x * c.tau_y;
    Ok((psi1 - psi2) / (tau_prod * 2.0 * binom2(n)) - psi3 / (tau_prod * n as f64))
}
