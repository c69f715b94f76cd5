//! Closed-form population quantities for jointly Gaussian `(X, Y)`.
//!
//! Everything here is a function of the covariance blocks
//! `Sigma = [[Sigma_X, Sigma_XY], [Sigma_YX, Sigma_Y]]`: the leading-order mean
//! of the distance covariance, the first- and second-order variance terms of
//! its Hoeffding decomposition, the local parameter `A(Sigma)` and the
//! resulting power of the distance correlation test. Only leading-order terms
//! are computed; remainders are never estimated numerically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::matrix::{cholesky, frobenius_norm_sq, trace_chain, DenseMatrix, SymmetricMatrix};
use crate::normal::{normal_cdf, normal_quantile};

/// Smallest `|f'(rho)|` accepted when computing the kernel scaling factor.
pub const MIN_KERNEL_SLOPE: f64 = 1e-12;

/// Covariance blocks of a jointly Gaussian vector `(X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceBlocks {
    sigma_x: SymmetricMatrix,
    sigma_y: SymmetricMatrix,
    sigma_xy: DenseMatrix,
}

impl CovarianceBlocks {
    /// Validates shapes and positive semi-definiteness of the full matrix
    /// (Cholesky of `Sigma + 1e-10 I` must succeed).
    pub fn new(sigma_x: SymmetricMatrix, sigma_y: SymmetricMatrix, sigma_xy: DenseMatrix) -> Result<Self> {
        if sigma_xy.rows() != sigma_x.dim() || sigma_xy.cols() != sigma_y.dim() {
            return Err(Error::DimensionMismatch(format!(
                "Sigma_XY is {}x{}, expected {}x{}",
                sigma_xy.rows(),
                sigma_xy.cols(),
                sigma_x.dim(),
                sigma_y.dim()
            )));
        }
        let blocks = Self {
            sigma_x,
            sigma_y,
            sigma_xy,
        };
        let jittered = blocks.full_jittered(1e-10);
        cholesky(&jittered)?;
        Ok(blocks)
    }

    /// `Sigma_X = I_p`, `Sigma_Y = I_q`, `Sigma_XY` with `rho` on its leading diagonal.
    ///
    /// For `p = q` this is the covariance of the factor model
    /// `(sqrt(rho) Z1 + sqrt(1-rho) Z2, sqrt(rho) Z1 + sqrt(1-rho) Z3)`.
    pub fn identity_blocks(p: usize, q: usize, rho: f64) -> Result<Self> {
        let sigma_xy = DenseMatrix::from_fn(p, q, |i, j| if i == j { rho } else { 0.0 });
        Self::new(SymmetricMatrix::identity(p), SymmetricMatrix::identity(q), sigma_xy)
    }

    pub fn p(&self) -> usize {
        self.sigma_x.dim()
    }

    pub fn q(&self) -> usize {
        self.sigma_y.dim()
    }

    pub fn sigma_x(&self) -> &SymmetricMatrix {
        &self.sigma_x
    }

    pub fn sigma_y(&self) -> &SymmetricMatrix {
        &self.sigma_y
    }

    pub fn sigma_xy(&self) -> &DenseMatrix {
        &self.sigma_xy
    }

    /// The full `(p + q) x (p + q)` covariance matrix.
    pub fn full(&self) -> SymmetricMatrix {
        self.full_jittered(0.0)
    }

    fn full_jittered(&self, jitter: f64) -> SymmetricMatrix {
        let (p, q) = (self.p(), self.q());
        let full = DenseMatrix::from_fn(p + q, p + q, |i, j| {
            let v = match (i < p, j < p) {
                (true, true) => self.sigma_x[(i, j)],
                (false, false) => self.sigma_y[(i - p, j - p)],
                (true, false) => self.sigma_xy[(i, j - p)],
                (false, true) => self.sigma_xy[(j, i - p)],
            };
            if i == j {
                v + jitter
            } else {
                v
            }
        });
        SymmetricMatrix::from_dense_unchecked(full)
    }

    /// `(tau_X, tau_Y)` with `tau^2 = 2 tr(Sigma)`.
    pub fn taus(&self) -> (f64, f64) {
        (tau_sq(&self.sigma_x).sqrt(), tau_sq(&self.sigma_y).sqrt())
    }

    fn positive_taus(&self) -> Result<(f64, f64)> {
        let (tx, ty) = self.taus();
        if tx > 0.0 && ty > 0.0 {
            Ok((tx, ty))
        } else {
            Err(Error::InvalidParameter(format!(
                "tau_X and tau_Y must be positive, got ({tx}, {ty})"
            )))
        }
    }
}

/// `tau^2 = E|X - X'|^2 = 2 tr(Sigma)`.
pub fn tau_sq(sigma: &SymmetricMatrix) -> f64 {
    2.0 * sigma.trace()
}

/// Leading term `||Sigma_XY||_F^2 / (tau_X tau_Y)` of the population distance covariance.
pub fn mean_expansion(sigma: &CovarianceBlocks) -> Result<f64> {
    let (tx, ty) = sigma.positive_taus()?;
    Ok(frobenius_norm_sq(sigma.sigma_xy()) / (tx * ty))
}

/// First-order, second-order and total variance terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParts {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub total: f64,
}

impl VarianceParts {
    fn new(sigma1_sq: f64, sigma2_sq: f64) -> Self {
        Self {
            sigma1_sq,
            sigma2_sq,
            total: sigma1_sq + sigma2_sq,
        }
    }

    /// Diagnostics for covariances outside the bounded-spectrum regime,
    /// where the first-order term can turn negative.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.sigma1_sq < 0.0 {
            w.push(format!(
                "first-order variance term is negative ({:e}); the covariance is outside the regime where the expansion is valid",
                self.sigma1_sq
            ));
        }
        if self.total <= 0.0 {
            w.push(format!("total variance is not positive ({:e})", self.total));
        }
        w
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::SampleTooSmall {
            required: 2,
            actual: n,
        })
    } else {
        Ok(())
    }
}

/// Variance of `dcov*^2(X, Y)` to leading order, split into the first-order
/// (non-degenerate) and second-order (degenerate) Hoeffding contributions.
pub fn sigma_bar_sq(sigma: &CovarianceBlocks, n: usize) -> Result<VarianceParts> {
    check_n(n)?;
    let (tx, ty) = sigma.positive_taus()?;
    let (tx2, ty2) = (tx * tx, ty * ty);
    let sx = sigma.sigma_x().as_dense();
    let sy = sigma.sigma_y().as_dense();
    let sxy = sigma.sigma_xy();
    let syx = sxy.transpose();

    let cross2 = frobenius_norm_sq(sxy);
    let fx2 = frobenius_norm_sq(sx);
    let fy2 = frobenius_norm_sq(sy);
    // ||Sigma_XY Sigma_YX||_F^2 = tr((Sigma_XY Sigma_YX)^2)
    let t_cross4 = trace_chain(&[sxy, &syx, sxy, &syx])?;
    let t_mixed = trace_chain(&[sxy, sy, &syx, sx])?;
    let t_x = trace_chain(&[sxy, &syx, sx])?;
    let t_y = trace_chain(&[&syx, sxy, sy])?;

    let bracket = t_cross4 + t_mixed
        + cross2 * cross2 * fx2 / (2.0 * tx2 * tx2)
        + cross2 * cross2 * fy2 / (2.0 * ty2 * ty2)
        - 2.0 * cross2 / tx2 * t_x
        - 2.0 * cross2 / ty2 * t_y
        + cross2.powi(3) / (tx2 * ty2);
    let nf = n as f64;
    let s1 = 4.0 / (nf * tx2 * ty2) * bracket;
    let s2 = 2.0 / (nf * (nf - 1.0) * tx2 * ty2) * (fx2 * fy2 + cross2 * cross2);
    Ok(VarianceParts::new(s1, s2))
}

/// Variance of the marginal `dcov*^2(X)` to leading order.
pub fn sigma_bar_sq_marginal(sigma_x: &SymmetricMatrix, n: usize) -> Result<VarianceParts> {
    check_n(n)?;
    let tr = sigma_x.trace();
    if tr <= 0.0 {
        return Err(Error::InvalidParameter(format!("tr(Sigma_X) must be positive, got {tr}")));
    }
    let sx = sigma_x.as_dense();
    let f2 = frobenius_norm_sq(sx);
    let sq_f2 = trace_chain(&[sx, sx, sx, sx])?;
    let cube = trace_chain(&[sx, sx, sx])?;
    let nf = n as f64;
    let tr2 = tr * tr;
    let s1 = (2.0 * sq_f2 + f2.powi(3) / (2.0 * tr2) - 2.0 * f2 * cube / tr) / (nf * tr2);
    let s2 = f2 * f2 / (nf * (nf - 1.0) * tr2);
    Ok(VarianceParts::new(s1, s2))
}

/// Local (contiguity) parameter `A = n ||Sigma_XY||_F^2 / (||Sigma_X||_F ||Sigma_Y||_F)`.
pub fn local_param_a(sigma: &CovarianceBlocks, n: usize) -> Result<f64> {
    let fx = frobenius_norm_sq(sigma.sigma_x().as_dense()).sqrt();
    let fy = frobenius_norm_sq(sigma.sigma_y().as_dense()).sqrt();
    if fx <= 0.0 || fy <= 0.0 {
        return Err(Error::InvalidParameter("degenerate marginal covariance".into()));
    }
    Ok(n as f64 * frobenius_norm_sq(sigma.sigma_xy()) / (fx * fy))
}

/// Kernel scaling `f_X'(rho_X) f_Y'(rho_Y) / (gamma_X gamma_Y)` with `rho = tau / gamma`.
pub fn varrho(
    kernels: (&KernelSpec, &KernelSpec),
    gamma: (f64, f64),
    sigma: &CovarianceBlocks,
) -> Result<f64> {
    let (tx, ty) = sigma.positive_taus()?;
    varrho_from_taus(kernels, gamma, (tx, ty))
}

pub(crate) fn varrho_from_taus(
    kernels: (&KernelSpec, &KernelSpec),
    gamma: (f64, f64),
    tau: (f64, f64),
) -> Result<f64> {
    for g in [gamma.0, gamma.1] {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidBandwidth(g));
        }
    }
    let slope = |k: &KernelSpec, rho: f64| {
        let d = k.derivative(rho);
        if d.abs() < MIN_KERNEL_SLOPE || !d.is_finite() {
            Err(Error::DegenerateKernel {
                argument: rho,
                value: d,
            })
        } else {
            Ok(d)
        }
    };
    let dx = slope(kernels.0, tau.0 / gamma.0)?;
    let dy = slope(kernels.1, tau.1 / gamma.1)?;
    Ok(dx * dy / (gamma.0 * gamma.1))
}

/// `P(|N(m, 1)| > z_{alpha/2})`.
pub fn power_from_shift(shift: f64, alpha: f64) -> Result<f64> {
    let z = normal_quantile(alpha / 2.0)?;
    Ok(normal_cdf(shift - z) + normal_cdf(-shift - z))
}

/// Asymptotic power of the (kernel) distance correlation test with mean
/// shift `m_n = A(Sigma) / sqrt(2)`.
pub fn theoretical_power(sigma: &CovarianceBlocks, n: usize, alpha: f64) -> Result<f64> {
    let a = local_param_a(sigma, n)?;
    power_from_shift(a / std::f64::consts::SQRT_2, alpha)
}

/// All closed-form predictions for one covariance and sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    #[serde(rename = "tau_X_sq")]
    pub tau_x_sq: f64,
    #[serde(rename = "tau_Y_sq")]
    pub tau_y_sq: f64,
    pub mean: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub sigma_sq: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub power: f64,
    pub warnings: Vec<String>,
}

pub fn theory_report(sigma: &CovarianceBlocks, n: usize, alpha: f64) -> Result<TheoryReport> {
    let var = sigma_bar_sq(sigma, n)?;
    Ok(TheoryReport {
        tau_x_sq: tau_sq(sigma.sigma_x()),
        tau_y_sq: tau_sq(sigma.sigma_y()),
        mean: mean_expansion(sigma)?,
        sigma1_sq: var.sigma1_sq,
        sigma2_sq: var.sigma2_sq,
        sigma_sq: var.total,
        a: local_param_a(sigma, n)?,
        power: theoretical_power(sigma, n, alpha)?,
        warnings: var.warnings(),
    })
}
