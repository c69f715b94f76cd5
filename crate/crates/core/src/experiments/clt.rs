use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ks::{empirical_quantiles, ks_distance, standard_probs};
use super::{kernel_dcov_from_sq, population_tau, run_replications, DataModel};
use crate::error::{Error, Result};
use crate::kernel::{BandwidthSpec, KernelSpec};
use crate::matrix::{frobenius_norm_sq, pairwise_sq_distances};
use crate::normal::normal_inv_cdf;
use crate::simgen::derive_stream;
use crate::theory::{mean_expansion, sigma_bar_sq, varrho_from_taus};

/// How the replicated statistics are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standardization {
    /// `(dcov*^2 / varrho - center) / sigma_bar`.
    #[serde(rename = "theory")]
    TheorySigma,
    /// `n (tau_X tau_Y dcov*^2 / varrho - ||Sigma_XY||^2) / (sqrt(2) ||Sigma_X|| ||Sigma_Y||)`.
    #[serde(rename = "null")]
    NullSigma,
    /// Replication sample mean and standard deviation; ignores [`Center`].
    #[serde(rename = "empirical")]
    EmpiricalSigma,
}

impl FromStr for Standardization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(Self::TheorySigma),
            "null" => Ok(Self::NullSigma),
            "empirical" => Ok(Self::EmpiricalSigma),
            other => Err(Error::InvalidParameter(format!(
                "unknown standardization '{other}' (expected theory, null or empirical)"
            ))),
        }
    }
}

impl fmt::Display for Standardization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TheorySigma => "theory",
            Self::NullSigma => "null",
            Self::EmpiricalSigma => "empirical",
        })
    }
}

/// Centering for the theory-based standardizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Center {
    /// Leading term `||Sigma_XY||^2 / (tau_X tau_Y)` of the mean.
    #[serde(rename = "theory")]
    TheoryMean,
    #[serde(rename = "empirical")]
    EmpiricalMean,
}

impl FromStr for Center {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(Self::TheoryMean),
            "empirical" => Ok(Self::EmpiricalMean),
            other => Err(Error::InvalidParameter(format!(
                "unknown center '{other}' (expected theory or empirical)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CltConfig {
    pub model: DataModel,
    pub kernel: KernelSpec,
    pub bandwidth: BandwidthSpec,
    pub reps: usize,
    pub standardization: Standardization,
    pub center: Center,
    pub seed: u64,
    /// Worker threads; 0 picks the rayon default. Never affects the output.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    /// `dcov*^2(X, Y; f, gamma)` per replication.
    pub raw: Vec<f64>,
    /// `varrho(gamma)` per replication (constant unless the bandwidth is data driven).
    pub varrho: Vec<f64>,
    pub standardized: Vec<f64>,
    pub probs: Vec<f64>,
    pub sample_quantiles: Vec<f64>,
    pub normal_quantiles: Vec<f64>,
    pub ks_distance: f64,
    /// Leading-order mean of `dcov*^2` (identity-kernel scale).
    pub theory_mean: f64,
    /// Leading-order variance of `dcov*^2` (identity-kernel scale).
    pub theory_variance: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

pub fn run_clt(cfg: &CltConfig) -> Result<CltResult> {
    if cfg.reps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replications, got {}", cfg.reps)));
    }
    cfg.bandwidth.validate()?;
    let blocks = cfg.model.blocks()?;
    let n = cfg.model.n();
    let tau = population_tau(&blocks);
    let taus = blocks.taus();
    let generator = cfg.model.generator()?;

    let reps = run_replications(cfg.reps, cfg.threads, |r| {
        let sample = generator.sample(derive_stream(cfg.seed, r as u64))?;
        let sqx = pairwise_sq_distances(sample.x());
        let sqy = pairwise_sq_distances(sample.y());
        let (value, gamma) = kernel_dcov_from_sq((&sqx, &sqy), &cfg.kernel, cfg.bandwidth, tau)?;
        let rho = varrho_from_taus((&cfg.kernel, &cfg.kernel), gamma, taus)?;
        Ok((value, rho))
    })?;
    let (raw, varrho): (Vec<f64>, Vec<f64>) = reps.into_iter().unzip();
    let rescaled: Vec<f64> = raw.iter().zip(&varrho).map(|(x, r)| x / r).collect();

    let theory_mean = mean_expansion(&blocks)?;
    let theory_variance = sigma_bar_sq(&blocks, n)?.total;
    let centered = |xs: Vec<f64>, theory: f64| -> Vec<f64> {
        let c = match cfg.center {
            Center::TheoryMean => theory,
            Center::EmpiricalMean => mean(&xs),
        };
        xs.into_iter().map(|x| x - c).collect()
    };
    let standardized: Vec<f64> = match cfg.standardization {
        Standardization::TheorySigma => {
            if theory_variance.is_nan() || theory_variance <= 0.0 {
                return Err(Error::DegenerateSample(format!(
                    "theoretical variance is not positive ({theory_variance:e})"
                )));
            }
            let s = theory_variance.sqrt();
            centered(rescaled, theory_mean).into_iter().map(|x| x / s).collect()
        }
        Standardization::NullSigma => {
            let (tx, ty) = taus;
            let cross2 = frobenius_norm_sq(blocks.sigma_xy());
            let fx = frobenius_norm_sq(blocks.sigma_x().as_dense()).sqrt();
            let fy = frobenius_norm_sq(blocks.sigma_y().as_dense()).sqrt();
            let scale = n as f64 / (std::f64::consts::SQRT_2 * fx * fy);
            let z: Vec<f64> = rescaled.iter().map(|x| scale * (tx * ty * x - cross2)).collect();
            match cfg.center {
                Center::TheoryMean => z,
                Center::EmpiricalMean => centered(z, 0.0),
            }
        }
        Standardization::EmpiricalSigma => {
            let (m, s) = (mean(&rescaled), sample_sd(&rescaled));
            if s.is_nan() || s <= 0.0 {
                return Err(Error::DegenerateSample("replications have zero spread".into()));
            }
            rescaled.iter().map(|x| (x - m) / s).collect()
        }
    };

    let probs = standard_probs();
    let sample_quantiles = empirical_quantiles(&standardized, &probs)?;
    let normal_quantiles = probs.iter().map(|&p| normal_inv_cdf(p)).collect::<Result<Vec<_>>>()?;
    Ok(CltResult {
        ks_distance: ks_distance(&standardized)?,
        raw,
        varrho,
        standardized,
        probs,
        sample_quantiles,
        normal_quantiles,
        theory_mean,
        theory_variance,
    })
}
