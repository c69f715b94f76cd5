//! Distance kernels `f` and bandwidth policies for the generalized
//! (kernel) distance covariance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{pairwise_sq_distances, DenseMatrix, SymmetricMatrix};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied kernel. The derivative must be given explicitly.
#[derive(Clone)]
pub struct CustomKernel {
    pub name: String,
    pub f: ScalarFn,
    pub f_prime: ScalarFn,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Kernel applied to scaled distances `w = |x - x'| / gamma`.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// `f(w) = w`; recovers the plain distance covariance.
    Identity,
    /// `f(w) = exp(-w^2 / 2)`.
    Gaussian,
    /// `f(w) = exp(-w)`.
    Laplace,
    Custom(CustomKernel),
}

impl KernelSpec {
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        KernelSpec::Custom(CustomKernel {
            name: name.into(),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
        })
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        match self {
            KernelSpec::Identity => w,
            KernelSpec::Gaussian => (-0.5 * w * w).exp(),
            KernelSpec::Laplace => (-w).exp(),
            KernelSpec::Custom(c) => (c.f)(w),
        }
    }

    #[inline]
    pub fn derivative(&self, w: f64) -> f64 {
        match self {
            KernelSpec::Identity => 1.0,
            KernelSpec::Gaussian => -w * (-0.5 * w * w).exp(),
            KernelSpec::Laplace => -(-w).exp(),
            KernelSpec::Custom(c) => (c.f_prime)(w),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            KernelSpec::Identity => "identity",
            KernelSpec::Gaussian => "gaussian",
            KernelSpec::Laplace => "laplace",
            KernelSpec::Custom(c) => &c.name,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, KernelSpec::Identity)
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "distance" => Ok(KernelSpec::Identity),
            "gaussian" => Ok(KernelSpec::Gaussian),
            "laplace" => Ok(KernelSpec::Laplace),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel '{other}' (expected identity, gaussian or laplace)"
            ))),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the bandwidth `gamma` is chosen for one block of variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthSpec {
    Fixed(f64),
    /// Median of the pairwise sample distances.
    MedianHeuristic,
    /// `gamma = tau / rho_target`, i.e. fix the ratio `rho = tau / gamma`.
    RhoTarget(f64),
}

impl BandwidthSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BandwidthSpec::Fixed(g) | BandwidthSpec::RhoTarget(g) if !(g > 0.0 && g.is_finite()) => {
                Err(Error::InvalidBandwidth(g))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for BandwidthSpec {
    type Err = Error;

    /// Grammar: `fixed:<gamma>`, `median`, `rho:<rho_target>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad bandwidth value '{v}'")))
        };
        let spec = if s.eq_ignore_ascii_case("median") {
            BandwidthSpec::MedianHeuristic
        } else if let Some(v) = s.strip_prefix("fixed:") {
            BandwidthSpec::Fixed(parse(v)?)
        } else if let Some(v) = s.strip_prefix("rho:") {
            BandwidthSpec::RhoTarget(parse(v)?)
        } else {
            return Err(Error::InvalidParameter(format!(
                "bad bandwidth '{s}' (expected fixed:<gamma>, median or rho:<rho>)"
            )));
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for BandwidthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthSpec::Fixed(g) => write!(f, "fixed:{g}"),
            BandwidthSpec::MedianHeuristic => f.write_str("median"),
            BandwidthSpec::RhoTarget(r) => write!(f, "rho:{r}"),
        }
    }
}

/// Where `tau` (root mean squared interpoint distance) comes from when a
/// [`BandwidthSpec::RhoTarget`] is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TauSource {
    /// Known population value, e.g. `sqrt(2 tr Sigma_X)`.
    Population(f64),
    /// `sqrt` of the mean squared pairwise distance of the sample.
    Estimate,
}

/// Resolves a bandwidth for the rows of `x`.
pub fn resolve_bandwidth(x: &DenseMatrix, spec: BandwidthSpec, tau: TauSource) -> Result<f64> {
    let sq = needs_distances(spec, tau).then(|| pairwise_sq_distances(x));
    resolve_bandwidth_from_sq(sq.as_ref(), spec, tau)
}

pub(crate) fn needs_distances(spec: BandwidthSpec, tau: TauSource) -> bool {
    matches!(
        (spec, tau),
        (BandwidthSpec::MedianHeuristic, _) | (BandwidthSpec::RhoTarget(_), TauSource::Estimate)
    )
}

/// Same as [`resolve_bandwidth`] but reuses precomputed squared distances.
pub(crate) fn resolve_bandwidth_from_sq(
    sq: Option<&SymmetricMatrix>,
    spec: BandwidthSpec,
    tau: TauSource,
) -> Result<f64> {
    spec.validate()?;
    let need_sq = || {
        let sq = sq.expect("squared distances required for data-driven bandwidths");
        if sq.dim() < 2 {
            return Err(Error::SampleTooSmall {
                required: 2,
                actual: sq.dim(),
            });
        }
        Ok(sq)
    };
    match spec {
        BandwidthSpec::Fixed(g) => Ok(g),
        BandwidthSpec::MedianHeuristic => {
            let sq = need_sq()?;
            let n = sq.dim();
            let mut d: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
            for s in 0..n {
                for t in (s + 1)..n {
                    d.push(sq[(s, t)].sqrt());
                }
            }
            let mid = (d.len() - 1) / 2;
            let (_, median, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
            let median = *median;
            if median > 0.0 {
                Ok(median)
            } else {
                Err(Error::DegenerateSample(
                    "median pairwise distance is zero".into(),
                ))
            }
        }
        BandwidthSpec::RhoTarget(rho) => {
            let tau = match tau {
                TauSource::Population(t) if t > 0.0 && t.is_finite() => t,
                TauSource::Population(t) => {
                    return Err(Error::InvalidParameter(format!("population tau must be positive, got {t}")))
                }
                TauSource::Estimate => estimate_tau(need_sq()?)?,
            };
            Ok(tau / rho)
        }
    }
}

fn estimate_tau(sq: &SymmetricMatrix) -> Result<f64> {
    let n = sq.dim();
    let mut acc = 0.0;
    for s in 0..n {
        for t in (s + 1)..n {
            acc += sq[(s, t)];
        }
    }
    let tau = (acc / (n * (n - 1) / 2) as f64).sqrt();
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err(Error::DegenerateSample("all pairwise distances are zero".into()))
    }
}
