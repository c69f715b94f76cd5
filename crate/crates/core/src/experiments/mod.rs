//! Monte-Carlo runners: CLT checks for the standardized statistic and power
//! tables for the independence test.
//!
//! Replication `r` always draws its data from its own stream, and results are
//! gathered in replication order, so the output does not depend on the
//! number of worker threads.

mod clt;
pub mod ks;
mod power;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clt::{run_clt, Center, CltConfig, CltResult, Standardization};
pub use ks::{empirical_quantiles, ks_distance, standard_probs};
pub use power::{run_power, PowerCell, PowerConfig, PowerResult};

use crate::dcov::{kernel_matrix_from_sq, u_center, PairedSample};
use crate::error::{Error, Result};
use crate::kernel::{needs_distances, resolve_bandwidth_from_sq, BandwidthSpec, KernelSpec, TauSource};
use crate::matrix::{DenseMatrix, SymmetricMatrix};
use crate::simgen::{covariance_factor, sample_factor, sample_gaussian_with_factor, RngStream, SimScenario};
use crate::theory::CovarianceBlocks;

/// Where replication data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataModel {
    /// The factor model with `q = p`.
    Factor(SimScenario),
    /// `n` Gaussian rows with covariance `sigma`.
    Gaussian { sigma: CovarianceBlocks, n: usize },
}

impl DataModel {
    pub fn n(&self) -> usize {
        match self {
            DataModel::Factor(s) => s.n,
            DataModel::Gaussian { n, .. } => *n,
        }
    }

    /// Population covariance of `(X, Y)`.
    pub fn blocks(&self) -> Result<CovarianceBlocks> {
        match self {
            DataModel::Factor(s) => s.implied_blocks(),
            DataModel::Gaussian { sigma, .. } => Ok(sigma.clone()),
        }
    }

    pub(crate) fn generator(&self) -> Result<Generator<'_>> {
        let factor = match self {
            DataModel::Factor(s) => {
                s.validate()?;
                None
            }
            DataModel::Gaussian { sigma, .. } => Some(covariance_factor(sigma)?),
        };
        Ok(Generator { model: self, factor })
    }
}

pub(crate) struct Generator<'a> {
    model: &'a DataModel,
    factor: Option<DenseMatrix>,
}

impl Generator<'_> {
    pub fn sample(&self, stream: RngStream) -> Result<PairedSample> {
        match (self.model, &self.factor) {
            (DataModel::Gaussian { sigma, n }, Some(l)) => sample_gaussian_with_factor(l, sigma.p(), *n, stream),
            (DataModel::Factor(s), _) => sample_factor(s, stream),
            _ => unreachable!("Gaussian models always carry a factor"),
        }
    }
}

/// Runs `f(0..reps)` on a pool with `threads` workers (0 = rayon default),
/// returning results in replication order. The first failing replication in
/// index order is reported.
pub(crate) fn run_replications<T, F>(reps: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    let out: Vec<Result<T>> = pool.install(|| (0..reps).into_par_iter().map(&f).collect());
    out.into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::Replication {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Kernel `dcov*^2` from precomputed squared distances, with the bandwidths used.
pub(crate) fn kernel_dcov_from_sq(
    (sqx, sqy): (&SymmetricMatrix, &SymmetricMatrix),
    kernel: &KernelSpec,
    bandwidth: BandwidthSpec,
    tau: (TauSource, TauSource),
) -> Result<(f64, (f64, f64))> {
    let gx = resolve_bandwidth_from_sq(needs_distances(bandwidth, tau.0).then_some(sqx), bandwidth, tau.0)?;
    let gy = resolve_bandwidth_from_sq(needs_distances(bandwidth, tau.1).then_some(sqy), bandwidth, tau.1)?;
    let a = u_center(&kernel_matrix_from_sq(sqx, kernel, gx)?)?;
    let b = u_center(&kernel_matrix_from_sq(sqy, kernel, gy)?)?;
    Ok((a.inner(&b)?, (gx, gy)))
}

pub(crate) fn population_tau(blocks: &CovarianceBlocks) -> (TauSource, TauSource) {
    let (tx, ty) = blocks.taus();
    (TauSource::Population(tx), TauSource::Population(ty))
}
