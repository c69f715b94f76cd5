use serde::{Deserialize, Serialize};

use super::{population_tau, run_replications, DataModel};
use crate::error::{Error, Result};
use crate::independence::{statistic_from_sq, TestConfig};
use crate::kernel::{BandwidthSpec, KernelSpec};
use crate::matrix::pairwise_sq_distances;
use crate::normal::normal_quantile;
use crate::simgen::{derive_stream, NoiseDist, SimScenario};
use crate::theory::{local_param_a, theoretical_power};

/// A grid of factor-model scenarios crossed with kernels and bandwidth policies.
///
/// All kernel/bandwidth cells at the same `rho` are evaluated on the same
/// replicated datasets.
#[derive(Debug, Clone)]
pub struct PowerConfig {
    pub n: usize,
    pub p: usize,
    pub dist: NoiseDist,
    pub rhos: Vec<f64>,
    pub kernels: Vec<KernelSpec>,
    pub bandwidths: Vec<BandwidthSpec>,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub kernel: String,
    pub bandwidth: String,
    pub rho: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub empirical_power: f64,
    pub theoretical_power: f64,
    pub std_err: f64,
    /// Test statistic `n dcor*^2 / sqrt(2)` per replication.
    pub statistics: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    /// Ordered by `rho`, then kernel, then bandwidth.
    pub cells: Vec<PowerCell>,
}

/// Stream index of replication `rep` at grid row `row`.
fn stream_index(row: usize, rep: usize) -> u64 {
    ((row as u64) << 32) | rep as u64
}

pub fn run_power(cfg: &PowerConfig) -> Result<PowerResult> {
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("need at least one replication".into()));
    }
    if cfg.kernels.is_empty() || cfg.bandwidths.is_empty() || cfg.rhos.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    for bw in &cfg.bandwidths {
        bw.validate()?;
    }
    let threshold = normal_quantile(cfg.alpha / 2.0)?;

    let mut cells = Vec::new();
    for (row, &rho) in cfg.rhos.iter().enumerate() {
        let model = DataModel::Factor(SimScenario {
            n: cfg.n,
            p: cfg.p,
            rho,
            dist: cfg.dist,
        });
        let blocks = model.blocks()?;
        let tau = population_tau(&blocks);
        let tests: Vec<TestConfig> = cfg
            .kernels
            .iter()
            .flat_map(|k| {
                cfg.bandwidths
                    .iter()
                    .map(move |&bw| TestConfig::kernel(cfg.alpha, k.clone(), bw).with_tau(tau))
            })
            .collect();
        let generator = model.generator()?;

        let stats = run_replications(cfg.reps, cfg.threads, |rep| {
            let sample = generator.sample(derive_stream(cfg.seed, stream_index(row, rep)))?;
            let sqx = pairwise_sq_distances(sample.x());
            let sqy = pairwise_sq_distances(sample.y());
            tests
                .iter()
                .map(|t| statistic_from_sq(&sqx, &sqy, t).map(|s| s.value))
                .collect::<Result<Vec<f64>>>()
        })?;

        let a = local_param_a(&blocks, cfg.n)?;
        let theory = theoretical_power(&blocks, cfg.n, cfg.alpha)?;
        for (j, t) in tests.iter().enumerate() {
            let statistics: Vec<f64> = stats.iter().map(|s| s[j]).collect();
            let rejections = statistics.iter().filter(|s| s.abs() > threshold).count();
            let rate = rejections as f64 / cfg.reps as f64;
            cells.push(PowerCell {
                kernel: t.kernels.0.label().to_string(),
                bandwidth: t.bandwidths.0.to_string(),
                rho,
                a,
                empirical_power: rate,
                theoretical_power: theory,
                std_err: (rate * (1.0 - rate) / cfg.reps as f64).sqrt(),
                statistics,
            });
        }
    }
    Ok(PowerResult { cells })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PowerConfig {
        PowerConfig {
            n: 30,
            p: 10,
            dist: NoiseDist::StdNormal,
            rhos: vec![0.0, 0.5],
            kernels: vec![KernelSpec::Identity, KernelSpec::Gaussian],
            bandwidths: vec![BandwidthSpec::MedianHeuristic, BandwidthSpec::RhoTarget(1.0)],
            alpha: 0.05,
            reps: 40,
            seed: 1,
            threads: 1,
        }
    }

    #[test]
    fn grid_layout_and_invariants() {
        let r = run_power(&cfg()).unwrap();
        assert_eq!(r.cells.len(), 8);
        assert_eq!(r.cells[0].kernel, "identity");
        assert_eq!(r.cells[0].bandwidth, "median");
        assert_eq!(r.cells[3].kernel, "gaussian");
        assert_eq!(r.cells[3].bandwidth, "rho:1");
        for c in &r.cells {
            assert!((0.0..=1.0).contains(&c.empirical_power));
            let se = (c.empirical_power * (1.0 - c.empirical_power) / 40.0).sqrt();
            assert_eq!(c.std_err, se);
            assert_eq!(c.statistics.len(), 40);
        }
        // identity kernel cells do not depend on the bandwidth
        assert_eq!(r.cells[0].statistics.len(), r.cells[1].statistics.len());
        for (a, b) in r.cells[0].statistics.iter().zip(&r.cells[1].statistics) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        assert!((r.cells[0].theoretical_power - 0.05).abs() < 1e-12);
        // A = n rho^2 = 7.5
        assert!((r.cells[4].a - 7.5).abs() < 1e-12);
        assert!(r.cells[4].empirical_power > 0.8);
    }

    #[test]
    fn deterministic_across_threads() {
        let mut c = cfg();
        let a = run_power(&c).unwrap();
        c.threads = 4;
        assert_eq!(run_power(&c).unwrap(), a);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg();
        c.alpha = 1.0;
        assert!(run_power(&c).is_err());
        let mut c = cfg();
        c.rhos = vec![1.0];
        assert!(run_power(&c).is_err());
        let mut c = cfg();
        c.kernels.clear();
        assert!(run_power(&c).is_err());
    }
}
