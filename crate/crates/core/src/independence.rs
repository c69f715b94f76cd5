//! The (kernel) distance correlation test of independence.
//!
//! The statistic is `n dcor*^2 / sqrt(2)`, i.e.
//! `n dcov*^2(X,Y;f,gamma) / sqrt(2 dcov*^2(X;f,gamma) dcov*^2(Y;f,gamma))`,
//! compared against the two-sided normal quantile `z_{alpha/2}`.

use serde::{Deserialize, Serialize};

use crate::dcov::{kernel_matrix_from_sq, u_center, DcovTriple, PairedSample, UCenteredMatrix, MIN_SAMPLE};
use crate::error::{Error, Result};
use crate::kernel::{needs_distances, resolve_bandwidth_from_sq, BandwidthSpec, KernelSpec, TauSource};
use crate::matrix::{pairwise_sq_distances, SymmetricMatrix};
use crate::normal::{normal_cdf, normal_quantile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
    pub p_value: f64,
    pub kernel_label: String,
    /// Resolved `(gamma_X, gamma_Y)`; zero for a block whose bandwidth could
    /// not be resolved because the data are constant.
    pub bandwidth_used: (f64, f64),
    /// Set when the marginal statistics vanish and the statistic is defined as 0.
    pub degenerate: bool,
}

/// Kernel and bandwidth choice for both blocks.
#[derive(Debug, Clone)]
pub struct TestConfig {
    pub alpha: f64,
    pub kernels: (KernelSpec, KernelSpec),
    pub bandwidths: (BandwidthSpec, BandwidthSpec),
    pub tau: (TauSource, TauSource),
}

impl TestConfig {
    /// The plain distance correlation test (identity kernel, unit bandwidth).
    pub fn distance(alpha: f64) -> Self {
        Self::kernel(alpha, KernelSpec::Identity, BandwidthSpec::Fixed(1.0))
    }

    /// Same kernel and bandwidth policy on both blocks, with `tau` estimated from the data.
    pub fn kernel(alpha: f64, kernel: KernelSpec, bandwidth: BandwidthSpec) -> Self {
        Self {
            alpha,
            kernels: (kernel.clone(), kernel),
            bandwidths: (bandwidth, bandwidth),
            tau: (TauSource::Estimate, TauSource::Estimate),
        }
    }

    /// Replaces the `tau` sources, e.g. with known population values.
    pub fn with_tau(mut self, tau: (TauSource, TauSource)) -> Self {
        self.tau = tau;
        self
    }

    fn label(&self) -> String {
        let (kx, ky) = (self.kernels.0.label(), self.kernels.1.label());
        if kx == ky {
            kx.to_string()
        } else {
            format!("{kx}/{ky}")
        }
    }
}

/// Test statistic, its marginal pieces and the resolved bandwidths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Statistic {
    pub value: f64,
    pub triple: Option<DcovTriple>,
    pub gamma: (f64, f64),
}

/// Centered kernel matrix of one block, or `None` when the bandwidth cannot be
/// resolved because all points coincide.
fn centered_block(
    sq: &SymmetricMatrix,
    kernel: &KernelSpec,
    spec: BandwidthSpec,
    tau: TauSource,
) -> Result<Option<(UCenteredMatrix, f64)>> {
    let gamma = match resolve_bandwidth_from_sq(needs_distances(spec, tau).then_some(sq), spec, tau) {
        Ok(g) => g,
        Err(Error::DegenerateSample(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some((u_center(&kernel_matrix_from_sq(sq, kernel, gamma)?)?, gamma)))
}

pub(crate) fn test_statistic(sample: &PairedSample, cfg: &TestConfig) -> Result<Statistic> {
    statistic_from_sq(
        &pairwise_sq_distances(sample.x()),
        &pairwise_sq_distances(sample.y()),
        cfg,
    )
}

/// The test statistic from precomputed squared distance matrices of both blocks.
pub(crate) fn statistic_from_sq(sqx: &SymmetricMatrix, sqy: &SymmetricMatrix, cfg: &TestConfig) -> Result<Statistic> {
    let n = sqx.dim();
    if n < MIN_SAMPLE {
        return Err(Error::SampleTooSmall {
            required: MIN_SAMPLE,
            actual: n,
        });
    }
    let a = centered_block(sqx, &cfg.kernels.0, cfg.bandwidths.0, cfg.tau.0)?;
    let b = centered_block(sqy, &cfg.kernels.1, cfg.bandwidths.1, cfg.tau.1)?;
    let gamma = (a.as_ref().map_or(0.0, |a| a.1), b.as_ref().map_or(0.0, |b| b.1));
    let (Some((a, _)), Some((b, _))) = (a, b) else {
        return Ok(Statistic {
            value: 0.0,
            triple: None,
            gamma,
        });
    };
    let triple = DcovTriple::from_centered(&a, &b)?;
    Ok(match triple.correlation() {
        Some(r) => Statistic {
            value: n as f64 * r / std::f64::consts::SQRT_2,
            triple: Some(triple),
            gamma,
        },
        None => Statistic {
            value: 0.0,
            triple: None,
            gamma,
        },
    })
}

/// Runs the test. Constant data never errors: the statistic is 0, the test
/// does not reject and `degenerate` is set.
pub fn dcor_test(sample: &PairedSample, cfg: &TestConfig) -> Result<TestResult> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let threshold = normal_quantile(cfg.alpha / 2.0)?;
    let stat = test_statistic(sample, cfg)?;
    let degenerate = stat.triple.is_none();
    let p_value = if degenerate {
        1.0
    } else {
        (2.0 * normal_cdf(-stat.value.abs())).min(1.0)
    };
    Ok(TestResult {
        statistic: stat.value,
        threshold,
        reject: !degenerate && stat.value.abs() > threshold,
        p_value,
        kernel_label: cfg.label(),
        bandwidth_used: stat.gamma,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DenseMatrix;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
        DenseMatrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    #[test]
    fn constant_y_is_degenerate() {
        let x = lcg_matrix(10, 3, 1);
        let y = DenseMatrix::from_fn(10, 2, |_, j| j as f64);
        let sample = PairedSample::new(x, y).unwrap();
        for cfg in [
            TestConfig::distance(0.05),
            TestConfig::kernel(0.05, KernelSpec::Gaussian, BandwidthSpec::MedianHeuristic),
            TestConfig::kernel(0.05, KernelSpec::Laplace, BandwidthSpec::RhoTarget(1.0)),
        ] {
            let r = dcor_test(&sample, &cfg).unwrap();
            assert_eq!(r.statistic, 0.0);
            assert!(!r.reject);
            assert_eq!(r.p_value, 1.0);
            assert!(r.degenerate);
        }
    }

    #[test]
    fn x_equals_y_rejects() {
        for n in [4usize, 5, 10, 40] {
            let x = lcg_matrix(n, 3, n as u64);
            let sample = PairedSample::new(x.clone(), x).unwrap();
            let r = dcor_test(&sample, &TestConfig::distance(0.05)).unwrap();
            let expected = n as f64 / std::f64::consts::SQRT_2;
            assert!((r.statistic - expected).abs() < 1e-10 * expected);
            assert!(r.reject);
            assert!(r.p_value < 0.05);
            assert!((r.threshold - 1.959963984540054).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_kernel_ignores_bandwidth() {
        let sample = PairedSample::new(lcg_matrix(30, 4, 7), lcg_matrix(30, 2, 8)).unwrap();
        let base = dcor_test(&sample, &TestConfig::distance(0.05)).unwrap();
        for bw in [BandwidthSpec::Fixed(0.3), BandwidthSpec::MedianHeuristic, BandwidthSpec::RhoTarget(2.0)] {
            let r = dcor_test(&sample, &TestConfig::kernel(0.05, KernelSpec::Identity, bw)).unwrap();
            assert!((r.statistic - base.statistic).abs() <= 1e-12 * (1.0 + base.statistic.abs()));
            assert_eq!(r.reject, base.reject);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let sample = PairedSample::new(lcg_matrix(3, 1, 1), lcg_matrix(3, 1, 2)).unwrap();
        assert!(matches!(
            dcor_test(&sample, &TestConfig::distance(0.05)),
            Err(Error::SampleTooSmall { .. })
        ));
        let sample = PairedSample::new(lcg_matrix(8, 1, 1), lcg_matrix(8, 1, 2)).unwrap();
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(dcor_test(&sample, &TestConfig::distance(alpha)).is_err());
        }
    }

    #[test]
    fn labels_and_bandwidths() {
        let sample = PairedSample::new(lcg_matrix(12, 2, 3), lcg_matrix(12, 2, 4)).unwrap();
        let cfg = TestConfig::kernel(0.05, KernelSpec::Gaussian, BandwidthSpec::RhoTarget(2.0))
            .with_tau((TauSource::Population(4.0), TauSource::Population(6.0)));
        let r = dcor_test(&sample, &cfg).unwrap();
        assert_eq!(r.kernel_label, "gaussian");
        assert_eq!(r.bandwidth_used, (2.0, 3.0));
    }
}
