//! Distance covariance in high dimensions.
//!
//! Bias-corrected (kernel) distance covariance and correlation, the
//! distance correlation test of independence, closed-form Gaussian theory
//! for the mean, variance and power of these statistics, and Monte-Carlo
//! runners that check the theory against simulation.
//!
//! ```
//! use hsdcov::{dcov_star, dcor_test, PairedSample, TestConfig};
//! use hsdcov::matrix::DenseMatrix;
//!
//! let x = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, 2.5], [4.0, 3.0], [3.5, 0.0]]).unwrap();
//! let y = x.scaled(2.0);
//! let sample = PairedSample::new(x, y).unwrap();
//! assert!(dcov_star(&sample).unwrap() > 0.0);
//! assert!(dcor_test(&sample, &TestConfig::distance(0.05)).unwrap().reject);
//! ```

pub mod dcov;
pub mod error;
pub mod experiments;
pub mod hoeffding;
pub mod independence;
pub mod kernel;
pub mod matrix;
pub mod minimax;
pub mod normal;
pub mod simgen;
pub mod theory;

pub use dcov::{
    dcor_star, dcov_star, dcov_star_kernel, dcov_star_marginal, dcov_star_marginal_kernel, dcov_triple,
    dcov_ustat_oracle, kernel_matrix, u_center, DcovTriple, PairedSample, UCenteredMatrix,
};
pub use error::{Error, Result};
pub use experiments::{
    run_clt, run_power, Center, CltConfig, CltResult, DataModel, PowerCell, PowerConfig, PowerResult, Standardization,
};
pub use hoeffding::{hoeffding_sum, tbar_fluctuation};
pub use independence::{dcor_test, TestConfig, TestResult};
pub use kernel::{resolve_bandwidth, BandwidthSpec, KernelSpec, TauSource};
pub use minimax::{minimax_eigencheck, EigenCheckReport};
pub use normal::{normal_cdf, normal_quantile};
pub use simgen::{derive_stream, sample_factor, sample_gaussian, NoiseDist, RngStream, SimScenario};
pub use theory::{
    local_param_a, mean_expansion, sigma_bar_sq, sigma_bar_sq_marginal, tau_sq, theoretical_power, theory_report,
    varrho, CovarianceBlocks, TheoryReport, VarianceParts,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/testing.md")]
    mod testing {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
