//! Reproducible data generation.
//!
//! Every dataset is a pure function of `(master_seed, stream_index)` and the
//! scenario. Streams are ChaCha8 generators seeded from the master seed with
//! the index selecting the ChaCha stream, so replications can be generated in
//! any order or in parallel.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dcov::PairedSample;
use crate::error::{Error, Result};
use crate::matrix::{cholesky, DenseMatrix, SymmetricMatrix};
use crate::theory::CovarianceBlocks;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    /// A fresh generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

pub fn derive_stream(master_seed: u64, index: u64) -> RngStream {
    RngStream {
        master_seed,
        stream_index: index,
    }
}

/// Coordinate noise with mean 0 and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseDist {
    #[serde(rename = "normal")]
    StdNormal,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    #[serde(rename = "uniform")]
    UniformSqrt3,
    /// Student t with 4 degrees of freedom divided by `sqrt(2)`.
    #[serde(rename = "t4")]
    ScaledT4,
}

impl NoiseDist {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::StdNormal => rng.sample(StandardNormal),
            NoiseDist::UniformSqrt3 => {
                let s3 = 3f64.sqrt();
                rng.random_range(-s3..s3)
            }
            NoiseDist::ScaledT4 => {
                let z: f64 = rng.sample(StandardNormal);
                let chi2: f64 = (0..4)
                    .map(|_| {
                        let g: f64 = rng.sample(StandardNormal);
                        g * g
                    })
                    .sum();
                z / (chi2 / 4.0).sqrt() / std::f64::consts::SQRT_2
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseDist::StdNormal => "normal",
            NoiseDist::UniformSqrt3 => "uniform",
            NoiseDist::ScaledT4 => "t4",
        }
    }
}

impl FromStr for NoiseDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(NoiseDist::StdNormal),
            "uniform" => Ok(NoiseDist::UniformSqrt3),
            "t4" | "t" => Ok(NoiseDist::ScaledT4),
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution '{other}' (expected normal, uniform or t4)"
            ))),
        }
    }
}

impl fmt::Display for NoiseDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The factor model
/// `X_j = sqrt(rho) Z1 + sqrt(1 - rho) Z2`, `Y_j = sqrt(rho) Z1 + sqrt(1 - rho) Z3`,
/// independently over coordinates `j` and rows, with `q = p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub dist: NoiseDist,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidParameter("n and p must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        Ok(())
    }

    /// `Sigma_X = Sigma_Y = I_p`, `Sigma_XY = rho I_p`, valid for every noise distribution.
    pub fn implied_blocks(&self) -> Result<CovarianceBlocks> {
        self.validate()?;
        CovarianceBlocks::identity_blocks(self.p, self.p, self.rho)
    }
}

pub fn sample_factor(scn: &SimScenario, stream: RngStream) -> Result<PairedSample> {
    scn.validate()?;
    let mut rng = stream.rng();
    let (a, b) = (scn.rho.sqrt(), (1.0 - scn.rho).sqrt());
    let mut x = Vec::with_capacity(scn.n * scn.p);
    let mut y = Vec::with_capacity(scn.n * scn.p);
    for _ in 0..scn.n * scn.p {
        let z1 = scn.dist.draw(&mut rng);
        let z2 = scn.dist.draw(&mut rng);
        let z3 = scn.dist.draw(&mut rng);
        x.push(a * z1 + b * z2);
        y.push(a * z1 + b * z3);
    }
    PairedSample::new(
        DenseMatrix::new(scn.n, scn.p, x)?,
        DenseMatrix::new(scn.n, scn.p, y)?,
    )
}

/// Cholesky factor of the full covariance, retrying with a `1e-10` ridge when
/// the matrix is only semi-definite.
pub fn covariance_factor(sigma: &CovarianceBlocks) -> Result<DenseMatrix> {
    let full = sigma.full();
    match cholesky(&full) {
        Ok(l) => Ok(l),
        Err(Error::NotPositiveDefinite { .. }) => {
            let d = full.dim();
            let ridge = full.as_dense().add(&DenseMatrix::identity(d).scaled(1e-10))?;
            cholesky(&SymmetricMatrix::new(ridge)?)
        }
        Err(e) => Err(e),
    }
}

/// `n` i.i.d. rows from `N(0, Sigma)`: first `p` columns go to `X`, the rest to `Y`.
pub fn sample_gaussian(sigma: &CovarianceBlocks, n: usize, stream: RngStream) -> Result<PairedSample> {
    sample_gaussian_with_factor(&covariance_factor(sigma)?, sigma.p(), n, stream)
}

/// As [`sample_gaussian`] with a precomputed lower-triangular factor.
pub fn sample_gaussian_with_factor(
    factor: &DenseMatrix,
    p: usize,
    n: usize,
    stream: RngStream,
) -> Result<PairedSample> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let d = factor.rows();
    if p > d {
        return Err(Error::DimensionMismatch(format!("p = {p} exceeds the factor dimension {d}")));
    }
    let mut rng = stream.rng();
    let mut z = vec![0.0; d];
    let mut x = Vec::with_capacity(n * p);
    let mut y = Vec::with_capacity(n * (d - p));
    for _ in 0..n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let row = factor.row(i);
            let v: f64 = row[..=i].iter().zip(&z).map(|(l, z)| l * z).sum();
            if i < p {
                x.push(v);
            } else {
                y.push(v);
            }
        }
    }
    PairedSample::new(DenseMatrix::new(n, p, x)?, DenseMatrix::new(n, d - p, y)?)
}
