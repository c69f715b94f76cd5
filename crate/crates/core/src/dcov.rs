//! Sample distance covariance and its kernelized generalization.
//!
//! All estimators go through the same path: a zero-diagonal matrix of
//! `f(|X_k - X_l| / gamma)` values is U-centered, and the bias-corrected
//! statistic is the normalized inner product of two U-centered matrices.
//! With `f(w) = w` and `gamma = 1` this is the classical unbiased estimator
//! of the squared distance covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::matrix::{pairwise_sq_distances, DenseMatrix, SymmetricMatrix};

/// Smallest sample size accepted by the U-centered estimators.
pub const MIN_SAMPLE: usize = 4;

/// Row-aligned observations `(X_i, Y_i)`, `X` is `n x p` and `Y` is `n x q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    x: DenseMatrix,
    y: DenseMatrix,
}

impl PairedSample {
    pub fn new(x: DenseMatrix, y: DenseMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has {}",
                x.rows(),
                y.rows()
            )));
        }
        if x.rows() == 0 {
            return Err(Error::SampleTooSmall {
                required: 1,
                actual: 0,
            });
        }
        Ok(Self { x, y })
    }

    #[inline]
    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    #[inline]
    pub fn y(&self) -> &DenseMatrix {
        &self.y
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.y.cols()
    }

    /// Applies the same row permutation to both blocks.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let pick = |m: &DenseMatrix| DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(perm[i], j)]);
        Self::new(pick(&self.x), pick(&self.y))
    }

    pub fn into_parts(self) -> (DenseMatrix, DenseMatrix) {
        (self.x, self.y)
    }
}

/// A U-centered `n x n` matrix. Only off-diagonal entries carry information;
/// the diagonal is stored as zero. Off-diagonal row sums vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct UCenteredMatrix {
    m: SymmetricMatrix,
}

impl UCenteredMatrix {
    #[inline]
    pub fn n(&self) -> usize {
        self.m.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.m
    }

    /// `(1 / (n (n - 3))) sum_{k != l} self_kl other_kl`.
    pub fn inner(&self, other: &UCenteredMatrix) -> Result<f64> {
        let n = self.n();
        if other.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "U-centered matrices of size {n} and {}",
                other.n()
            )));
        }
        let a = self.m.as_dense().as_slice();
        let b = other.m.as_dense().as_slice();
        let mut acc = 0.0;
        for k in 0..n {
            let row = k * n..(k + 1) * n;
            acc += a[row.clone()].iter().zip(&b[row]).map(|(u, v)| u * v).sum::<f64>();
        }
        Ok(acc / (n * (n - 3)) as f64)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_SAMPLE {
        Err(Error::SampleTooSmall {
            required: MIN_SAMPLE,
            actual: n,
        })
    } else {
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(gamma))
    }
}

/// Kernel matrix from precomputed squared distances; the diagonal is forced to zero.
pub(crate) fn kernel_matrix_from_sq(
    sq: &SymmetricMatrix,
    kernel: &KernelSpec,
    gamma: f64,
) -> Result<SymmetricMatrix> {
    check_gamma(gamma)?;
    let n = sq.dim();
    let mut k = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = sq[(i, j)].sqrt() / gamma;
            let v = kernel.eval(w);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "kernel {} at argument {w}",
                    kernel.label()
                )));
            }
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(SymmetricMatrix::from_dense_unchecked(k))
}

/// Matrix of `f(|X_k - X_l| / gamma)` for `k != l`, with an exactly zero diagonal.
pub fn kernel_matrix(x: &DenseMatrix, kernel: &KernelSpec, gamma: f64) -> Result<SymmetricMatrix> {
    check_gamma(gamma)?;
    kernel_matrix_from_sq(&pairwise_sq_distances(x), kernel, gamma)
}

/// U-centering:
/// `A* = A - (11'A + A11') / (n - 2) + 11'A11' / ((n - 1)(n - 2))`, off-diagonal part.
pub fn u_center(a: &SymmetricMatrix) -> Result<UCenteredMatrix> {
    let n = a.dim();
    check_n(n)?;
    let row_sums: Vec<f64> = (0..n).map(|k| a.as_dense().row(k).iter().sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let nf = n as f64;
    let grand = total / ((nf - 1.0) * (nf - 2.0));
    let mut out = DenseMatrix::zeros(n, n);
    for k in 0..n {
        for l in (k + 1)..n {
            let v = a[(k, l)] - (row_sums[k] + row_sums[l]) / (nf - 2.0) + grand;
            out[(k, l)] = v;
            out[(l, k)] = v;
        }
    }
    Ok(UCenteredMatrix {
        m: SymmetricMatrix::from_dense_unchecked(out),
    })
}

fn u_centered_kernel(x: &DenseMatrix, kernel: &KernelSpec, gamma: f64) -> Result<UCenteredMatrix> {
    check_n(x.rows())?;
    u_center(&kernel_matrix(x, kernel, gamma)?)
}

/// Bias-corrected sample distance covariance `dcov*^2(X, Y)`. May be negative.
pub fn dcov_star(sample: &PairedSample) -> Result<f64> {
    dcov_star_kernel(sample, (&KernelSpec::Identity, &KernelSpec::Identity), (1.0, 1.0))
}

/// `dcov*^2(X, X)`; nonnegative as a normalized sum of squares.
pub fn dcov_star_marginal(x: &DenseMatrix) -> Result<f64> {
    dcov_star_marginal_kernel(x, &KernelSpec::Identity, 1.0)
}

/// Kernelized marginal `dcov*^2(X; f, gamma)`.
pub fn dcov_star_marginal_kernel(x: &DenseMatrix, kernel: &KernelSpec, gamma: f64) -> Result<f64> {
    let a = u_centered_kernel(x, kernel, gamma)?;
    a.inner(&a)
}

/// Generalized kernel distance covariance `dcov*^2(X, Y; f, gamma)`.
pub fn dcov_star_kernel(
    sample: &PairedSample,
    kernels: (&KernelSpec, &KernelSpec),
    gamma: (f64, f64),
) -> Result<f64> {
    check_n(sample.n())?;
    check_gamma(gamma.0)?;
    check_gamma(gamma.1)?;
    let a = u_centered_kernel(sample.x(), kernels.0, gamma.0)?;
    let b = u_centered_kernel(sample.y(), kernels.1, gamma.1)?;
    a.inner(&b)
}

/// The three statistics a distance correlation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcovTriple {
    pub xy: f64,
    pub xx: f64,
    pub yy: f64,
}

impl DcovTriple {
    pub fn from_centered(a: &UCenteredMatrix, b: &UCenteredMatrix) -> Result<Self> {
        Ok(Self {
            xy: a.inner(b)?,
            xx: a.inner(a)?,
            yy: b.inner(b)?,
        })
    }

    /// `dcor*^2`, or `None` when the marginal product is nonpositive or
    /// vanishingly small (the `0/0` case).
    pub fn correlation(&self) -> Option<f64> {
        let denom = self.xx * self.yy;
        (denom > 1e-300).then(|| self.xy / denom.sqrt())
    }
}

/// Kernelized `dcov*^2(X,Y)`, `dcov*^2(X)` and `dcov*^2(Y)` in one pass.
pub fn dcov_triple(
    sample: &PairedSample,
    kernels: (&KernelSpec, &KernelSpec),
    gamma: (f64, f64),
) -> Result<DcovTriple> {
    check_n(sample.n())?;
    let a = u_centered_kernel(sample.x(), kernels.0, gamma.0)?;
    let b = u_centered_kernel(sample.y(), kernels.1, gamma.1)?;
    DcovTriple::from_centered(&a, &b)
}

/// Kernelized distance correlation `dcor*^2(X, Y; f, gamma)`, zero when the
/// marginal product is nonpositive.
pub fn dcor_star(
    sample: &PairedSample,
    kernels: (&KernelSpec, &KernelSpec),
    gamma: (f64, f64),
) -> Result<f64> {
    Ok(dcov_triple(sample, kernels, gamma)?.correlation().unwrap_or(0.0))
}

/// Largest sample size accepted by [`dcov_ustat_oracle`].
pub const ORACLE_MAX_N: usize = 12;

fn direct_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Brute-force fourth-order U-statistic for `dcov*^2(X, Y)`.
///
/// Averages, over all 4-subsets and all 24 orderings `(i1, i2, i3, i4)`, the kernel
/// `a(i1,i2) b(i1,i2) + a(i1,i2) b(i3,i4) - 2 a(i1,i2) b(i1,i3)` where `a`, `b`
/// are interpoint distances evaluated directly. Exponential cost: `4 <= n <= 12`.
pub fn dcov_ustat_oracle(sample: &PairedSample) -> Result<f64> {
    let n = sample.n();
    if !(MIN_SAMPLE..=ORACLE_MAX_N).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "oracle supports 4 <= n <= 12, got n = {n}"
        )));
    }
    let dx = |i: usize, j: usize| direct_distance(sample.x().row(i), sample.x().row(j));
    let dy = |i: usize, j: usize| direct_distance(sample.y().row(i), sample.y().row(j));

    let mut perms = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    if a != b && a != c && a != d && b != c && b != d && c != d {
                        perms.push([a, b, c, d]);
                    }
                }
            }
        }
    }

    let mut total = 0.0;
    let mut subsets = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    let idx = [i, j, k, l];
                    let mut h = 0.0;
                    for perm in &perms {
                        let [i1, i2, i3, i4] = perm.map(|t| idx[t]);
                        let a12 = dx(i1, i2);
                        h += a12 * dy(i1, i2) + a12 * dy(i3, i4) - 2.0 * a12 * dy(i1, i3);
                    }
                    total += h / 24.0;
                    subsets += 1;
                }
            }
        }
    }
    Ok(total / subsets as f64)
}
