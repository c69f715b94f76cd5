//! Small dense linear algebra kernel.
//!
//! Everything here works on row-major `f64` storage and is sized for the
//! desk-scale problems this crate deals with (dimensions in the hundreds).

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

const JACOBI_SWEEP_CAP: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;

/// A dense real matrix in row-major layout with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "matrix entry ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), ncols, data)
    }

    /// Builds a matrix from a closure evaluated at every `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Copies the column range `start..end` into a new matrix.
    pub fn column_block(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)])
    }

    /// Copies the sub-block `rows x cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix whose entries satisfy `|M[i][j] - M[j][i]| <= 1e-12 (1 + |M[i][j]|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DenseMatrix", into = "DenseMatrix")]
pub struct SymmetricMatrix(DenseMatrix);

impl SymmetricMatrix {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if (a - b).abs() > SYMMETRY_TOL * (1.0 + a.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be symmetric by construction.
    pub(crate) fn from_dense_unchecked(m: DenseMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DenseMatrix::identity(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(DenseMatrix::from_diag(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DenseMatrix::zeros(dim, dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn as_dense(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_dense(self) -> DenseMatrix {
        self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.scaled(c))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl Index<(usize, usize)> for SymmetricMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl TryFrom<DenseMatrix> for SymmetricMatrix {
    type Error = Error;

    fn try_from(m: DenseMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<SymmetricMatrix> for DenseMatrix {
    fn from(m: SymmetricMatrix) -> Self {
        m.0
    }
}

impl AsRef<DenseMatrix> for SymmetricMatrix {
    fn as_ref(&self) -> &DenseMatrix {
        &self.0
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of squared entries.
pub fn frobenius_norm_sq(m: &DenseMatrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum()
}

/// Trace of the ordered product `M_1 M_2 ... M_k`.
///
/// The last factor is never multiplied out: `tr(P M_k) = sum_ij P_ij (M_k)_ji`.
pub fn trace_chain(ms: &[&DenseMatrix]) -> Result<f64> {
    let (first, rest) = ms.split_first().ok_or(Error::EmptyInput)?;
    for w in ms.windows(2) {
        if w[0].cols() != w[1].rows() {
            return Err(Error::DimensionMismatch(format!(
                "chain factor {}x{} followed by {}x{}",
                w[0].rows(),
                w[0].cols(),
                w[1].rows(),
                w[1].cols()
            )));
        }
    }
    let last = ms[ms.len() - 1];
    if first.rows() != last.cols() {
        return Err(Error::DimensionMismatch(format!(
            "chain product is {}x{}, not square",
            first.rows(),
            last.cols()
        )));
    }
    let Some((last, middle)) = rest.split_last() else {
        return Ok(first.trace());
    };
    let mut prefix = (*first).clone();
    for m in middle {
        prefix = prefix.matmul(m)?;
    }
    let mut acc = 0.0;
    for i in 0..prefix.rows() {
        for (j, &pij) in prefix.row(i).iter().enumerate() {
            acc += pij * last[(j, i)];
        }
    }
    Ok(acc)
}

/// Lower-triangular Cholesky factor `L` with `L L^T = S`.
///
/// Fails with [`Error::NotPositiveDefinite`] as soon as a pivot drops to
/// `dim * 1e-12 * max_diag` or below.
pub fn cholesky(s: &SymmetricMatrix) -> Result<DenseMatrix> {
    let n = s.dim();
    let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(s[(i, i)]));
    let threshold = n as f64 * 1e-12 * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = s[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= threshold || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / ljj;
        }
    }
    Ok(l)
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues of a symmetric matrix in nondecreasing order.
///
/// Cyclic Jacobi: sweeps over all `(p, q)` pairs until the off-diagonal
/// Frobenius norm drops below `1e-12 * ||S||_F`, at most 100 sweeps.
pub fn sym_eigenvalues(s: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = s.dim();
    let mut a = s.as_dense().clone();
    let target = JACOBI_REL_TOL * frobenius_norm_sq(&a).sqrt();
    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_SWEEP_CAP {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                a[(p, p)] -= t * apq;
                a[(q, q)] += t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    let new_rp = c * arp - sn * arq;
                    let new_rq = sn * arp + c * arq;
                    a[(r, p)] = new_rp;
                    a[(p, r)] = new_rp;
                    a[(r, q)] = new_rq;
                    a[(q, r)] = new_rq;
                }
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            residual: off_diagonal_norm(&a),
        });
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Squared Euclidean distances between all rows of `x`.
///
/// Uses `|a|^2 + |b|^2 - 2 a.b` with cached row norms; negative round-off is
/// clamped to zero and the diagonal is exactly zero.
pub fn pairwise_sq_distances(x: &DenseMatrix) -> SymmetricMatrix {
    let n = x.rows();
    let norms: Vec<f64> = (0..n).map(|i| dot(x.row(i), x.row(i))).collect();
    let mut d = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let xk = x.row(k);
        for l in (k + 1)..n {
            let v = (norms[k] + norms[l] - 2.0 * dot(xk, x.row(l))).max(0.0);
            d[(k, l)] = v;
            d[(l, k)] = v;
        }
    }
    SymmetricMatrix::from_dense_unchecked(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm_sq(&DenseMatrix::zeros(3, 4)), 0.0);
        assert_eq!(frobenius_norm_sq(&DenseMatrix::identity(7)), 7.0);
        assert_eq!(frobenius_norm_sq(&m(&[&[1.0, 2.0], &[3.0, 4.0]])), 30.0);
    }

    #[test]
    fn trace_chain_examples() {
        let i5 = DenseMatrix::identity(5);
        assert_eq!(trace_chain(&[&i5]).unwrap(), 5.0);

        let a = DenseMatrix::from_diag(&[2.0, -4.0, 0.5]);
        let ainv = DenseMatrix::from_diag(&[0.5, -0.25, 2.0]);
        assert!((trace_chain(&[&a, &ainv]).unwrap() - 3.0).abs() < 1e-15);

        let rho = 0.3;
        let p = 6;
        let r = DenseMatrix::identity(p).scaled(rho);
        let i = DenseMatrix::identity(p);
        let v = trace_chain(&[&r, &i, &r, &i]).unwrap();
        assert!((v - rho * rho * p as f64).abs() < 1e-14);
    }

    #[test]
    fn trace_chain_rectangular_and_errors() {
        let a = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let b = a.transpose();
        // tr(A A^T) = ||A||_F^2
        assert_eq!(trace_chain(&[&a, &b]).unwrap(), 91.0);
        assert!(matches!(trace_chain(&[&a, &a]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(trace_chain(&[&a]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(trace_chain(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&SymmetricMatrix::identity(4)).unwrap();
        assert_eq!(l, DenseMatrix::identity(4));

        let l = cholesky(&SymmetricMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, DenseMatrix::from_diag(&[2.0, 3.0]));

        let s = SymmetricMatrix::new(m(&[&[1.0, 1.1], &[1.1, 1.0]])).unwrap();
        assert!(matches!(cholesky(&s), Err(Error::NotPositiveDefinite { index: 1, .. })));
    }

    #[test]
    fn eigen_examples() {
        assert_eq!(sym_eigenvalues(&SymmetricMatrix::identity(3)).unwrap(), vec![1.0; 3]);
        assert_eq!(
            sym_eigenvalues(&SymmetricMatrix::from_diag(&[3.0, 1.0, 2.0])).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let s = SymmetricMatrix::new(m(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let e = sym_eigenvalues(&s).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-15);
        assert!(sym_eigenvalues(&SymmetricMatrix::zeros(0)).unwrap().is_empty());
    }

    #[test]
    fn eigen_known_tridiagonal_spectrum() {
        // The path-graph matrix tridiag(-1, 2, -1) has eigenvalues 2 - 2cos(k pi/(n+1)).
        let n = 12;
        let s = SymmetricMatrix::new(DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        }))
        .unwrap();
        let e = sym_eigenvalues(&s).unwrap();
        for (k, ev) in e.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((ev - exact).abs() < 1e-12, "{ev} vs {exact}");
        }
    }

    #[test]
    fn pairwise_examples() {
        let d = pairwise_sq_distances(&m(&[&[1.0, -2.0]]));
        assert_eq!(d.as_dense(), &DenseMatrix::zeros(1, 1));

        let d = pairwise_sq_distances(&m(&[&[0.0], &[3.0]]));
        assert_eq!(d.as_dense(), &m(&[&[0.0, 9.0], &[9.0, 0.0]]));

        let x = m(&[&[0.3, 1.7, -2.2], &[5.0, 0.0, 1.0], &[0.3, 1.7, -2.2]]);
        let d = pairwise_sq_distances(&x);
        assert_eq!(d[(0, 2)], 0.0);
        assert_eq!(d[(2, 0)], 0.0);
        assert!(d[(0, 1)] > 0.0);
    }

    #[test]
    fn rejects_non_finite_and_asymmetric() {
        assert!(matches!(
            DenseMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(SymmetricMatrix::new(m(&[&[1.0, 2.0], &[2.1, 1.0]])).is_err());
        assert!(SymmetricMatrix::new(m(&[&[1.0, 2.0, 3.0]])).is_err());
    }
}
