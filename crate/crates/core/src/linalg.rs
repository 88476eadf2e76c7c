//! Tolerance-aware dense linear algebra shared by the reduction, the oracle and
//! the experiment harness.
//!
//! Rank decisions use an absolute threshold: a singular value counts iff it is
//! strictly greater than the tolerance. Problems should be scaled accordingly.
//! Every contract here is stated on subspaces and ranks, never on individual
//! entries, because singular vectors are only defined up to sign and rotation
//! within repeated singular values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense real matrix. Zero-row and zero-column matrices are ordinary values.
pub type Matrix = DMatrix<f64>;

/// Absolute threshold on singular values.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance(1e-6);

    pub fn new(tol: f64) -> Result<Self> {
        if tol.is_finite() && tol > 0.0 {
            Ok(Tolerance(tol))
        } else {
            Err(Error::InvalidTolerance(tol))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

/// SVD with square, orthogonal `u` (rows×rows) and `v` (cols×cols).
///
/// `singular` holds the `min(rows, cols)` singular values in descending order;
/// column `i` of `u` and `v` belongs to `singular[i]` for `i < singular.len()`.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: Matrix,
    pub singular: Vec<f64>,
    pub v: Matrix,
}

impl FullSvd {
    pub fn new(a: &Matrix) -> Self {
        let (rows, cols) = a.shape();
        if rows == 0 || cols == 0 {
            return FullSvd {
                u: Matrix::identity(rows, rows),
                singular: Vec::new(),
                v: Matrix::identity(cols, cols),
            };
        }
        let svd = to_faer(a).svd().expect("SVD of a finite matrix converges");
        let s = svd.S().column_vector();
        FullSvd {
            u: from_faer(svd.U()),
            singular: (0..s.nrows()).map(|i| s[i]).collect(),
            v: from_faer(svd.V()),
        }
    }

    /// Number of singular values strictly above `tol`.
    pub fn rank(&self, tol: Tolerance) -> usize {
        self.singular.iter().filter(|&&s| s > tol.get()).count()
    }
}

fn to_faer(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values in descending order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    to_faer(m)
        .singular_values()
        .expect("SVD of a finite matrix converges")
}

/// Number of singular values of `m` strictly greater than `tol`.
pub fn rank_tol(m: &Matrix, tol: Tolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    singular_values(m)
        .iter()
        .filter(|&&s| s > tol.get())
        .count()
}

/// Rows spanning the numerical row space of `m`, mutually orthogonal.
///
/// Returns `(Uᵀ m)[0..r, :]` for `r = rank_tol(m, tol)`; a `0 × cols` matrix
/// when the rank is zero.
pub fn independent_rows(m: &Matrix, tol: Tolerance) -> Matrix {
    let cols = m.ncols();
    if m.is_empty() {
        return Matrix::zeros(0, cols);
    }
    let svd = FullSvd::new(m);
    let r = svd.rank(tol);
    if r == 0 {
        return Matrix::zeros(0, cols);
    }
    svd.u.columns(0, r).transpose() * m
}

/// Orthonormal kernel basis and its orthonormal completion.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    /// `cols × (cols - r)`: right singular vectors with singular value ≤ tol.
    pub kernel: Matrix,
    /// `cols × r`: the remaining right singular vectors.
    pub complement: Matrix,
}

/// Numerical kernel of `a` together with a completion from the same SVD.
pub fn numerical_ker(a: &Matrix, tol: Tolerance) -> KernelSplit {
    let n = a.ncols();
    let svd = FullSvd::new(a);
    let r = svd.rank(tol);
    KernelSplit {
        kernel: svd.v.columns(r, n - r).into_owned(),
        complement: svd.v.columns(0, r).into_owned(),
    }
}

/// Orthonormal basis (as rows) of the numerical row space of `m`.
pub fn row_space_basis(m: &Matrix, tol: Tolerance) -> Matrix {
    let cols = m.ncols();
    if m.is_empty() {
        return Matrix::zeros(0, cols);
    }
    let svd = FullSvd::new(m);
    let r = svd.rank(tol);
    svd.v.columns(0, r).transpose()
}

/// Largest principal angle between the row spaces of `m1` and `m2`, in radians.
///
/// Row spaces of different numerical dimension are at angle `π/2` (their gap
/// is one). Both the cosine and the sine of the largest angle are computed and
/// combined with `atan2`, which keeps small angles accurate.
pub fn subspace_angle(m1: &Matrix, m2: &Matrix, tol: Tolerance) -> Result<f64> {
    if m1.ncols() != m2.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "row spaces live in R^{} and R^{}",
            m1.ncols(),
            m2.ncols()
        )));
    }
    let q1 = row_space_basis(m1, tol);
    let q2 = row_space_basis(m2, tol);
    if q1.nrows() == 0 || q2.nrows() == 0 {
        return Err(Error::EmptySubspace);
    }
    if q1.nrows() != q2.nrows() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let cross = &q1 * q2.transpose();
    let cos_min = singular_values(&cross)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .clamp(-1.0, 1.0);
    let residual = &q2 - &q2 * q1.transpose() * &q1;
    let sin_max = spectral_norm(&residual).clamp(-1.0, 1.0);
    Ok(sin_max.max(0.0).atan2(cos_min.max(0.0)))
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Stacks blocks vertically. All blocks must have the same column count.
pub fn vstack(blocks: &[&Matrix]) -> Matrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack: column counts differ");
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(*b);
        r0 += b.nrows();
    }
    out
}

/// Stacks blocks horizontally. All blocks must have the same row count.
pub fn hstack(blocks: &[&Matrix]) -> Matrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut c0 = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack: row counts differ");
        out.view_mut((0, c0), (rows, b.ncols())).copy_from(*b);
        c0 += b.ncols();
    }
    out
}

/// Canonical symplectic matrix `[[0, I], [-I, 0]]` of size `2n × 2n`.
pub fn symplectic_j(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

pub(crate) fn first_non_finite(m: &Matrix) -> Option<(usize, usize)> {
    (0..m.ncols())
        .flat_map(|c| (0..m.nrows()).map(move |r| (r, c)))
        .find(|&(r, c)| !m[(r, c)].is_finite())
}
