//! Linear-quadratic problem data, Pontryagin's Hamiltonian and the starting
//! matrices of the constraint reduction.

use nalgebra::DVector;

use crate::error::{Error, Result, ValidationError};
use crate::linalg::{first_non_finite, hstack, symplectic_j, vstack, Matrix};

/// Relative threshold on `|Q - Qᵀ|` and `|R - Rᵀ|` (Frobenius).
const SYMMETRY_TOL: f64 = 1e-12;

/// `ẋ = A x + B u` with running cost `½ xᵀQx + xᵀNu + ½ uᵀRu`.
///
/// Fields are public so that callers can assemble arbitrary data; run
/// [`LqProblem::validate`] (or construct through [`LqProblem::new`]) before
/// handing the problem to the reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct LqProblem {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub n_cross: Matrix,
    pub r: Matrix,
}

impl LqProblem {
    pub fn new(a: Matrix, b: Matrix, q: Matrix, n_cross: Matrix, r: Matrix) -> Result<Self> {
        let problem = LqProblem {
            a,
            b,
            q,
            n_cross,
            r,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// State dimension, read from `A`.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Control dimension, read from the columns of `B`.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let (n, m) = (self.n(), self.m());
        if n == 0 || m == 0 {
            return Err(ValidationError::EmptyDimension { n, m });
        }
        let expected = [
            ("A", &self.a, n, n),
            ("B", &self.b, n, m),
            ("Q", &self.q, n, n),
            ("N", &self.n_cross, n, m),
            ("R", &self.r, m, m),
        ];
        for (name, mat, er, ec) in expected {
            if mat.shape() != (er, ec) {
                return Err(ValidationError::DimensionMismatch {
                    matrix: name,
                    rows: mat.nrows(),
                    cols: mat.ncols(),
                    expected_rows: er,
                    expected_cols: ec,
                });
            }
            if let Some((row, col)) = first_non_finite(mat) {
                return Err(ValidationError::NonFiniteEntry {
                    matrix: name,
                    row,
                    col,
                });
            }
        }
        let asym_q = (&self.q - self.q.transpose()).norm();
        if asym_q >= SYMMETRY_TOL * (1.0 + self.q.norm()) {
            return Err(ValidationError::AsymmetricQ { asymmetry: asym_q });
        }
        let asym_r = (&self.r - self.r.transpose()).norm();
        if asym_r >= SYMMETRY_TOL * (1.0 + self.r.norm()) {
            return Err(ValidationError::AsymmetricR { asymmetry: asym_r });
        }
        Ok(())
    }

    /// `H = pᵀ(Ax + Bu) - ½xᵀQx - xᵀNu - ½uᵀRu`. The coisotropic part `v` of
    /// the point does not enter.
    pub fn pontryagin_hamiltonian(&self, pt: &ExtendedPoint) -> Result<f64> {
        pt.check_dims(self.n(), self.m())?;
        let (x, p, u) = (&pt.x, &pt.p, &pt.u);
        let drift = &self.a * x + &self.b * u;
        Ok(p.dot(&drift)
            - 0.5 * x.dot(&(&self.q * x))
            - x.dot(&(&self.n_cross * u))
            - 0.5 * u.dot(&(&self.r * u)))
    }

    /// Drift, control block and primary-constraint coefficients.
    pub fn initial_matrices(&self) -> Result<InitialMatrices> {
        self.validate()?;
        let n = self.n();
        let g0 = vstack(&[
            &hstack(&[&self.a, &Matrix::zeros(n, n)]),
            &hstack(&[&self.q, &(-self.a.transpose())]),
        ]);
        let z0 = vstack(&[&self.b, &self.n_cross]);
        let s1 = hstack(&[&(-self.n_cross.transpose()), &self.b.transpose()]);
        Ok(InitialMatrices {
            g0,
            z0,
            s1,
            r1: self.r.clone(),
        })
    }
}

/// A point `(x, p, u, v)` of the coisotropically extended phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedPoint {
    pub x: DVector<f64>,
    pub p: DVector<f64>,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

impl ExtendedPoint {
    /// Point with `v = 0`.
    pub fn on_controls(x: DVector<f64>, p: DVector<f64>, u: DVector<f64>) -> Self {
        let m = u.len();
        ExtendedPoint {
            x,
            p,
            u,
            v: DVector::zeros(m),
        }
    }

    fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        let dims = [self.x.len(), self.p.len(), self.u.len(), self.v.len()];
        if dims != [n, n, m, m] {
            return Err(Error::DimensionMismatch(format!(
                "point has block sizes (x, p, u, v) = {dims:?}, problem needs ({n}, {n}, {m}, {m})"
            )));
        }
        let all = self.x.iter().chain(&self.p).chain(&self.u).chain(&self.v);
        if all.clone().any(|c| !c.is_finite()) {
            return Err(Error::DimensionMismatch(
                "point has a non-finite coordinate".into(),
            ));
        }
        Ok(())
    }
}

/// `G⁽⁰⁾ = [[A, 0], [Q, -Aᵀ]]`, `Z⁽⁰⁾ = [B; N]`, `S⁽¹⁾ = [-Nᵀ | Bᵀ]`, `R⁽¹⁾ = R`.
///
/// With `ζ = (x; p)`, the state/costate dynamics read `ζ̇ = G⁽⁰⁾ζ + Z⁽⁰⁾u` and
/// the primary constraints `∂H/∂u = S⁽¹⁾ζ - R⁽¹⁾u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialMatrices {
    pub g0: Matrix,
    pub z0: Matrix,
    pub s1: Matrix,
    pub r1: Matrix,
}

impl InitialMatrices {
    /// `|S⁽¹⁾ - Z⁽⁰⁾ᵀJ|`, zero up to rounding.
    pub fn s1_residual(&self) -> f64 {
        let n = self.g0.nrows() / 2;
        (&self.s1 - self.z0.transpose() * symplectic_j(n)).norm()
    }
}
