//! Linear constraints on the coisotropically extended phase space.

use crate::error::{Error, Result};
use crate::linalg::{independent_rows, vstack, Matrix, Tolerance};

/// Rows of linear constraints over `[x (n) | p (n) | u (m_cur) | v (m_cur)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    rows: Matrix,
    n: usize,
    m_cur: usize,
}

impl ConstraintMatrix {
    pub fn new(rows: Matrix, n: usize, m_cur: usize) -> Result<Self> {
        if rows.ncols() != 2 * n + 2 * m_cur {
            return Err(Error::DimensionMismatch(format!(
                "constraint rows have {} columns, layout (n = {n}, m = {m_cur}) needs {}",
                rows.ncols(),
                2 * n + 2 * m_cur
            )));
        }
        Ok(ConstraintMatrix { rows, n, m_cur })
    }

    pub fn empty(n: usize, m_cur: usize) -> Self {
        ConstraintMatrix {
            rows: Matrix::zeros(0, 2 * n + 2 * m_cur),
            n,
            m_cur,
        }
    }

    /// The zero-order constraints `v = 0`.
    pub fn zero_order(n: usize, m_cur: usize) -> Self {
        let mut rows = Matrix::zeros(m_cur, 2 * n + 2 * m_cur);
        for a in 0..m_cur {
            rows[(a, 2 * n + m_cur + a)] = 1.0;
        }
        ConstraintMatrix { rows, n, m_cur }
    }

    /// Rows `[s | -r | 0]`, i.e. the constraints `s ζ - r u = 0`.
    pub fn from_blocks(s: &Matrix, r: &Matrix, n: usize) -> Result<Self> {
        let m_cur = r.ncols();
        if s.ncols() != 2 * n || s.nrows() != r.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "S is {}x{} and R is {}x{}, expected S with {} columns and equal row counts",
                s.nrows(),
                s.ncols(),
                r.nrows(),
                r.ncols(),
                2 * n
            )));
        }
        let mut rows = Matrix::zeros(s.nrows(), 2 * n + 2 * m_cur);
        rows.columns_mut(0, 2 * n).copy_from(s);
        rows.columns_mut(2 * n, m_cur).copy_from(&(-r));
        Ok(ConstraintMatrix { rows, n, m_cur })
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn into_rows(self) -> Matrix {
        self.rows
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_cur(&self) -> usize {
        self.m_cur
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn x(&self) -> Matrix {
        self.rows.columns(0, self.n).into_owned()
    }

    pub fn p(&self) -> Matrix {
        self.rows.columns(self.n, self.n).into_owned()
    }

    /// The `(x, p)` block.
    pub fn xp(&self) -> Matrix {
        self.rows.columns(0, 2 * self.n).into_owned()
    }

    pub fn u(&self) -> Matrix {
        self.rows.columns(2 * self.n, self.m_cur).into_owned()
    }

    pub fn v(&self) -> Matrix {
        self.rows
            .columns(2 * self.n + self.m_cur, self.m_cur)
            .into_owned()
    }

    /// Same layout, rows replaced by `coeffs · rows`.
    pub fn combine(&self, coeffs: &Matrix) -> ConstraintMatrix {
        ConstraintMatrix {
            rows: coeffs * &self.rows,
            n: self.n,
            m_cur: self.m_cur,
        }
    }

    /// Rows longer than one scaled to unit length; shorter rows are kept.
    pub fn capped(&self) -> ConstraintMatrix {
        let mut rows = self.rows.clone();
        for mut row in rows.row_iter_mut() {
            let norm = row.norm();
            if norm > 1.0 {
                row /= norm;
            }
        }
        ConstraintMatrix {
            rows,
            n: self.n,
            m_cur: self.m_cur,
        }
    }

    pub fn independent(&self, tol: Tolerance) -> ConstraintMatrix {
        ConstraintMatrix {
            rows: independent_rows(&self.rows, tol),
            n: self.n,
            m_cur: self.m_cur,
        }
    }

    /// Rows of `self` above rows of `other`, re-independentized.
    pub fn stack(&self, other: &ConstraintMatrix, tol: Tolerance) -> Result<ConstraintMatrix> {
        if (self.n, self.m_cur) != (other.n, other.m_cur) {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack layouts (n = {}, m = {}) and (n = {}, m = {})",
                self.n, self.m_cur, other.n, other.m_cur
            )));
        }
        let rows = vstack(&[&self.rows, &other.rows]);
        Ok(ConstraintMatrix {
            rows: independent_rows(&rows, tol),
            n: self.n,
            m_cur: self.m_cur,
        })
    }
}
