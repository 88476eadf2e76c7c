//! Poisson brackets of linear constraints and their split into first- and
//! second-class families.
//!
//! All constraints are linear in canonical coordinates, so brackets are
//! constants and the whole analysis reduces to the kernel of one
//! antisymmetric matrix.

use crate::constraint::ConstraintMatrix;
use crate::linalg::{numerical_ker, rank_tol, vstack, Matrix, Tolerance};

/// Antisymmetric matrix of pairwise canonical brackets `{φ_i, φ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonMatrix {
    pub entries: Matrix,
}

impl PoissonMatrix {
    /// Number of constraints.
    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn rank(&self, tol: Tolerance) -> usize {
        rank_tol(&self.entries, tol)
    }

    /// Largest entry of `|POI + POIᵀ|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        (&self.entries + self.entries.transpose()).amax()
    }
}

/// Canonical brackets of the constraint rows: `{x_i, p_j} = δ_ij` and
/// `{u_a, v_b} = δ_ab`.
pub fn poisson_brackets(phi: &ConstraintMatrix) -> PoissonMatrix {
    if phi.is_empty() {
        return PoissonMatrix {
            entries: Matrix::zeros(0, 0),
        };
    }
    let (x, p, u, v) = (phi.x(), phi.p(), phi.u(), phi.v());
    let xp = &x * p.transpose();
    let uv = &u * v.transpose();
    let raw = &xp - xp.transpose() + &uv - uv.transpose();
    PoissonMatrix {
        entries: (&raw - raw.transpose()) * 0.5,
    }
}

/// First-class rows `ν_A` and second-class rows `χ_α` of a constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedConstraints {
    pub first_class: ConstraintMatrix,
    pub second_class: ConstraintMatrix,
}

impl ClassifiedConstraints {
    pub fn empty(n: usize, m_cur: usize) -> Self {
        ClassifiedConstraints {
            first_class: ConstraintMatrix::empty(n, m_cur),
            second_class: ConstraintMatrix::empty(n, m_cur),
        }
    }

    /// Both families stacked, first-class rows on top.
    pub fn union(&self) -> ConstraintMatrix {
        let rows = vstack(&[self.first_class.rows(), self.second_class.rows()]);
        ConstraintMatrix::new(rows, self.first_class.n(), self.first_class.m_cur())
            .expect("families share a layout")
    }

    pub fn len(&self) -> usize {
        self.first_class.len() + self.second_class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Splits `phi` through the kernel of its Poisson matrix: with
/// `(v, w) = numerical_ker(POI)`, first class is `vᵀ phi` and second class is
/// `wᵀ phi`.
pub fn split_first_second(phi: &ConstraintMatrix, tol: Tolerance) -> ClassifiedConstraints {
    let (n, m) = (phi.n(), phi.m_cur());
    if phi.is_empty() {
        return ClassifiedConstraints::empty(n, m);
    }
    let poi = poisson_brackets(phi);
    let split = numerical_ker(&poi.entries, tol);
    ClassifiedConstraints {
        first_class: phi.combine(&split.kernel.transpose()),
        second_class: phi.combine(&split.complement.transpose()),
    }
}

/// How newly found constraints are merged into an existing classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassificationMode {
    /// New rows are bracketed against the retained first-class rows only;
    /// second-class rows are kept as found.
    #[default]
    Incremental,
    /// Every pass reclassifies the whole constraint set.
    Full,
}

/// Merges `new` rows into `prev`. Both must share a layout.
pub fn reclassify(
    prev: &ClassifiedConstraints,
    new: &ConstraintMatrix,
    mode: ClassificationMode,
    tol: Tolerance,
) -> ClassifiedConstraints {
    match mode {
        ClassificationMode::Incremental => {
            let phi = prev.first_class.stack(new, tol).expect("layouts agree");
            let split = split_first_second(&phi, tol);
            let second_class = prev
                .second_class
                .stack(&split.second_class, tol)
                .expect("layouts agree");
            ClassifiedConstraints {
                first_class: split.first_class,
                second_class,
            }
        }
        ClassificationMode::Full => {
            let phi = prev.union().stack(new, tol).expect("layouts agree");
            let split = split_first_second(&phi, tol);
            ClassifiedConstraints {
                first_class: split.first_class,
                second_class: split.second_class.independent(tol),
            }
        }
    }
}
