//! Hamiltonian constraints algorithm with partial feedback on the controls.
//!
//! Each pass splits the control coefficients `R⁽ᵏ⁾` of the newest constraint
//! level by an SVD. Directions with nonzero singular values are solved as a
//! linear feedback in `(x, p)` and folded into the drift; the remaining
//! combinations of constraints are differentiated along the updated field to
//! give the next level. Constraints are tracked on the space extended by the
//! coisotropic coordinates `v`, where they can be split into first and second
//! class.

use crate::classification::{
    poisson_brackets, reclassify, split_first_second, ClassificationMode, ClassifiedConstraints,
};
use crate::constraint::ConstraintMatrix;
use crate::error::{Error, Result};
use crate::linalg::{
    hstack, independent_rows, numerical_ker, rank_tol, symplectic_j, vstack, FullSvd, Matrix,
    Tolerance,
};
use crate::lq_model::LqProblem;

/// Matrices of the linear field `Γ = G ζ + Z u` and of the newest constraint
/// level `S ζ - R u = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub g: Matrix,
    pub z: Matrix,
    pub s: Matrix,
    pub rk: Matrix,
    pub k: usize,
    pub m_cur: usize,
}

impl StepState {
    /// State before the first pass, with the primary constraints made
    /// independent.
    pub fn initial(problem: &LqProblem, tol: Tolerance) -> Result<Self> {
        let init = problem.initial_matrices()?;
        let n = problem.n();
        let sr = independent_rows(&hstack(&[&init.s1, &(-&init.r1)]), tol);
        Ok(StepState {
            g: init.g0,
            z: init.z0,
            s: sr.columns(0, 2 * n).into_owned(),
            rk: -sr.columns(2 * n, problem.m()).into_owned(),
            k: 0,
            m_cur: problem.m(),
        })
    }

    /// `‖J G - (J G)ᵀ‖`; zero exactly when the field is Hamiltonian.
    pub fn hamiltonian_residual(&self) -> f64 {
        let jg = symplectic_j(self.g.nrows() / 2) * &self.g;
        (&jg - jg.transpose()).norm()
    }
}

/// Outcome of one [`step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: StepState,
    /// `r × 2n` block `Σ⁻¹ U_fᵀ S`: the solved controls as functions of `(x, p)`.
    pub feed: Matrix,
    /// Right singular vectors of `R⁽ᵏ⁾` (`m_cur × m_cur`); the first `r` columns
    /// are the solved directions.
    pub v_split: Matrix,
    pub r: usize,
}

/// One pass: split `R⁽ᵏ⁾`, feed back the solvable controls and produce the
/// next constraint level from the combinations of rows that do not involve
/// them.
pub fn step(state: &StepState, tol: Tolerance) -> StepOutput {
    let two_n = state.g.nrows();
    let m_cur = state.m_cur;
    let r = if state.rk.is_empty() {
        0
    } else {
        rank_tol(&state.rk, tol)
    };
    if r == 0 {
        let next = StepState {
            s: &state.s * &state.g,
            rk: -(&state.s * &state.z),
            g: state.g.clone(),
            z: state.z.clone(),
            k: state.k + 1,
            m_cur,
        };
        return StepOutput {
            state: next,
            feed: Matrix::zeros(0, two_n),
            v_split: Matrix::identity(m_cur, m_cur),
            r: 0,
        };
    }
    let svd = FullSvd::new(&state.rk);
    let l = state.rk.nrows();
    let sigma_inv = Matrix::from_diagonal(&nalgebra::DVector::from_iterator(
        r,
        svd.singular[..r].iter().map(|s| 1.0 / s),
    ));
    let feed = sigma_inv * svd.u.columns(0, r).transpose() * &state.s;
    let zv = &state.z * &svd.v;
    let g = &state.g + zv.columns(0, r) * &feed;
    let z = zv.columns(r, m_cur - r).into_owned();
    let s_c = svd.u.columns(r, l - r).transpose() * &state.s;
    let next = StepState {
        s: &s_c * &g,
        rk: -(&s_c * &z),
        g,
        z,
        k: state.k + 1,
        m_cur: m_cur - r,
    };
    StepOutput {
        state: next,
        feed,
        v_split: svd.v,
        r,
    }
}

/// Rewrites constraints after the substitution `ũ = Feed·(x; p)`.
///
/// The u- and v-blocks are rotated by `V`; the coefficients of the first `r`
/// rotated controls are folded into the `(x, p)` block and their v-columns
/// dropped.
pub fn apply_feedback_to_constraints(
    phi: &ConstraintMatrix,
    v: &Matrix,
    feed: &Matrix,
    r: usize,
    tol: Tolerance,
) -> Result<ConstraintMatrix> {
    let (n, m) = (phi.n(), phi.m_cur());
    if v.shape() != (m, m) || r > m || feed.shape() != (r, 2 * n) {
        return Err(Error::DimensionMismatch(format!(
            "feedback of {r} controls: V is {}x{}, Feed is {}x{}, constraints have n = {n}, m = {m}",
            v.nrows(),
            v.ncols(),
            feed.nrows(),
            feed.ncols()
        )));
    }
    let rest = m - r;
    if phi.is_empty() {
        return Ok(ConstraintMatrix::empty(n, rest));
    }
    let rho = phi.u() * v;
    let omega = phi.v() * v;
    let xp = phi.xp() + rho.columns(0, r) * feed;
    let rows = hstack(&[
        &xp,
        &rho.columns(r, rest).into_owned(),
        &omega.columns(r, rest).into_owned(),
    ]);
    Ok(ConstraintMatrix::new(rows, n, rest)?.independent(tol))
}

/// Drops the v-columns, keeping the `(x, p, u)` part with independent rows.
pub fn strip_coisotropic(phi: &ConstraintMatrix, tol: Tolerance) -> Matrix {
    let width = 2 * phi.n() + phi.m_cur();
    independent_rows(&phi.rows().columns(0, width).into_owned(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReduceOptions {
    pub tol: Tolerance,
    pub classification: ClassificationMode,
}

/// Diagnostics of one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub r_k: usize,
    /// Free controls left after the pass.
    pub m_cur: usize,
    /// Independent constraints on `(x, p, u)` found so far, solved controls
    /// included.
    pub constraint_count: usize,
    /// `‖J G - (J G)ᵀ‖` of the drift after the pass.
    pub hamiltonian_residual: f64,
    /// Skew part of the field's 1-form `J(Gζ + Zu)` restricted to the final
    /// constraint subspace. The field is Hamiltonian on that subspace when
    /// this vanishes, even if `J G` itself is not symmetric.
    pub restricted_hamiltonian_residual: f64,
    pub g_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub n: usize,
    pub m: usize,
    /// Passes until the constraint chain stabilized.
    pub index_k: usize,
    /// Feedback block of each pass that solved controls.
    pub feed_blocks: Vec<Matrix>,
    /// Stacked feed blocks: `ũ = Feedtot·(x; p)`.
    pub feedtot: Matrix,
    /// Rows give `ũ` in terms of the original controls: `ũ = solved_directions·u`.
    pub solved_directions: Matrix,
    /// Rows give the residual controls: `u_res = Nofeed·u`.
    pub nofeed: Matrix,
    /// Final constraints on the extended space, classified.
    pub extended: ClassifiedConstraints,
    /// First-class constraints over `(x, p, u_res)`.
    pub phi_i: Matrix,
    /// Second-class constraints over `(x, p, u_res)`.
    pub phi_ii: Matrix,
    pub ax: Matrix,
    pub ap: Matrix,
    pub qx: Matrix,
    pub qp: Matrix,
    pub bu: Matrix,
    pub nu: Matrix,
    pub m_res: usize,
    /// Rank of the final Poisson matrix (number of second-class constraints).
    pub rp: usize,
    pub trace: Vec<IterationRecord>,
    pub tol: Tolerance,
}

impl ReductionResult {
    /// Reduced drift `[[Ax, Ap], [Qx, Qp]]`.
    pub fn g(&self) -> Matrix {
        vstack(&[
            &hstack(&[&self.ax, &self.ap]),
            &hstack(&[&self.qx, &self.qp]),
        ])
    }

    /// Reduced control block `[Bu; Nu]`.
    pub fn z(&self) -> Matrix {
        vstack(&[&self.bu, &self.nu])
    }

    /// `m × 2n` map `K` of the solved part of the controls: on the final
    /// constraint set `u = K·(x; p) + Nofeedᵀ·u_res`.
    pub fn feedback_law(&self) -> Matrix {
        self.solved_directions.transpose() * &self.feedtot
    }

    /// Final constraint subspace in the original `(x, p, u)` coordinates,
    /// feedback relations included.
    pub fn constraint_subspace(&self) -> Matrix {
        inflate(
            &vstack(&[&self.phi_i, &self.phi_ii]),
            self.n,
            &self.nofeed,
            &self.feedtot,
            &self.solved_directions,
            self.tol,
        )
    }
}

fn inflate(
    stripped: &Matrix,
    n: usize,
    nofeed: &Matrix,
    feedtot: &Matrix,
    solved: &Matrix,
    tol: Tolerance,
) -> Matrix {
    let m_res = nofeed.nrows();
    let residual = hstack(&[
        &stripped.columns(0, 2 * n).into_owned(),
        &(stripped.columns(2 * n, m_res) * nofeed),
    ]);
    let fed = hstack(&[&(-feedtot), solved]);
    independent_rows(&vstack(&[&residual, &fed]), tol)
}

/// Runs the reduction with the default (incremental) classification.
pub fn reduce(problem: &LqProblem, tol: Tolerance) -> Result<ReductionResult> {
    reduce_with(
        problem,
        ReduceOptions {
            tol,
            ..ReduceOptions::default()
        },
    )
}

pub fn reduce_with(problem: &LqProblem, opts: ReduceOptions) -> Result<ReductionResult> {
    let tol = opts.tol;
    problem.validate()?;
    let (n, m) = (problem.n(), problem.m());
    let cap = 2 * (n + m) + 2;

    let mut state = StepState::initial(problem, tol)?;
    let primary = ConstraintMatrix::from_blocks(&state.s, &state.rk, n)?;
    let seed = ConstraintMatrix::zero_order(n, m).stack(&primary, tol)?;
    let mut classes = split_first_second(&seed, tol);

    let mut feed_blocks = Vec::new();
    let mut solved_directions = Matrix::zeros(0, m);
    let mut nofeed = Matrix::identity(m, m);
    let mut solved = 0;
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();

    while solved < m {
        if state.k >= cap {
            return Err(Error::NonConvergence {
                iterations: state.k,
            });
        }
        let out = step(&state, tol);
        let r = out.r;
        if r > 0 {
            let rotated = out.v_split.transpose() * &nofeed;
            solved_directions = vstack(&[&solved_directions, &rotated.rows(0, r).into_owned()]);
            nofeed = rotated.rows(r, rotated.nrows() - r).into_owned();
            classes = ClassifiedConstraints {
                first_class: apply_feedback_to_constraints(
                    &classes.first_class,
                    &out.v_split,
                    &out.feed,
                    r,
                    tol,
                )?,
                second_class: apply_feedback_to_constraints(
                    &classes.second_class,
                    &out.v_split,
                    &out.feed,
                    r,
                    tol,
                )?,
            };
            feed_blocks.push(out.feed.clone());
            solved += r;
        }
        let before = rank_tol(classes.union().rows(), tol);
        state = out.state;
        let r_pending = if state.m_cur > 0 {
            rank_tol(&state.rk, tol)
        } else {
            0
        };
        // Derived rows grow like ‖G‖ per pass. Capping their length keeps the
        // absolute rank threshold from admitting amplified noise, while rows
        // that are small to begin with stay below it.
        let new = ConstraintMatrix::from_blocks(&state.s, &state.rk, n)?.capped();
        classes = reclassify(&classes, &new, opts.classification, tol);
        let after = rank_tol(classes.union().rows(), tol);

        let feedtot = stack_or_empty(&feed_blocks, n);
        trace.push(IterationRecord {
            k: state.k,
            r_k: r,
            m_cur: state.m_cur,
            constraint_count: inflate(
                &vstack(&[
                    &strip_coisotropic(&classes.first_class, tol),
                    &strip_coisotropic(&classes.second_class, tol),
                ]),
                n,
                &nofeed,
                &feedtot,
                &solved_directions,
                tol,
            )
            .nrows(),
            hamiltonian_residual: state.hamiltonian_residual(),
            restricted_hamiltonian_residual: f64::NAN,
            g_norm: state.g.norm(),
        });
        snapshots.push((state.g.clone(), state.z.clone(), nofeed.clone()));

        if after <= before && r_pending == 0 {
            break;
        }
    }

    // Final split of the whole set; the incremental labels are only
    // representatives of the right spans.
    let union = classes.union().independent(tol);
    let rp = poisson_brackets(&union).rank(tol);
    let extended = split_first_second(&union, tol);
    let extended = ClassifiedConstraints {
        second_class: extended.second_class.independent(tol),
        first_class: extended.first_class,
    };

    let g = &state.g;
    let mut result = ReductionResult {
        n,
        m,
        index_k: state.k,
        feedtot: stack_or_empty(&feed_blocks, n),
        feed_blocks,
        solved_directions,
        nofeed,
        phi_i: strip_coisotropic(&extended.first_class, tol),
        phi_ii: strip_coisotropic(&extended.second_class, tol),
        extended,
        ax: g.view((0, 0), (n, n)).into_owned(),
        ap: g.view((0, n), (n, n)).into_owned(),
        qx: g.view((n, 0), (n, n)).into_owned(),
        qp: g.view((n, n), (n, n)).into_owned(),
        bu: state.z.rows(0, n).into_owned(),
        nu: state.z.rows(n, n).into_owned(),
        m_res: state.m_cur,
        rp,
        trace,
        tol,
    };
    let tangent = numerical_ker(&result.constraint_subspace(), tol).kernel;
    for (rec, (g, z, nofeed)) in result.trace.iter_mut().zip(&snapshots) {
        rec.restricted_hamiltonian_residual = restricted_skew(g, z, nofeed, &tangent);
    }
    Ok(result)
}

/// `‖Wᵀ(P - Pᵀ)W‖` for `P = [[J G, J Z], [0, 0]]` on `(ζ, u_cur)` and `W` the
/// columns of `tangent` mapped by `u_cur = nofeed·u`.
fn restricted_skew(g: &Matrix, z: &Matrix, nofeed: &Matrix, tangent: &Matrix) -> f64 {
    let two_n = g.nrows();
    let m_cur = z.ncols();
    let j = symplectic_j(two_n / 2);
    let mut p = Matrix::zeros(two_n + m_cur, two_n + m_cur);
    p.view_mut((0, 0), (two_n, two_n)).copy_from(&(&j * g));
    p.view_mut((0, two_n), (two_n, m_cur)).copy_from(&(&j * z));
    let w = vstack(&[
        &tangent.rows(0, two_n).into_owned(),
        &(nofeed * tangent.rows(two_n, tangent.nrows() - two_n)),
    ]);
    (w.transpose() * (&p - p.transpose()) * w).norm()
}

fn stack_or_empty(blocks: &[Matrix], n: usize) -> Matrix {
    if blocks.is_empty() {
        Matrix::zeros(0, 2 * n)
    } else {
        vstack(&blocks.iter().collect::<Vec<_>>())
    }
}
