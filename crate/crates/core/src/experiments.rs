//! The three benchmark families, norm-bounded perturbations and δ sweeps.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hcapf::{reduce, ReductionResult};
use crate::linalg::{rank_tol, spectral_norm, subspace_angle, Matrix, Tolerance};
use crate::lq_model::LqProblem;

/// Random orthogonal matrix (QR of a Gaussian matrix, signs fixed so the
/// distribution is Haar).
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `A = I`, `B` orthogonal, `Q = D = diag(1..n)`, `N = B·V` and `R` positive
/// semidefinite of rank `r`. State and control spaces are both `ℝⁿ`.
///
/// `V = ½ Bᵀ (D - D_l) B` where `D_l` keeps the first `l` diagonal entries of
/// `D`; the reduction then leaves `n - (r + l)` controls free.
pub fn gen_exp1(n: usize, r: usize, l: usize, seed: u64) -> Result<LqProblem> {
    if r == 0 || r > n || r + l > n {
        return Err(Error::InvalidShape(format!(
            "family 1 needs 0 < r <= n and r + l <= n, got n = {n}, r = {r}, l = {l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(&mut rng, n);
    let b = random_orthogonal(&mut rng, n);
    let s = DVector::from_fn(n, |i, _| {
        if i < r {
            rng.random_range(1.0..2.0)
        } else {
            0.0
        }
    });
    let r_mat = u.transpose() * Matrix::from_diagonal(&s) * &u;
    let r_mat = (&r_mat + r_mat.transpose()) * 0.5;
    let d = Matrix::from_diagonal(&DVector::from_fn(n, |i, _| (i + 1) as f64));
    let d_rest = Matrix::from_diagonal(&DVector::from_fn(n, |i, _| {
        if i < l {
            0.0
        } else {
            (i + 1) as f64
        }
    }));
    let v = b.transpose() * d_rest * &b * 0.5;
    let v = (&v + v.transpose()) * 0.5;
    let n_cross = &b * v;
    LqProblem::new(Matrix::identity(n, n), b, d, n_cross, r_mat)
}

/// `A = Q = I`, `B = (1, …, 1)ᵀ`, `N = 0`, `R = 0`.
pub fn gen_exp2(n: usize) -> Result<LqProblem> {
    if n < 2 {
        return Err(Error::InvalidShape(format!(
            "family 2 needs n >= 2, got {n}"
        )));
    }
    LqProblem::new(
        Matrix::identity(n, n),
        Matrix::from_element(n, 1, 1.0),
        Matrix::identity(n, n),
        Matrix::zeros(n, 1),
        Matrix::zeros(1, 1),
    )
}

/// `A` the upper shift (nilpotent of index n), `B = N = (1, …, 1)ᵀ`,
/// `Q = A + Aᵀ`, `R = 0`.
pub fn gen_exp3(n: usize) -> Result<LqProblem> {
    if n < 2 {
        return Err(Error::InvalidShape(format!(
            "family 3 needs n >= 2, got {n}"
        )));
    }
    let a = Matrix::from_fn(n, n, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
    let b = Matrix::from_element(n, 1, 1.0);
    LqProblem::new(
        a.clone(),
        b.clone(),
        &a + a.transpose(),
        b,
        Matrix::zeros(1, 1),
    )
}

/// Uniform(-1, 1) matrix rescaled to spectral norm `delta·ρ`, `ρ ~ U(0, 1)`.
fn perturbation(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    delta: f64,
    symmetric: bool,
) -> Matrix {
    let mut m = Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    if symmetric {
        m = (&m + m.transpose()) * 0.5;
    }
    let rho: f64 = rng.random();
    let norm = spectral_norm(&m);
    if norm == 0.0 {
        return Matrix::zeros(rows, cols);
    }
    m * (delta * rho / norm)
}

/// Adds a seeded perturbation of spectral norm below `delta` to every block.
///
/// With `preserve_structure`, `Q̃ = Ã + Ãᵀ` instead of an independent
/// perturbation of `Q`.
pub fn perturb(problem: &LqProblem, delta: f64, seed: u64, preserve_structure: bool) -> LqProblem {
    if delta == 0.0 {
        return problem.clone();
    }
    let (n, m) = (problem.n(), problem.m());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = &problem.a + perturbation(&mut rng, n, n, delta, false);
    let b = &problem.b + perturbation(&mut rng, n, m, delta, false);
    let dq = perturbation(&mut rng, n, n, delta, true);
    let n_cross = &problem.n_cross + perturbation(&mut rng, n, m, delta, false);
    let r = &problem.r + perturbation(&mut rng, m, m, delta, true);
    let q = if preserve_structure {
        &a + a.transpose()
    } else {
        &problem.q + dq
    };
    LqProblem {
        a,
        b,
        q,
        n_cross,
        r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Rank-`r` control cost with truncation `l`.
    Exp1 {
        r: usize,
        l: usize,
    },
    Exp2,
    Exp3,
}

impl Family {
    pub fn generate(&self, n: usize, seed: u64) -> Result<LqProblem> {
        match *self {
            Family::Exp1 { r, l } => gen_exp1(n, r, l, seed),
            Family::Exp2 => gen_exp2(n),
            Family::Exp3 => gen_exp3(n),
        }
    }

    /// Whether perturbations keep `Q = A + Aᵀ`.
    pub fn preserves_structure(&self) -> bool {
        matches!(self, Family::Exp3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Value(f64),
    /// The residual control counts differ, so the subspaces live in
    /// different spaces.
    NotComputable,
}

impl Alpha {
    pub fn value(&self) -> Option<f64> {
        match self {
            Alpha::Value(a) => Some(*a),
            Alpha::NotComputable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub n: usize,
    pub delta: f64,
    pub steps_exact: usize,
    pub steps: usize,
    pub m_exact: usize,
    pub m1: usize,
    pub rp_exact: usize,
    pub rp1: usize,
    pub alpha: Alpha,
}

impl ExperimentRecord {
    /// Whether the perturbed run reproduced `(steps, m, rp)`.
    pub fn structure_matches(&self) -> bool {
        (self.steps, self.m1, self.rp1) == (self.steps_exact, self.m_exact, self.rp_exact)
    }
}

/// Angle between the final `(x, p, u)` constraint subspaces of two
/// reductions, or `NotComputable` when their residual control counts differ.
pub fn alpha_between(
    exact: &ReductionResult,
    perturbed: &ReductionResult,
    tol: Tolerance,
) -> Alpha {
    if exact.m_res != perturbed.m_res {
        return Alpha::NotComputable;
    }
    let (a, b) = (exact.constraint_subspace(), perturbed.constraint_subspace());
    match (rank_tol(&a, tol), rank_tol(&b, tol)) {
        (0, 0) => Alpha::Value(0.0),
        (0, _) | (_, 0) => Alpha::Value(std::f64::consts::FRAC_PI_2),
        _ => Alpha::Value(subspace_angle(&a, &b, tol).expect("nonempty subspaces of equal width")),
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th trial at `delta`; independent of scheduling.
pub fn trial_seed(seed: u64, delta: f64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(delta.to_bits() ^ splitmix64(index as u64)))
}

/// Reduces the exact problem once and one perturbed problem per δ.
pub fn run_sweep(
    family: Family,
    n: usize,
    deltas: &[f64],
    seed: u64,
    tol: Tolerance,
) -> Result<Vec<ExperimentRecord>> {
    if deltas.is_empty() {
        return Err(Error::InvalidShape("no perturbation sizes given".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::InvalidShape(format!(
            "perturbation size {d} is not a nonnegative number"
        )));
    }
    let problem = family.generate(n, seed)?;
    let exact = reduce(&problem, tol)?;
    deltas
        .par_iter()
        .enumerate()
        .map(|(i, &delta)| {
            let perturbed = perturb(
                &problem,
                delta,
                trial_seed(seed, delta, i),
                family.preserves_structure(),
            );
            let res = reduce(&perturbed, tol)?;
            Ok(ExperimentRecord {
                n,
                delta,
                steps_exact: exact.index_k,
                steps: res.index_k,
                m_exact: exact.m_res,
                m1: res.m_res,
                rp_exact: exact.rp,
                rp1: res.rp,
                alpha: alpha_between(&exact, &res, tol),
            })
        })
        .collect()
}

/// Least-squares slope of `log₁₀ α` against `log₁₀ δ` over the records with
/// a positive α and δ.
pub fn fit_loglog_slope(records: &[ExperimentRecord]) -> Result<f64> {
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| match r.alpha {
            Alpha::Value(a) if a > 0.0 && r.delta > 0.0 => Some((r.delta.log10(), a.log10())),
            _ => None,
        })
        .collect();
    let k = points.len();
    if k < 2 {
        return Err(Error::InsufficientData(k));
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    Ok(sxy / sxx)
}
