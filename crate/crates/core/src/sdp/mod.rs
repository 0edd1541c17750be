//! Small dense semidefinite programming.
//!
//! Problems are posed over free real variables `x`:
//!
//! ```text
//! minimise   cᵀx + c0
//! subject to A x = b
//!            h_j − G_j(x) ⪰ 0      for every block j (real symmetric)
//! ```
//!
//! where `G_j(x) = Σ_i x_i G_ij`. The dual is
//! `maximise −bᵀy − Σ_j Tr(h_j Z_j) + c0` over `y` free and `Z_j ⪰ 0` with
//! `Aᵀy + Σ_j G_jᵀ(Z_j) + c = 0`. Scalar non-negativity is a 1×1 block.
//!
//! [`solver::solve`] runs a primal-dual interior-point method on the
//! homogeneous self-dual embedding; [`model::Model`] builds problems from
//! affine expressions in complex Hermitian matrix variables, mapped to real
//! blocks through `H ↦ [[Re H, −Im H], [Im H, Re H]]`.

pub mod dump;
pub mod model;
pub mod solver;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
pub use model::{BlockId, MatExpr, Model, ModelSolution, ScalarExpr};
pub use solver::solve;

/// One entry `(row, col, value)` of a sparse symmetric coefficient matrix;
/// off-diagonal entries are stored in both triangles.
pub type Entry = (usize, usize, f64);

/// A PSD cone constraint `h − Σ_i x_i G_i ⪰ 0`.
#[derive(Clone, Debug)]
pub struct ConeBlock {
    pub size: usize,
    pub h: DMatrix<f64>,
    /// `(variable, entries of G_i)`, sorted by variable.
    pub coefficients: Vec<(usize, Vec<Entry>)>,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub c: DVector<f64>,
    pub c0: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub blocks: Vec<ConeBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    /// Progress stopped with residuals within ten times the tolerances.
    NearOptimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    Stalled,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Residual summary of a solve; all quantities relative.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub z: Vec<DMatrix<f64>>,
    pub s: Vec<DMatrix<f64>>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    /// `|primal − dual|`.
    pub fn gap(&self) -> f64 {
        (self.primal_value - self.dual_value).abs()
    }
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            c: DVector::zeros(num_vars),
            c0: 0.0,
            a: DMatrix::zeros(0, num_vars),
            b: DVector::zeros(0),
            blocks: Vec::new(),
        }
    }

    pub fn num_equalities(&self) -> usize {
        self.a.nrows()
    }

    /// Scales every cost coefficient (and the offset) by `factor`.
    pub fn scale_objective(&mut self, factor: f64) {
        self.c *= factor;
        self.c0 *= factor;
    }
}

/// Solve statistics carried alongside measure values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub solves: usize,
    pub iterations: usize,
    /// Largest relative gap over solves that reached optimality.
    pub max_gap: f64,
    /// Solves whose last iterate was used only as a candidate for an
    /// independently certified bound.
    #[serde(default)]
    pub candidates: usize,
}

impl SolveMeta {
    pub fn record(&mut self, sol: &SdpSolution) {
        self.solves += 1;
        self.iterations += sol.iterations;
        if sol.is_optimal() {
            self.max_gap = self.max_gap.max(sol.gap() / (1.0 + sol.primal_value.abs()));
        } else {
            self.candidates += 1;
        }
    }

    pub fn merge(&mut self, other: &SolveMeta) {
        self.solves += other.solves;
        self.iterations += other.iterations;
        self.max_gap = self.max_gap.max(other.max_gap);
        self.candidates += other.candidates;
    }
}

fn solve_dumped(model: &Model, opts: &crate::Options, meta: &mut SolveMeta) -> crate::Result<ModelSolution> {
    if let Some(dir) = &opts.dump_dir {
        use sha2::{Digest, Sha256};
        let text = dump::to_text(&model.to_problem());
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("sdp-{}.txt", &digest[..16])), text)?;
    }
    let sol = model.solve_any(&opts.solver);
    meta.record(&sol.raw);
    Ok(sol)
}

fn solver_error(sol: &ModelSolution) -> crate::Error {
    crate::Error::Solver {
        status: sol.raw.status,
        iterations: sol.raw.iterations,
        gap: sol.raw.residuals.gap,
    }
}

/// Solves `model` under `opts`, recording statistics into `meta` and
/// dumping the problem first when `opts.dump_dir` is set.
pub fn solve_model(
    model: &Model,
    opts: &crate::Options,
    meta: &mut SolveMeta,
) -> crate::Result<ModelSolution> {
    let sol = solve_dumped(model, opts, meta)?;
    if !sol.raw.is_optimal() {
        return Err(solver_error(&sol));
    }
    Ok(sol)
}

/// Like [`solve_model`], but also accepts the last iterate of a stalled
/// solve. Only for callers that repair and certify the point themselves.
pub fn solve_model_candidate(
    model: &Model,
    opts: &crate::Options,
    meta: &mut SolveMeta,
) -> crate::Result<ModelSolution> {
    let sol = solve_dumped(model, opts, meta)?;
    let usable = match sol.raw.status {
        SolveStatus::Optimal | SolveStatus::NearOptimal => true,
        SolveStatus::Stalled | SolveStatus::IterationLimit => sol.raw.primal_value.is_finite(),
        _ => false,
    };
    if !usable {
        return Err(solver_error(&sol));
    }
    Ok(sol)
}
