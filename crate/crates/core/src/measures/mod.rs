//! Entanglement measures: relative entropies, robustness and their smoothed
//! forms.
//!
//! Quantities that optimise over the separable set are returned as a
//! [`BracketedValue`]. The lower end comes from the PPT relaxation solved as
//! an SDP; the upper end from an explicitly separable point built from the
//! SDP solution (see [`crate::separability::SepMode`]). Logarithms are base 2.

pub mod catalyst;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, real, CMat, C64};
use crate::quantum::{self, Bipartition, DensityMatrix, Effect};
use crate::sdp::{solve_model, MatExpr, Model, SolveMeta};
use crate::separability::{self, Cone, SepMode};
use crate::Options;

/// Relative support cutoff for `D_max` and `D_min`.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Width under which a bracket counts as a point value.
pub const EXACT_WIDTH: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PptRelaxation,
    Seesaw,
    ClosedForm,
    SdpCertified,
}

/// A certified interval `[lower, upper]` for a quantity defined over the
/// separable set.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BracketedValue {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    pub provenance: Provenance,
    pub meta: SolveMeta,
}

impl BracketedValue {
    pub fn new(lower: f64, upper: f64, provenance: Provenance, meta: SolveMeta) -> Self {
        // Solver noise can put the two ends a hair out of order.
        let lower = if lower > upper && lower - upper < 1e-7 { upper } else { lower };
        Self {
            lower,
            upper,
            exact: upper - lower <= EXACT_WIDTH,
            provenance,
            meta,
        }
    }

    pub fn point(value: f64, provenance: Provenance) -> Self {
        Self::new(value, value, provenance, SolveMeta::default())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// Image under a non-decreasing map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(f(self.lower), f(self.upper), self.provenance, self.meta)
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lower - tol <= x && x <= self.upper + tol
    }
}

fn provenance_for(mode: SepMode) -> Provenance {
    if mode.is_exact() {
        Provenance::SdpCertified
    } else {
        Provenance::PptRelaxation
    }
}

/// The fidelity ball `{ρ̄ : F(ρ̄, ρ) ≥ 1 − ε}`.
#[derive(Clone, Debug)]
pub struct SmoothingBall {
    pub center: DensityMatrix,
    pub epsilon: f64,
}

impl SmoothingBall {
    pub fn new(center: DensityMatrix, epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("smoothing ε = {epsilon} outside [0, 1)")));
        }
        Ok(Self { center, epsilon })
    }

    pub fn contains(&self, rho: &DensityMatrix, tol: f64) -> bool {
        quantum::fidelity(rho, &self.center).map_or(false, |f| f >= 1.0 - self.epsilon - tol)
    }

    /// Maps a near-feasible candidate into the ball by normalising it and
    /// mixing in the centre just enough; √F is concave, so the mixture
    /// `(1−q)ρ̃ + qρ` has `√F ≥ (1−q)√F(ρ̃, ρ) + q`.
    pub fn pull_in(&self, candidate: &CMat) -> Result<DensityMatrix> {
        let rho = DensityMatrix::from_psd_operator(candidate, self.center.dims().to_vec())?;
        let root = quantum::fidelity(&rho, &self.center)?.sqrt();
        let target = (1.0 - self.epsilon).sqrt();
        if root >= target {
            return Ok(rho);
        }
        let q = ((target - root) / (1.0 - root)).min(1.0) + 1e-12;
        rho.mix(&self.center, 1.0 - q.min(1.0))
    }
}

/// Symmetry an input is known to have; used to shrink SDPs and to pick an
/// inner certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Symmetry {
    None,
    /// Invariant under `U ⊗ U*` on two equal factors.
    Isotropic,
    /// Invariant under `U ⊗ U*` on the catalyst factors of a
    /// `[d_A·k, d_B·k]` state (factor order `a, a_K, b, b_K`).
    Catalyst { rho_dims: [usize; 2], k: usize },
}

/// Parametrisation of matrix variables: general, or restricted to the
/// isotropic span when the whole problem is twirl-invariant.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Ansatz(Option<usize>);

impl Ansatz {
    pub(crate) fn for_state(rho: &CMat, dims: &[usize]) -> Self {
        Ansatz(separability::is_isotropic(rho, dims).then(|| dims[0]))
    }

    pub(crate) fn symmetric(&self) -> bool {
        self.0.is_some()
    }

    pub(crate) fn herm(&self, model: &mut Model, n: usize) -> MatExpr {
        match self.0 {
            Some(d) => {
                let psi = linalg::mes_projector(d);
                let rest = linalg::identity(d * d) - &psi;
                model.real_span(&[psi, rest])
            }
            None => model.herm_var(n),
        }
    }

    pub(crate) fn complex(&self, model: &mut Model, n: usize) -> MatExpr {
        match self.0 {
            Some(d) => {
                let psi = linalg::mes_projector(d);
                let rest = linalg::identity(d * d) - &psi;
                let i = C64::new(0.0, 1.0);
                model.real_span(&[psi.clone(), &psi * i, rest.clone(), &rest * i])
            }
            None => model.complex_var(n, n),
        }
    }
}

pub(crate) fn is_rank_one(m: &CMat) -> bool {
    let tr = linalg::trace(m).re;
    tr > 0.0 && linalg::max_eigenvalue(m) >= tr * (1.0 - 1e-12)
}

fn cuts_of(dims: &[usize]) -> Vec<Bipartition> {
    Bipartition::single_factor_cuts(dims.len())
}

fn constant(m: &CMat) -> MatExpr {
    MatExpr::constant(m.clone())
}

/// `D_max(ρ‖σ) = log min{λ : ρ ⪯ λσ}`.
pub fn d_max(rho: &DensityMatrix, sigma: &CMat) -> Result<f64> {
    if sigma.shape() != rho.matrix().shape() {
        return Err(Error::DimensionMismatch("D_max arguments differ in size".into()));
    }
    let (vals, vecs) = linalg::eigh(sigma);
    let top = vals.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Err(Error::InvalidParameter("σ has no positive eigenvalue".into()));
    }
    let n = vals.len();
    let mut inv_sqrt = CMat::zeros(n, n);
    let mut support = CMat::zeros(n, n);
    for (j, &v) in vals.iter().enumerate() {
        if v > SUPPORT_CUTOFF * top {
            let col = vecs.column(j);
            let p = &col * col.adjoint();
            inv_sqrt += &p * real(1.0 / v.sqrt());
            support += p;
        }
    }
    let outside = 1.0 - rho.expectation(&support);
    if outside > 1e-9 {
        return Err(Error::SupportViolation { weight: outside });
    }
    let m = &inv_sqrt * rho.matrix() * &inv_sqrt;
    Ok(linalg::max_eigenvalue(&m).log2())
}

/// `D_min(ρ‖σ) = −log Tr(Π_ρ σ)`.
pub fn d_min(rho: &DensityMatrix, sigma: &CMat) -> Result<f64> {
    if sigma.shape() != rho.matrix().shape() {
        return Err(Error::DimensionMismatch("D_min arguments differ in size".into()));
    }
    let proj = linalg::support_projector(rho.matrix(), SUPPORT_CUTOFF);
    let overlap = linalg::trace_product(&proj, sigma).re;
    if overlap <= 1e-300 {
        return Err(Error::InfiniteValue("Tr(Π_ρ σ) = 0".into()));
    }
    Ok(-overlap.log2())
}

/// Pure-state relative entropy of entanglement: the entropy of a marginal.
pub fn e_r_pure(psi: &DensityMatrix) -> Result<f64> {
    if psi.purity() < 1.0 - 1e-9 {
        return Err(Error::InvalidState(format!(
            "closed form needs a pure state, purity is {}",
            psi.purity()
        )));
    }
    if psi.dims().len() != 2 {
        return Err(Error::DimensionUnsupported {
            dims: psi.dims().to_vec(),
            reason: "bipartite input required".into(),
        });
    }
    let marginal = quantum::partial_trace(psi, &Bipartition::second())?;
    Ok(quantum::von_neumann_entropy(&marginal))
}

/// `E_max(ρ) = log min Tr σ̂` over `σ̂ ⪰ ρ` in the separable cone.
pub fn e_max(rho: &DensityMatrix, opts: &Options) -> Result<BracketedValue> {
    let dims = rho.dims().to_vec();
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());

    let mut model = Model::new();
    let s = ansatz.herm(&mut model, n);
    model.psd(&s.sub(&constant(rho.matrix())));
    for cut in cuts_of(&dims) {
        model.psd(&s.partial_transpose(&dims, cut.factors()));
    }
    model.minimize(&s.trace());
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let lower = sol.primal_value().max(1.0).log2();

    let sigma = mode.symmetrize(&sol.value(&s), &dims);
    let t = mode.joint_shift(
        &[
            (&sigma - rho.matrix(), 1.0, Cone::Psd),
            (sigma.clone(), 1.0, Cone::Sep),
        ],
        &dims,
    );
    let certified = linalg::trace(&sigma).re + t * n as f64;
    let fallback = n as f64 * linalg::max_eigenvalue(rho.matrix());
    let upper = certified.min(fallback).log2();
    Ok(BracketedValue::new(lower, upper, provenance_for(mode), meta))
}

/// `E_min(ρ) = −log max_{σ∈S} Tr(Π_ρ σ)`.
pub fn e_min(rho: &DensityMatrix, opts: &Options) -> Result<BracketedValue> {
    Ok(e_min_parts(rho, opts)?.0)
}

fn e_min_parts(rho: &DensityMatrix, opts: &Options) -> Result<(BracketedValue, Effect, DensityMatrix)> {
    let proj = linalg::support_projector(rho.matrix(), SUPPORT_CUTOFF);
    let effect = Effect::clamped(&proj, rho.dims().to_vec())?;
    let sep = separability::max_linear_over_sep(&effect, None, opts)?;
    let neg_log = |v: f64| if v > 0.0 { -v.log2() } else { f64::INFINITY };
    let provenance = if sep.meta.solves == 0 {
        Provenance::ClosedForm
    } else if sep.exact {
        Provenance::SdpCertified
    } else {
        Provenance::Seesaw
    };
    let value = BracketedValue::new(
        neg_log(sep.ppt_value).max(0.0),
        neg_log(sep.heuristic_value).max(0.0),
        provenance,
        sep.meta,
    );
    Ok((value, effect, sep.product_point))
}

/// Optimal noise of a robustness program, already certified.
#[derive(Clone, Debug)]
pub struct RobustnessSolution {
    pub value: BracketedValue,
    /// `ŵ` with `Tr ŵ = value.upper` such that `ρ + ŵ` is certified
    /// separable (and, for `R`, `ŵ` itself too). `None` without a certificate.
    pub noise: Option<CMat>,
}

/// Global robustness `R_G(ρ)`: least `Tr ŵ` over `ŵ ⪰ 0` with `ρ + ŵ` in
/// the separable cone.
pub fn r_global(rho: &DensityMatrix, symmetry: Symmetry, opts: &Options) -> Result<BracketedValue> {
    Ok(r_global_solution(rho, symmetry, opts)?.value)
}

pub fn r_global_solution(rho: &DensityMatrix, symmetry: Symmetry, opts: &Options) -> Result<RobustnessSolution> {
    let dims = rho.dims().to_vec();
    match symmetry {
        Symmetry::Catalyst { rho_dims, k } => {
            let form = catalyst::CatalystForm::from_state(rho, rho_dims, k)?;
            return catalyst::r_global_form(&form, opts);
        }
        Symmetry::Isotropic if !separability::is_isotropic(rho.matrix(), &dims) => {
            return Err(Error::InvalidParameter("state is not U⊗U*-invariant".into()));
        }
        _ => {}
    }
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());

    let mut model = Model::new();
    let w = ansatz.herm(&mut model, n);
    model.psd(&w);
    let total = w.add_constant(rho.matrix());
    for cut in cuts_of(&dims) {
        model.psd(&total.partial_transpose(&dims, cut.factors()));
    }
    model.minimize(&w.trace());
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let lower = sol.primal_value().max(0.0);

    let w = mode.symmetrize(&sol.value(&w), &dims);
    let t = mode.joint_shift(
        &[
            (w.clone(), 1.0, Cone::Psd),
            (&w + rho.matrix(), 1.0, Cone::Sep),
        ],
        &dims,
    );
    let certified = linalg::trace(&w).re + t * n as f64;
    let fallback = n as f64 * linalg::max_eigenvalue(rho.matrix()) - 1.0;
    let (upper, noise) = if certified <= fallback {
        (certified, Some(&w + linalg::identity(n) * real(t)))
    } else {
        let lam = linalg::max_eigenvalue(rho.matrix());
        (fallback, Some(linalg::identity(n) * real(lam) - rho.matrix()))
    };
    Ok(RobustnessSolution {
        value: BracketedValue::new(lower, upper.max(lower), provenance_for(mode), meta),
        noise,
    })
}

/// `LR_G(ρ) = log(1 + R_G(ρ))`.
pub fn lr_global(rho: &DensityMatrix, opts: &Options) -> Result<BracketedValue> {
    Ok(r_global(rho, Symmetry::None, opts)?.map(|r| (1.0 + r).log2()))
}

/// Robustness `R(ρ)`: as [`r_global`] with the noise itself separable.
pub fn r_sep(rho: &DensityMatrix, opts: &Options) -> Result<BracketedValue> {
    Ok(r_sep_solution(rho, opts)?.value)
}

pub fn r_sep_solution(rho: &DensityMatrix, opts: &Options) -> Result<RobustnessSolution> {
    let dims = rho.dims().to_vec();
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());

    let mut model = Model::new();
    let w = ansatz.herm(&mut model, n);
    model.psd(&w);
    let total = w.add_constant(rho.matrix());
    for cut in cuts_of(&dims) {
        model.psd(&w.partial_transpose(&dims, cut.factors()));
        model.psd(&total.partial_transpose(&dims, cut.factors()));
    }
    model.minimize(&w.trace());
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let lower = sol.primal_value().max(0.0);
    let (upper, noise) = certify_sep_noise(&mode, &sol.value(&w), rho.matrix(), &dims);
    Ok(RobustnessSolution {
        value: BracketedValue::new(lower, upper.max(lower), provenance_for(mode), meta),
        noise,
    })
}

/// Shifts a candidate noise so that `ŵ` and `ρ + ŵ` are both certified
/// separable.
fn certify_sep_noise(mode: &SepMode, w: &CMat, rho: &CMat, dims: &[usize]) -> (f64, Option<CMat>) {
    let n = rho.nrows();
    let w = mode.symmetrize(w, dims);
    let t = mode.joint_shift(&[(w.clone(), 1.0, Cone::Sep), (&w + rho, 1.0, Cone::Sep)], dims);
    if !t.is_finite() {
        return (f64::INFINITY, None);
    }
    let noise = &w + linalg::identity(n) * real(t);
    (linalg::trace(&noise).re, Some(noise))
}

/// `LR(ρ) = log(1 + R(ρ))`.
pub fn lr(rho: &DensityMatrix, opts: &Options) -> Result<BracketedValue> {
    Ok(r_sep(rho, opts)?.map(|r| (1.0 + r).log2()))
}

/// Smoothed `E_max` with the state that attains the upper end.
#[derive(Clone, Debug)]
pub struct SmoothSolution {
    pub value: BracketedValue,
    /// A state in the fidelity ball.
    pub state: DensityMatrix,
    /// Certified separable operator dominating `state` (for `E_max^ε`), or
    /// certified separable noise (for `LR^ε`); `None` without a certificate.
    pub witness: Option<CMat>,
}

/// `E_max^ε(ρ) = min over the fidelity ball of E_max`.
pub fn e_max_smooth(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<BracketedValue> {
    Ok(e_max_smooth_solution(rho, eps, opts)?.value)
}

pub fn e_max_smooth_solution(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<SmoothSolution> {
    let ball = SmoothingBall::new(rho.clone(), eps)?;
    if eps == 0.0 {
        // The ball is {ρ}.
        return Ok(SmoothSolution {
            value: e_max(rho, opts)?,
            state: rho.clone(),
            witness: None,
        });
    }
    let dims = rho.dims().to_vec();
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());

    let mut model = Model::new();
    let r = ansatz.herm(&mut model, n);
    let s = ansatz.herm(&mut model, n);
    model.psd(&r);
    model.eq(&r.trace(), 1.0);
    model.psd(&s.sub(&r));
    for cut in cuts_of(&dims) {
        model.psd(&s.partial_transpose(&dims, cut.factors()));
    }
    fidelity_constraint(&mut model, &ansatz, rho.matrix(), &r, eps);
    model.minimize(&s.trace());
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let lower = sol.primal_value().max(1.0).log2();

    let state = ball.pull_in(&mode.symmetrize(&sol.value(&r), &dims))?;
    let sigma = mode.symmetrize(&sol.value(&s), &dims);
    let t = mode.joint_shift(
        &[
            (&sigma - state.matrix(), 1.0, Cone::Psd),
            (sigma.clone(), 1.0, Cone::Sep),
        ],
        &dims,
    );
    let certified = linalg::trace(&sigma).re + t * n as f64;
    let fallback = n as f64 * linalg::max_eigenvalue(state.matrix());
    let witness = (certified <= fallback).then(|| &sigma + linalg::identity(n) * real(t));
    let upper = certified.min(fallback).log2();
    debug!("E_max^ε bracket [{lower:.9}, {upper:.9}]");
    Ok(SmoothSolution {
        value: BracketedValue::new(lower, upper, provenance_for(mode), meta),
        state,
        witness,
    })
}

/// `[[ρ, X], [X†, r]] ⪰ 0` and `Re Tr X ≥ √(1−ε)`, which together say
/// `F(r, ρ) ≥ 1 − ε`.
fn fidelity_constraint(model: &mut Model, ansatz: &Ansatz, rho: &CMat, r: &MatExpr, eps: f64) {
    if is_rank_one(rho) {
        // Linear in r; avoids the degenerate block.
        model.nonneg(&r.trace_with(rho).0.plus(-(1.0 - eps)));
        return;
    }
    let n = rho.nrows();
    let x = ansatz.complex(model, n);
    model.psd(&MatExpr::block2(&constant(rho), &x, &x.adjoint(), r));
    model.nonneg(&x.trace().plus(-(1.0 - eps).sqrt()));
}

/// `LR^ε(ρ) = min over the fidelity ball of LR`.
pub fn lr_smooth(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<BracketedValue> {
    Ok(lr_smooth_solution(rho, eps, opts)?.value)
}

/// As [`lr_smooth`]; `value` is `LR^ε`, `witness` the certified separable
/// noise whose trace is the robustness at `state`.
pub fn lr_smooth_solution(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<SmoothSolution> {
    let ball = SmoothingBall::new(rho.clone(), eps)?;
    if eps == 0.0 {
        let sol = r_sep_solution(rho, opts)?;
        return Ok(SmoothSolution {
            value: sol.value.map(|r| (1.0 + r).log2()),
            state: rho.clone(),
            witness: sol.noise,
        });
    }
    let dims = rho.dims().to_vec();
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());

    let mut model = Model::new();
    let r = ansatz.herm(&mut model, n);
    let w = ansatz.herm(&mut model, n);
    model.psd(&r);
    model.eq(&r.trace(), 1.0);
    model.psd(&w);
    let total = r.add(&w);
    for cut in cuts_of(&dims) {
        model.psd(&w.partial_transpose(&dims, cut.factors()));
        model.psd(&total.partial_transpose(&dims, cut.factors()));
    }
    fidelity_constraint(&mut model, &ansatz, rho.matrix(), &r, eps);
    model.minimize(&w.trace());
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let lower = sol.primal_value().max(0.0);

    let state = ball.pull_in(&mode.symmetrize(&sol.value(&r), &dims))?;
    let (upper, witness) = certify_sep_noise(&mode, &sol.value(&w), state.matrix(), &dims);
    let value = BracketedValue::new(lower, upper.max(lower), provenance_for(mode), meta);
    Ok(SmoothSolution {
        value: value.map(|r| (1.0 + r).log2()),
        state,
        witness,
    })
}

/// Operator-smoothed `E_min` with its optimal test.
#[derive(Clone, Debug)]
pub struct EminSolution {
    pub value: BracketedValue,
    /// Optimal `A` with `Tr(Aρ) ≥ 1 − ε`.
    pub effect: Effect,
    /// The explicitly separable state that certifies `value.upper`.
    pub sigma: Option<DensityMatrix>,
}

/// `E_min^ε(ρ) = max_{0⪯A⪯I, Tr(Aρ)≥1−ε} −log max_{σ∈S} Tr(Aσ)`.
pub fn e_min_smooth(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<BracketedValue> {
    Ok(e_min_smooth_solution(rho, eps, &[], opts)?.value)
}

/// As [`e_min_smooth`]. `candidates` are extra separable states tried for
/// the upper end, which is `−log min_A Tr(Aσ₀)` for separable `σ₀`.
pub fn e_min_smooth_solution(
    rho: &DensityMatrix,
    eps: f64,
    candidates: &[DensityMatrix],
    opts: &Options,
) -> Result<EminSolution> {
    SmoothingBall::new(rho.clone(), eps)?;
    if eps == 0.0 {
        let (value, effect, product) = e_min_parts(rho, opts)?;
        return Ok(EminSolution {
            value,
            effect,
            sigma: Some(product),
        });
    }
    let dims = rho.dims().to_vec();
    let n = rho.side();
    let ansatz = Ansatz::for_state(rho.matrix(), &dims);
    let mode = SepMode::for_dims(&dims, ansatz.symmetric());
    let id = linalg::identity(n);

    // Inner max over PPT states dualised: μI − A − Σ_k Y_k^{Γ_k} ⪰ 0.
    let mut model = Model::new();
    let a = ansatz.herm(&mut model, n);
    model.psd(&a);
    model.psd(&constant(&id).sub(&a));
    model.nonneg(&a.trace_with(rho.matrix()).0.plus(-(1.0 - eps)));
    let mu = model.scalar_var();
    let mut slack = MatExpr::identity_times(n, &mu).sub(&a);
    for cut in cuts_of(&dims) {
        // Y^Γ must be isotropic, so Y itself is of Werner form.
        let y = match ansatz.0 {
            Some(_) => ansatz.herm(&mut model, n).partial_transpose(&dims, cut.factors()),
            None => ansatz.herm(&mut model, n),
        };
        model.psd(&y);
        slack = slack.sub(&y.partial_transpose(&dims, cut.factors()));
    }
    let block = model.psd(&slack);
    model.minimize(&mu);
    let mut meta = SolveMeta::default();
    let sol = solve_model(&model, opts, &mut meta)?;
    let mu_star = sol.primal_value();
    let lower = if mu_star > 0.0 { (-mu_star.log2()).max(0.0) } else { f64::INFINITY };
    let effect = Effect::clamped(&sol.value(&a), dims.clone())?;

    // Inner points: the dual PPT state made separable, the maximally mixed
    // state, and whatever the caller supplies.
    let mut pool: Vec<DensityMatrix> = Vec::new();
    let dual = mode.symmetrize(&sol.dual(block), &dims);
    let t = mode.shift(&dual, &dims, Cone::Sep);
    if t.is_finite() {
        let shifted = &dual + &id * real(t);
        if let Ok(s) = DensityMatrix::from_psd_operator(&shifted, dims.clone()) {
            pool.push(s);
        }
    }
    pool.push(DensityMatrix::maximally_mixed(dims.clone()));
    pool.extend(candidates.iter().cloned());

    let mut best: Option<(f64, DensityMatrix)> = None;
    for sigma in pool {
        let beta = test_minimum(rho, &sigma, eps, opts, &mut meta)?;
        if best.as_ref().map_or(true, |(b, _)| beta > *b) {
            best = Some((beta, sigma));
        }
    }
    let (beta, sigma) = best.expect("pool is non-empty");
    let upper = if beta > 0.0 { -beta.log2() } else { f64::INFINITY };
    debug!("E_min^ε bracket [{lower:.9}, {upper:.9}]");
    Ok(EminSolution {
        value: BracketedValue::new(lower, upper.max(lower), provenance_for(mode), meta),
        effect,
        sigma: Some(sigma),
    })
}

/// `β(σ₀) = min Tr(Aσ₀)` over `0 ⪯ A ⪯ I`, `Tr(Aρ) ≥ 1 − ε`.
fn test_minimum(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64, opts: &Options, meta: &mut SolveMeta) -> Result<f64> {
    let dims = rho.dims();
    let n = rho.side();
    let symmetric = separability::is_isotropic(rho.matrix(), dims)
        && separability::is_isotropic(sigma.matrix(), dims);
    let ansatz = if symmetric { Ansatz(Some(dims[0])) } else { Ansatz(None) };
    let mut model = Model::new();
    let a = ansatz.herm(&mut model, n);
    model.psd(&a);
    model.psd(&constant(&linalg::identity(n)).sub(&a));
    model.nonneg(&a.trace_with(rho.matrix()).0.plus(-(1.0 - eps)));
    model.minimize(&a.trace_with(sigma.matrix()).0);
    let sol = solve_model(&model, opts, meta)?;
    // Dual value: a valid lower bound on β whenever the dual is feasible.
    Ok(sol.primal_value().min(sol.dual_value()).max(0.0))
}

/// Measures addressable by name, as on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    DMax,
    DMin,
    EMax,
    EMin,
    RSep,
    RGlobal,
    Lr,
    LrGlobal,
    EMaxSmooth,
    LrSmooth,
    EMinSmooth,
    ErPure,
}

impl Measure {
    pub const ALL: [Measure; 12] = [
        Measure::DMax,
        Measure::DMin,
        Measure::EMax,
        Measure::EMin,
        Measure::RSep,
        Measure::RGlobal,
        Measure::Lr,
        Measure::LrGlobal,
        Measure::EMaxSmooth,
        Measure::LrSmooth,
        Measure::EMinSmooth,
        Measure::ErPure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::DMax => "dmax",
            Measure::DMin => "dmin",
            Measure::EMax => "emax",
            Measure::EMin => "emin",
            Measure::RSep => "r",
            Measure::RGlobal => "rg",
            Measure::Lr => "lr",
            Measure::LrGlobal => "lrg",
            Measure::EMaxSmooth => "emax-smooth",
            Measure::LrSmooth => "lr-smooth",
            Measure::EMinSmooth => "emin-smooth",
            Measure::ErPure => "er-pure",
        }
    }

    pub fn needs_eps(self) -> bool {
        matches!(self, Measure::EMaxSmooth | Measure::LrSmooth | Measure::EMinSmooth)
    }

    /// `D_max`/`D_min` compare against a second operator.
    pub fn needs_sigma(self) -> bool {
        matches!(self, Measure::DMax | Measure::DMin)
    }

    /// Evaluates on `rho`. `sigma` defaults to the maximally mixed state.
    pub fn evaluate(self, rho: &DensityMatrix, eps: Option<f64>, sigma: Option<&DensityMatrix>, opts: &Options) -> Result<BracketedValue> {
        let eps = match (self.needs_eps(), eps) {
            (true, Some(e)) => e,
            (true, None) => return Err(Error::InvalidParameter(format!("{} needs ε", self.name()))),
            (false, _) => 0.0,
        };
        let point = |v: f64| BracketedValue::new(v, v, Provenance::ClosedForm, SolveMeta::default());
        let mixed;
        let sigma = match sigma {
            Some(s) => s,
            None => {
                mixed = DensityMatrix::maximally_mixed(rho.dims().to_vec());
                &mixed
            }
        };
        match self {
            Measure::DMax => d_max(rho, sigma.matrix()).map(point),
            Measure::DMin => d_min(rho, sigma.matrix()).map(point),
            Measure::EMax => e_max(rho, opts),
            Measure::EMin => e_min(rho, opts),
            Measure::RSep => r_sep(rho, opts),
            Measure::RGlobal => r_global(rho, Symmetry::None, opts),
            Measure::Lr => lr(rho, opts),
            Measure::LrGlobal => lr_global(rho, opts),
            Measure::EMaxSmooth => e_max_smooth(rho, eps, opts),
            Measure::LrSmooth => lr_smooth(rho, eps, opts),
            Measure::EMinSmooth => e_min_smooth(rho, eps, opts),
            Measure::ErPure => e_r_pure(rho).map(point),
        }
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Measure::ALL.iter().map(|m| m.name()).collect();
            Error::InvalidParameter(format!("unknown measure {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[cfg(test)]
mod tests;
