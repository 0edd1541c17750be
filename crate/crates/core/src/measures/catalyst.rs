//! Programs on states carrying a maximally entangled catalyst.
//!
//! A state on `[d_A·k, d_B·k]` (factor order `a, a_K, b, b_K`) that is
//! invariant under `U ⊗ U*` on the catalyst pair has the form
//! `X₁ ⊗ Ψ_k + X₂ ⊗ Φ_k` with `Φ_k = (I − Ψ_k)/(k² − 1)`. Every program in
//! this module is invariant under that twirl, so it can be solved over the
//! pair `(X₁, X₂)` on the small `d_A ⊗ d_B` space:
//!
//! - PSD: `X₁, X₂ ⪰ 0`;
//! - PPT: `(k+1)X₁^Γ + X₂^Γ ⪰ 0` and `X₂^Γ − (k−1)X₁^Γ ⪰ 0`;
//! - separable if `X₁ = Y_a/k + αΨ_d + β(I − Ψ_d)` and
//!   `X₂ = (k−1)Y_a/k + Y_b + β(k²−1)I` with `Y_a, Y_b` separable and
//!   `0 ≤ α ≤ (dk+1)β`: the `Y` terms are `Y_a ⊗ ω + Y_b ⊗ Φ_k` with `ω` the
//!   isotropic state of overlap `1/k`, and the scalars give a separable
//!   isotropic operator on the whole `dk ⊗ dk` space (only when `d_A = d_B`).
//!
//! Lower bounds come from the PPT pair, upper bounds from a second program
//! over the separable family above.

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, real, CMat};
use crate::quantum::{self, DensityMatrix};
use crate::sdp::{solve_model, solve_model_candidate, MatExpr, Model, ModelSolution, ScalarExpr, SolveMeta};
use crate::separability::{self, Cone, SepMode};
use crate::Options;

use super::{Ansatz, BracketedValue, Provenance};

/// `X₁ ⊗ Ψ_k + X₂ ⊗ Φ_k` in the catalyst factor order.
#[derive(Clone, Debug)]
pub struct CatalystForm {
    pub x1: CMat,
    pub x2: CMat,
    pub rho_dims: [usize; 2],
    pub k: usize,
}

/// Moves `(a, a_K, b, b_K)` to `(a, b, a_K, b_K)`; the permutation is an
/// involution.
const SWAP_MIDDLE: [usize; 4] = [0, 2, 1, 3];

impl CatalystForm {
    /// `ρ ⊗ Ψ_k` regrouped.
    pub fn product(rho: &DensityMatrix, k: usize) -> Result<Self> {
        let rho_dims = bipartite(rho.dims())?;
        check_k(k)?;
        let n = rho.side();
        Ok(Self {
            x1: rho.matrix().clone(),
            x2: CMat::zeros(n, n),
            rho_dims,
            k,
        })
    }

    /// Projects an operator onto catalyst form (the twirl).
    pub fn from_operator(z: &CMat, rho_dims: [usize; 2], k: usize) -> Self {
        let [da, db] = rho_dims;
        let (moved, _) = linalg::permute_factors(z, &[da, k, db, k], &SWAP_MIDDLE);
        let kk = k * k;
        let n = da * db;
        let psi = linalg::mes_projector(k);
        let mut x1 = CMat::zeros(n, n);
        let mut x2 = CMat::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let block = moved.view((r * kk, c * kk), (kk, kk)).clone_owned();
                let on_psi = linalg::trace_product(&block, &psi);
                x1[(r, c)] = on_psi;
                x2[(r, c)] = linalg::trace(&block) - on_psi;
            }
        }
        Self { x1, x2, rho_dims, k }
    }

    /// Checks invariance before projecting.
    pub fn from_state(rho: &DensityMatrix, rho_dims: [usize; 2], k: usize) -> Result<Self> {
        check_k(k)?;
        let full = [rho_dims[0] * k, rho_dims[1] * k];
        if rho.dims() != full {
            return Err(Error::DimensionMismatch(format!(
                "catalyst form on {rho_dims:?} with k = {k} needs dims {full:?}, got {:?}",
                rho.dims()
            )));
        }
        let form = Self::from_operator(rho.matrix(), rho_dims, k);
        let drift = linalg::max_abs_diff(&form.to_operator(), rho.matrix());
        if drift > separability::SYMMETRY_TOL {
            return Err(Error::InvalidParameter(format!(
                "state is not invariant under the catalyst twirl (drift {drift:e})"
            )));
        }
        Ok(form)
    }

    pub fn to_operator(&self) -> CMat {
        let [da, db] = self.rho_dims;
        let k = self.k;
        let psi = linalg::mes_projector(k);
        let phi = (linalg::identity(k * k) - &psi) * real(1.0 / ((k * k) as f64 - 1.0));
        let grouped = linalg::kron(&self.x1, &psi) + linalg::kron(&self.x2, &phi);
        linalg::permute_factors(&grouped, &[da, db, k, k], &SWAP_MIDDLE).0
    }

    pub fn full_dims(&self) -> Vec<usize> {
        vec![self.rho_dims[0] * self.k, self.rho_dims[1] * self.k]
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        DensityMatrix::new(self.to_operator(), self.full_dims())
    }

    fn symmetric(&self) -> bool {
        let dims = self.rho_dims.to_vec();
        separability::is_isotropic(&self.x1, &dims) && separability::is_isotropic(&self.x2, &dims)
    }

    fn is_zero(m: &CMat) -> bool {
        m.iter().all(|z| z.norm() < 1e-14)
    }
}

fn bipartite(dims: &[usize]) -> Result<[usize; 2]> {
    match dims {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::DimensionUnsupported {
            dims: dims.to_vec(),
            reason: "catalytic programs need a bipartite state".into(),
        }),
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("catalyst rank {k} < 2")));
    }
    Ok(())
}

/// `U ⊗ U*` twirl of the catalyst pair of a `[d_A·k, d_B·k]` operator.
pub fn catalyst_twirl(z: &CMat, rho_dims: [usize; 2], k: usize) -> CMat {
    let [da, db] = rho_dims;
    linalg::twirl_pair(z, &[da, k, db, k], 1, 3)
}

fn ppt_pair(model: &mut Model, y1: &MatExpr, y2: &MatExpr, dims: &[usize], k: usize) {
    let kf = k as f64;
    let t1 = y1.partial_transpose(dims, &[1]);
    let t2 = y2.partial_transpose(dims, &[1]);
    model.psd(&t1.scale(kf + 1.0).add(&t2));
    model.psd(&t2.sub(&t1.scale(kf - 1.0)));
}

/// Variables of the separable family, with their constraints.
struct Family {
    ya: MatExpr,
    yb: MatExpr,
    scalars: Option<(ScalarExpr, ScalarExpr)>,
    d: usize,
    k: usize,
}

impl Family {
    fn new(model: &mut Model, ansatz: &Ansatz, dims: &[usize], k: usize) -> Self {
        let n = dims[0] * dims[1];
        let ya = ansatz.herm(model, n);
        let yb = ansatz.herm(model, n);
        for y in [&ya, &yb] {
            model.psd(y);
            model.psd(&y.partial_transpose(dims, &[1]));
        }
        let scalars = (dims[0] == dims[1]).then(|| {
            let alpha = model.scalar_var();
            let beta = model.scalar_var();
            model.nonneg(&alpha);
            model.nonneg(&beta.scale((dims[0] * k + 1) as f64).sub(&alpha));
            (alpha, beta)
        });
        Self { ya, yb, scalars, d: dims[0], k }
    }

    /// `(X₁, X₂)` of the family member.
    fn blocks(&self) -> (MatExpr, MatExpr) {
        let kf = self.k as f64;
        let n = self.ya.shape().0;
        let mut f1 = self.ya.scale(1.0 / kf);
        let mut f2 = self.ya.scale((kf - 1.0) / kf).add(&self.yb);
        if let Some((alpha, beta)) = &self.scalars {
            let psi = linalg::mes_projector(self.d);
            let rest = linalg::identity(n) - &psi;
            f1 = f1
                .add(&MatExpr::scalar_times(alpha, &psi))
                .add(&MatExpr::scalar_times(beta, &rest));
            f2 = f2.add(&MatExpr::identity_times(n, &beta.scale(kf * kf - 1.0)));
        }
        (f1, f2)
    }

    /// Reads the solution back and repairs it into the family.
    fn certified(&self, sol: &ModelSolution, mode: &SepMode, dims: &[usize]) -> Option<CertifiedFamily> {
        let n = dims[0] * dims[1];
        let id = linalg::identity(n);
        let fix = |m: CMat| -> Option<CMat> {
            let m = mode.symmetrize(&m, dims);
            let t = mode.shift(&m, dims, Cone::Sep);
            t.is_finite().then(|| m + &id * real(t))
        };
        let ya = fix(sol.value(&self.ya))?;
        let yb = fix(sol.value(&self.yb))?;
        let (alpha, beta) = match &self.scalars {
            Some((a, b)) => {
                let beta = sol.scalar(b).max(0.0);
                let alpha = sol.scalar(a).clamp(0.0, ((self.d * self.k + 1) as f64) * beta);
                (alpha, beta)
            }
            None => (0.0, 0.0),
        };
        Some(CertifiedFamily { ya, yb, alpha, beta, d: self.d, k: self.k })
    }
}

struct CertifiedFamily {
    ya: CMat,
    yb: CMat,
    alpha: f64,
    beta: f64,
    d: usize,
    k: usize,
}

impl CertifiedFamily {
    fn blocks(&self) -> (CMat, CMat) {
        let kf = self.k as f64;
        let n = self.ya.nrows();
        let mut f1 = &self.ya * real(1.0 / kf);
        let mut f2 = &self.ya * real((kf - 1.0) / kf) + &self.yb;
        if self.alpha != 0.0 || self.beta != 0.0 {
            let psi = linalg::mes_projector(self.d);
            let id = linalg::identity(n);
            f1 += &psi * real(self.alpha) + (&id - &psi) * real(self.beta);
            f2 += id * real(self.beta * (kf * kf - 1.0));
        }
        (f1, f2)
    }

    /// Adds multiples of the identity to `Y_a`, then `Y_b`, until the
    /// blocks dominate `(q1, q2)`.
    fn dominate(&mut self, q1: &CMat, q2: &CMat) {
        let kf = self.k as f64;
        let id = linalg::identity(self.ya.nrows());
        let (f1, _) = self.blocks();
        let need1 = (-linalg::min_eigenvalue(&(&f1 - q1))).max(0.0);
        self.ya += &id * real(kf * need1);
        let (_, f2) = self.blocks();
        let need2 = (-linalg::min_eigenvalue(&(&f2 - q2))).max(0.0);
        self.yb += id * real(need2);
    }
}

/// Smoothed `E_max` of a catalyst-form target.
#[derive(Clone, Debug)]
pub struct CatalystSmoothSolution {
    pub value: BracketedValue,
    /// Catalyst-form state in the fidelity ball of the target.
    pub state: CatalystForm,
    /// Certified separable catalyst-form operator dominating `state`.
    pub sigma: CatalystForm,
    /// `Tr sigma`, so `value.upper = log trace`.
    pub trace: f64,
}

/// `F(r, T) ≥ 1 − ε` for the catalyst-form pair `r = (r₁, r₂)`.
fn fidelity_pair(model: &mut Model, ansatz: &Ansatz, target: &CatalystForm, r1: &MatExpr, r2: &MatExpr, eps: f64) {
    let n = target.x1.nrows();
    if CatalystForm::is_zero(&target.x2) && super::is_rank_one(&target.x1) {
        // F = Tr(R₁T₁) for a rank-one T₁.
        model.nonneg(&r1.trace_with(&target.x1).0.plus(-(1.0 - eps)));
        return;
    }
    let x1 = ansatz.complex(model, n);
    model.psd(&MatExpr::block2(&MatExpr::constant(target.x1.clone()), &x1, &x1.adjoint(), r1));
    let mut overlap = x1.trace();
    if !CatalystForm::is_zero(&target.x2) {
        let x2 = ansatz.complex(model, n);
        model.psd(&MatExpr::block2(&MatExpr::constant(target.x2.clone()), &x2, &x2.adjoint(), r2));
        overlap = overlap.add(&x2.trace());
    }
    model.nonneg(&overlap.plus(-(1.0 - eps).sqrt()));
}

/// `E_max^ε` of `target`, solved in reduced form.
pub fn e_max_smooth_form(target: &CatalystForm, eps: f64, opts: &Options) -> Result<CatalystSmoothSolution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("catalytic smoothing needs ε in (0, 1), got {eps}")));
    }
    let dims = target.rho_dims.to_vec();
    let n = dims[0] * dims[1];
    let k = target.k;
    let symmetric = target.symmetric();
    let ansatz = Ansatz(symmetric.then(|| dims[0]));
    let mode = SepMode::for_dims(&dims, symmetric);
    let mut meta = SolveMeta::default();

    // Relaxation.
    let mut model = Model::new();
    let r1 = ansatz.herm(&mut model, n);
    let r2 = ansatz.herm(&mut model, n);
    let s1 = ansatz.herm(&mut model, n);
    let s2 = ansatz.herm(&mut model, n);
    model.psd(&r1);
    model.psd(&r2);
    model.eq(&r1.trace().add(&r2.trace()), 1.0);
    model.psd(&s1.sub(&r1));
    model.psd(&s2.sub(&r2));
    ppt_pair(&mut model, &s1, &s2, &dims, k);
    fidelity_pair(&mut model, &ansatz, target, &r1, &r2, eps);
    model.minimize(&s1.trace().add(&s2.trace()));
    let lower = solve_model(&model, opts, &mut meta)?.primal_value().max(1.0).log2();

    // Inner program over the separable family.
    let mut model = Model::new();
    let r1 = ansatz.herm(&mut model, n);
    let r2 = ansatz.herm(&mut model, n);
    model.psd(&r1);
    model.psd(&r2);
    model.eq(&r1.trace().add(&r2.trace()), 1.0);
    let family = Family::new(&mut model, &ansatz, &dims, k);
    let (f1, f2) = family.blocks();
    model.psd(&f1.sub(&r1));
    model.psd(&f2.sub(&r2));
    fidelity_pair(&mut model, &ansatz, target, &r1, &r2, eps);
    model.minimize(&f1.trace().add(&f2.trace()));
    let sol = solve_model_candidate(&model, opts, &mut meta)?;

    // Normalise the state part and pull it back into the ball.
    let clamp = |m: &CMat| linalg::hermitian_map(&mode.symmetrize(m, &dims), |v| v.max(0.0));
    let mut q1 = clamp(&sol.value(&r1));
    let mut q2 = clamp(&sol.value(&r2));
    let total = linalg::trace(&q1).re + linalg::trace(&q2).re;
    q1 /= real(total);
    q2 /= real(total);
    let root = quantum::fidelity_operators(&q1, &target.x1).sqrt()
        + quantum::fidelity_operators(&q2, &target.x2).sqrt();
    let goal = (1.0 - eps).sqrt();
    if root < goal {
        let q = ((goal - root) / (1.0 - root)).min(1.0) + 1e-12;
        q1 = &q1 * real(1.0 - q) + &target.x1 * real(q);
        q2 = &q2 * real(1.0 - q) + &target.x2 * real(q);
    }

    let mut cert = family
        .certified(&sol, &mode, &dims)
        .ok_or_else(|| Error::RelaxationGap("no separability certificate for the catalyst blocks".into()))?;
    cert.dominate(&q1, &q2);
    let (sig1, sig2) = cert.blocks();
    let trace = linalg::trace(&sig1).re + linalg::trace(&sig2).re;
    let provenance = if mode.is_exact() { Provenance::SdpCertified } else { Provenance::PptRelaxation };
    let rho_dims = target.rho_dims;
    Ok(CatalystSmoothSolution {
        value: BracketedValue::new(lower, trace.log2(), provenance, meta),
        state: CatalystForm { x1: q1, x2: q2, rho_dims, k },
        sigma: CatalystForm { x1: sig1, x2: sig2, rho_dims, k },
        trace,
    })
}

/// `R_G` of a catalyst-form state, solved in reduced form.
pub fn r_global_form(state: &CatalystForm, opts: &Options) -> Result<super::RobustnessSolution> {
    let dims = state.rho_dims.to_vec();
    let n = dims[0] * dims[1];
    let k = state.k;
    let symmetric = state.symmetric();
    let ansatz = Ansatz(symmetric.then(|| dims[0]));
    let mode = SepMode::for_dims(&dims, symmetric);
    let mut meta = SolveMeta::default();

    let mut model = Model::new();
    let w1 = ansatz.herm(&mut model, n);
    let w2 = ansatz.herm(&mut model, n);
    model.psd(&w1);
    model.psd(&w2);
    let y1 = w1.add_constant(&state.x1);
    let y2 = w2.add_constant(&state.x2);
    ppt_pair(&mut model, &y1, &y2, &dims, k);
    model.minimize(&w1.trace().add(&w2.trace()));
    let lower = solve_model(&model, opts, &mut meta)?.primal_value().max(0.0);

    let mut model = Model::new();
    let family = Family::new(&mut model, &ansatz, &dims, k);
    let (f1, f2) = family.blocks();
    model.psd(&f1.add_constant(&-&state.x1));
    model.psd(&f2.add_constant(&-&state.x2));
    model.minimize(&f1.trace().add(&f2.trace()));
    let sol = solve_model_candidate(&model, opts, &mut meta)?;
    let mut cert = family
        .certified(&sol, &mode, &dims)
        .ok_or_else(|| Error::RelaxationGap("no separability certificate for the catalyst blocks".into()))?;
    cert.dominate(&state.x1, &state.x2);
    let (f1, f2) = cert.blocks();
    let noise = CatalystForm {
        x1: f1 - &state.x1,
        x2: f2 - &state.x2,
        rho_dims: state.rho_dims,
        k,
    };
    let upper = linalg::trace(&noise.x1).re + linalg::trace(&noise.x2).re;
    let provenance = if mode.is_exact() { Provenance::SdpCertified } else { Provenance::PptRelaxation };
    Ok(super::RobustnessSolution {
        value: BracketedValue::new(lower, upper.max(lower), provenance, meta),
        noise: Some(noise.to_operator()),
    })
}
