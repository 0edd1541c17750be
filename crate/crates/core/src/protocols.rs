//! Measure-and-prepare channels that realise the one-shot rates, and the
//! check that they do not create entanglement.
//!
//! Every channel here has at most two branches `(E, τ₁), (I − E, τ₂)`. On a
//! separable input the output is `p·τ₁ + (1−p)·τ₂` with `p = Tr(Eσ)`, and
//! `R_G` is convex in `p`, so the worst separable input sits at an end of the
//! range of `p`. [`verify_sepp`] evaluates both ends.

use log::debug;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::catalyst::{self, CatalystForm};
use crate::measures::{self, BracketedValue, Provenance, Symmetry};
use crate::quantum::linalg::{self, real, CMat};
use crate::quantum::{self, DensityMatrix, Effect};
use crate::sdp::SolveMeta;
use crate::separability;
use crate::Options;

/// Slack on the SEPP threshold.
pub const SEPP_TOL: f64 = 1e-6;
/// Slack allowed when checking an achieved fidelity against `1 − ε`.
pub const FIDELITY_TOL: f64 = 1e-7;
/// Largest Schmidt rank a protocol may ask for.
pub const MAX_RANK: usize = 1 << 10;

#[derive(Clone, Debug)]
pub struct Branch {
    pub effect: Effect,
    pub output: DensityMatrix,
}

/// `ρ ↦ Σ_i Tr(E_i ρ)·τ_i`.
#[derive(Clone, Debug)]
pub struct MeasurePrepareChannel {
    pub branches: Vec<Branch>,
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    /// Shared symmetry of the outputs, used when scoring them.
    pub symmetry: Symmetry,
}

impl MeasurePrepareChannel {
    /// Checks that the effects sum to the identity and the shapes agree.
    pub fn new(branches: Vec<Branch>, symmetry: Symmetry) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| Error::InvalidParameter("a channel needs at least one branch".into()))?;
        let input_dims = first.effect.dims().to_vec();
        let output_dims = first.output.dims().to_vec();
        let n = first.effect.matrix().nrows();
        let mut sum = CMat::zeros(n, n);
        for b in &branches {
            if b.effect.dims() != input_dims || b.output.dims() != output_dims {
                return Err(Error::DimensionMismatch("branches disagree on dims".into()));
            }
            sum += b.effect.matrix();
        }
        let defect = linalg::max_abs_diff(&sum, &linalg::identity(n));
        if defect > 1e-9 {
            return Err(Error::InvalidEffect(format!("effects sum to I only within {defect:e}")));
        }
        Ok(Self {
            branches,
            input_dims,
            output_dims,
            symmetry,
        })
    }

    /// Replaces every input by `tau`.
    pub fn replacer(input_dims: Vec<usize>, tau: DensityMatrix, symmetry: Symmetry) -> Result<Self> {
        Self::new(
            vec![Branch {
                effect: Effect::identity(input_dims),
                output: tau,
            }],
            symmetry,
        )
    }

    /// `(E, τ₁), (I − E, τ₂)`.
    pub fn two_branch(effect: Effect, first: DensityMatrix, second: DensityMatrix, symmetry: Symmetry) -> Result<Self> {
        let rest = effect.complement();
        Self::new(
            vec![
                Branch { effect, output: first },
                Branch { effect: rest, output: second },
            ],
            symmetry,
        )
    }

    /// Output for an input with `Tr(E₁σ) = p`.
    fn output_at(&self, p: f64) -> Result<DensityMatrix> {
        match self.branches.as_slice() {
            [only] => Ok(only.output.clone()),
            [a, b] => {
                let p = p.clamp(0.0, 1.0);
                let m = a.output.matrix() * real(p) + b.output.matrix() * real(1.0 - p);
                DensityMatrix::new(m, self.output_dims.clone())
            }
            _ => Err(too_many_branches(self.branches.len())),
        }
    }
}

fn too_many_branches(n: usize) -> Error {
    Error::InvalidParameter(format!("endpoint reduction needs at most two branches, channel has {n}"))
}

pub fn apply(channel: &MeasurePrepareChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dims() != channel.input_dims {
        return Err(Error::DimensionMismatch(format!(
            "channel takes {:?}, state has {:?}",
            channel.input_dims,
            rho.dims()
        )));
    }
    let n: usize = channel.output_dims.iter().product();
    let mut out = CMat::zeros(n, n);
    for b in &channel.branches {
        let w = rho.expectation(b.effect.matrix());
        out += b.output.matrix() * real(w);
    }
    DensityMatrix::new(out, channel.output_dims.clone())
}

/// Worst-case `R_G` of the channel's outputs on separable inputs.
#[derive(Clone, Debug, Serialize)]
pub struct SeppReport {
    pub is_sepp: bool,
    pub worst_case_robustness: BracketedValue,
    /// A product input attaining the lower end of `worst_case_robustness`.
    #[serde(skip)]
    pub binding_input: DensityMatrix,
    pub delta: f64,
    /// Range of `Tr(E₁σ)` over separable `σ` (outer bounds).
    pub p_range: [f64; 2],
}

/// Decides `R_G(Λ(σ)) ≤ δ` for every separable `σ`; `δ = 0` is plain SEPP.
pub fn verify_sepp(channel: &MeasurePrepareChannel, delta: f64, opts: &Options) -> Result<SeppReport> {
    if delta < 0.0 {
        return Err(Error::InvalidParameter(format!("δ = {delta} < 0")));
    }
    let product = quantum::basis_state(channel.input_dims.clone(), 0)?;
    let score = |out: &DensityMatrix| measures::r_global(out, channel.symmetry, opts);
    let (worst, binding, p_range) = match channel.branches.as_slice() {
        [only] => (score(&only.output)?, product, [1.0, 1.0]),
        [first, _] => {
            let hi = separability::max_linear_over_sep(&first.effect, None, opts)?;
            let lo = separability::max_linear_over_sep(&first.effect.complement(), None, opts)?;
            let outer = [(1.0 - lo.ppt_value).max(0.0), hi.ppt_value.min(1.0)];
            let inner = [(1.0 - lo.heuristic_value).max(0.0), hi.heuristic_value.min(1.0)];
            let points = [lo.product_point, hi.product_point];
            let mut meta = SolveMeta::default();
            meta.merge(&hi.meta);
            meta.merge(&lo.meta);
            let mut lower = f64::NEG_INFINITY;
            let mut upper = f64::NEG_INFINITY;
            let mut binding = product;
            let mut provenance = Provenance::SdpCertified;
            for end in 0..2 {
                let at_outer = score(&channel.output_at(outer[end])?)?;
                let at_inner = if (outer[end] - inner[end]).abs() <= 1e-12 {
                    at_outer.clone()
                } else {
                    score(&channel.output_at(inner[end])?)?
                };
                meta.merge(&at_outer.meta);
                upper = upper.max(at_outer.upper);
                if at_inner.lower > lower {
                    lower = at_inner.lower;
                    binding = points[end].clone();
                    provenance = at_outer.provenance;
                }
            }
            (BracketedValue::new(lower, upper, provenance, meta), binding, outer)
        }
        _ => return Err(too_many_branches(channel.branches.len())),
    };
    debug!("worst-case output robustness [{:.3e}, {:.3e}] vs δ = {delta}", worst.lower, worst.upper);
    Ok(SeppReport {
        is_sepp: worst.upper <= delta + SEPP_TOL,
        worst_case_robustness: worst,
        binding_input: binding,
        delta,
        p_range,
    })
}

/// The interval a rate is checked against.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self, rate: f64) -> bool {
        self.lower - 1e-6 <= rate && rate <= self.upper + 1e-6
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolOutcome {
    pub log_m: f64,
    pub m: usize,
    #[serde(skip)]
    pub channel: MeasurePrepareChannel,
    pub achieved_fidelity: f64,
    pub catalyst_k: Option<usize>,
    pub sepp_report: SeppReport,
    /// The smoothed measure the rate was read from.
    pub measure: BracketedValue,
    pub sandwich: Sandwich,
}

/// Refuses to emit a channel that is not certified.
fn require_sepp(report: &SeppReport) -> Result<()> {
    if report.is_sepp {
        return Ok(());
    }
    let w = &report.worst_case_robustness;
    if w.lower > report.delta + SEPP_TOL {
        Err(Error::NotSepp {
            robustness: w.lower,
            delta: report.delta,
        })
    } else {
        Err(Error::RelaxationGap(format!(
            "worst-case output robustness in [{:e}, {:e}] straddles δ = {}",
            w.lower, w.upper, report.delta
        )))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!("ε = {eps} outside [0, 1)")));
    }
    Ok(())
}

fn check_rank(m: usize) -> Result<()> {
    if m > MAX_RANK {
        return Err(Error::DimensionUnsupported {
            dims: vec![m, m],
            reason: format!("Schmidt rank above {MAX_RANK}"),
        });
    }
    Ok(())
}

/// `(I − Ψ_M)/(M² − 1)`.
fn mes_complement(m: usize) -> Result<DensityMatrix> {
    let n = m * m;
    let op = (linalg::identity(n) - linalg::mes_projector(m)) * real(1.0 / (n as f64 - 1.0));
    DensityMatrix::new(op, vec![m, m])
}

/// Distillation at rate `⌊E_min^ε⌋`: measure the optimal test `A`, prepare
/// `Ψ_M` on success and the isotropic complement otherwise.
pub fn build_distill(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<ProtocolOutcome> {
    check_eps(eps)?;
    let sol = measures::e_min_smooth_solution(rho, eps, &[], opts)?;
    let value = sol.value;
    let bits = if value.lower.is_finite() {
        ((value.lower + 1e-7).floor().max(0.0) as u32).min(MAX_RANK.trailing_zeros())
    } else {
        MAX_RANK.trailing_zeros()
    };
    let m = 1usize << bits;
    let channel = if m == 1 {
        MeasurePrepareChannel::replacer(rho.dims().to_vec(), quantum::max_entangled(1)?, Symmetry::None)?
    } else {
        MeasurePrepareChannel::two_branch(sol.effect, quantum::max_entangled(m)?, mes_complement(m)?, Symmetry::Isotropic)?
    };
    let out = apply(&channel, rho)?;
    let achieved_fidelity = out.expectation(&linalg::mes_projector(m));
    let sepp_report = verify_sepp(&channel, 0.0, opts)?;
    require_sepp(&sepp_report)?;
    let sandwich = Sandwich {
        lower: value.lower.floor(),
        upper: value.upper,
    };
    Ok(ProtocolOutcome {
        log_m: bits as f64,
        m,
        channel,
        achieved_fidelity,
        catalyst_k: None,
        sepp_report,
        measure: value,
        sandwich,
    })
}

/// Dilution at rate `log(1 + ⌈R(ρ_ε)⌉)`: test for `Ψ_M`, prepare `ρ_ε` on
/// success and the separable filler `π` otherwise.
pub fn build_dilute(rho: &DensityMatrix, eps: f64, opts: &Options) -> Result<ProtocolOutcome> {
    check_eps(eps)?;
    let sol = measures::lr_smooth_solution(rho, eps, opts)?;
    let noise = sol
        .witness
        .ok_or_else(|| Error::RelaxationGap("no certified separable noise for the smoothed state".into()))?;
    let s = linalg::trace(&noise).re;
    let m = 1 + (s - 1e-6).ceil().max(0.0) as usize;
    check_rank(m)?;
    let rho_eps = sol.state;
    let channel = if m == 1 {
        MeasurePrepareChannel::replacer(vec![1, 1], rho_eps.clone(), Symmetry::None)?
    } else {
        let pi = DensityMatrix::from_psd_operator(&noise, rho.dims().to_vec())?;
        let effect = Effect::new(linalg::mes_projector(m), vec![m, m])?;
        MeasurePrepareChannel::two_branch(effect, rho_eps.clone(), pi, Symmetry::None)?
    };
    let achieved_fidelity = quantum::fidelity(&apply(&channel, &quantum::max_entangled(m)?)?, rho)?;
    let sepp_report = verify_sepp(&channel, 0.0, opts)?;
    require_sepp(&sepp_report)?;
    let value = sol.value;
    let sandwich = Sandwich {
        lower: value.lower,
        upper: value.upper + 1.0,
    };
    Ok(ProtocolOutcome {
        log_m: (m as f64).log2(),
        m,
        channel,
        achieved_fidelity,
        catalyst_k: None,
        sepp_report,
        measure: value,
        sandwich,
    })
}

/// `K = ⌈1 + 1/δ⌉`.
pub fn catalyst_rank(delta: f64) -> Result<usize> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
    }
    Ok((1.0 + 1.0 / delta - 1e-12).ceil() as usize)
}

/// Catalytic dilution: consume `Ψ_M ⊗ Ψ_K`, return `ρ_ε ⊗ Ψ_K`.
///
/// The smoothed `E_max` of `ρ ⊗ Ψ_K` is solved in catalyst form; its state
/// gives `ρ_ε` and its certified separable operator `σ̂` (trace `T`) gives
/// the filler
/// `π = [((MK/T)S₁ − ρ_ε) ⊗ Ψ_K + (MK/T)S₂ ⊗ Φ_K] / (MK − 1)`,
/// which is `MK/T·σ̂` minus `ρ_ε ⊗ Ψ_K` and so has `R_G(π) ≤ 1/(MK − 1)`.
pub fn build_catalytic_dilute(rho: &DensityMatrix, eps: f64, delta: f64, opts: &Options) -> Result<ProtocolOutcome> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("catalytic dilution needs ε in (0, 1), got {eps}")));
    }
    let k = catalyst_rank(delta)?;
    let target = CatalystForm::product(rho, k)?;
    let sol = catalyst::e_max_smooth_form(&target, eps, opts)?;
    let t = sol.trace;
    let kf = k as f64;
    let m = ((t / (kf * (1.0 - eps)) - 1e-9).ceil() as usize).max(1);
    check_rank(m * k)?;
    let mk = (m * k) as f64;

    let r1 = &sol.state.x1;
    let rho_eps_op = r1 / real(linalg::trace(r1).re);
    let rho_eps = DensityMatrix::new(rho_eps_op.clone(), rho.dims().to_vec())?;
    let rho_dims = target.rho_dims;
    let scale = mk / t;
    let pi = CatalystForm {
        x1: (&sol.sigma.x1 * real(scale) - &rho_eps_op) / real(mk - 1.0),
        x2: &sol.sigma.x2 * real(scale / (mk - 1.0)),
        rho_dims,
        k,
    };
    let pi = DensityMatrix::from_psd_operator(&pi.to_operator(), target.full_dims())?;
    let first = CatalystForm::product(&rho_eps, k)?.to_state()?;
    let n_in = m * k;
    let effect = Effect::new(linalg::mes_projector(n_in), vec![n_in, n_in])?;
    let channel = MeasurePrepareChannel::two_branch(effect, first, pi, Symmetry::Catalyst { rho_dims, k })?;

    let achieved_fidelity = quantum::fidelity(&rho_eps, rho)?;
    let sepp_report = verify_sepp(&channel, delta, opts)?;
    require_sepp(&sepp_report)?;
    let value = sol.value;
    let log_k = kf.log2();
    let sandwich = Sandwich {
        lower: value.lower - log_k - (1.0 + delta).log2(),
        upper: value.upper - (1.0 - eps).log2() - log_k + 1.0,
    };
    Ok(ProtocolOutcome {
        log_m: (m as f64).log2(),
        m,
        channel,
        achieved_fidelity,
        catalyst_k: Some(k),
        sepp_report,
        measure: value,
        sandwich,
    })
}

/// `Ψ_M ⊗ Ψ_K` regrouped onto `[MK, MK]`: the input a catalytic channel
/// expects.
pub fn catalytic_input(m: usize, k: usize) -> Result<DensityMatrix> {
    quantum::max_entangled(m * k)
}

#[cfg(test)]
mod tests;
