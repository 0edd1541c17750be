//! The separable set: PPT tests, linear optimisation over separable states
//! and explicit inner certificates.
//!
//! Upper (outer) values come from the PPT relaxation. Lower (inner) values
//! come from explicitly separable points: pure product states found by
//! see-saw, or PSD operators shifted by a multiple of the identity until a
//! sufficient separability test passes (see [`SepMode`]).

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, real, CMat, CVec, C64};
use crate::quantum::{Bipartition, DensityMatrix, Effect};
use crate::sdp::{Model, SolveMeta};
use crate::Options;

/// Negative-eigenvalue tolerance of [`ppt_check`].
pub const PPT_TOL: f64 = 1e-9;

/// Tolerance for recognising `U ⊗ U*`-invariant operators.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Whether PPT coincides with separability for these factor dims.
pub fn ppt_is_exact(dims: &[usize]) -> bool {
    match dims {
        [a, b] => a.min(b) <= &1 || a * b <= 6,
        _ => dims.iter().filter(|&&d| d > 1).count() <= 1,
    }
}

/// `m` is invariant under the `U ⊗ U*` twirl on two equal factors.
pub fn is_isotropic(m: &CMat, dims: &[usize]) -> bool {
    if dims.len() != 2 || dims[0] != dims[1] || dims[0] < 2 {
        return false;
    }
    let twirled = linalg::twirl_pair(m, dims, 0, 1);
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    linalg::max_abs_diff(&twirled, m) <= SYMMETRY_TOL * scale
}

/// Components `(a, b)` of `a·Ψ_d + b·(I − Ψ_d)`; exact for isotropic input.
pub fn isotropic_components(m: &CMat, d: usize) -> (f64, f64) {
    let psi = linalg::mes_projector(d);
    let a = linalg::trace_product(m, &psi).re;
    let total = linalg::trace(m).re;
    (a, (total - a) / ((d * d) as f64 - 1.0))
}

/// Which sufficient test turns a PPT-feasible operator into a certified
/// separable one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SepMode {
    /// PPT is exact: shift until PSD and PPT.
    Exact,
    /// `d ⊗ d` with `U ⊗ U*` symmetry: twirl, then use the isotropic
    /// threshold `Tr(XΨ) ≤ Tr(X)/d`.
    Isotropic(usize),
    /// Bipartite without symmetry: shift into the separable ball around the
    /// maximally mixed state.
    Ball,
    /// No inner certificate available.
    Unavailable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Psd,
    Sep,
}

impl SepMode {
    /// `symmetric` states that the optimisation problem at hand commutes with
    /// the `U ⊗ U*` twirl.
    pub fn for_dims(dims: &[usize], symmetric: bool) -> SepMode {
        if ppt_is_exact(dims) {
            SepMode::Exact
        } else if symmetric && dims.len() == 2 && dims[0] == dims[1] {
            SepMode::Isotropic(dims[0])
        } else if dims.len() == 2 {
            SepMode::Ball
        } else {
            SepMode::Unavailable
        }
    }

    /// Exact modes yield brackets that close up to solver accuracy.
    pub fn is_exact(&self) -> bool {
        matches!(self, SepMode::Exact | SepMode::Isotropic(_))
    }

    pub fn symmetrize(&self, m: &CMat, dims: &[usize]) -> CMat {
        match self {
            SepMode::Isotropic(_) => linalg::twirl_pair(m, dims, 0, 1),
            _ => m.clone(),
        }
    }

    /// Smallest `t ≥ 0` such that `b + t·I` lies in `cone`, by this mode's
    /// test. Infinite if no test is available.
    pub fn shift(&self, b: &CMat, dims: &[usize], cone: Cone) -> f64 {
        let psd_need = (-linalg::min_eigenvalue(b)).max(0.0);
        if cone == Cone::Psd {
            return psd_need;
        }
        match *self {
            SepMode::Exact => {
                let mut need = psd_need;
                for cut in Bipartition::single_factor_cuts(dims.len()) {
                    let pt = linalg::partial_transpose(b, dims, cut.factors());
                    need = need.max(-linalg::min_eigenvalue(&pt));
                }
                need
            }
            SepMode::Isotropic(d) => {
                let (a, bb) = isotropic_components(b, d);
                // a + t ≤ (d + 1)(b + t)  ⇔  t ≥ (a − (d+1)b)/d
                (-a).max(-bb).max((a - (d as f64 + 1.0) * bb) / d as f64).max(0.0)
            }
            SepMode::Ball => {
                let n = b.nrows() as f64;
                let tr = linalg::trace(b).re;
                let centered = b - linalg::identity(b.nrows()) * real(tr / n);
                let dist = centered.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let radius = 1.0 / (n * (n - 1.0)).sqrt();
                ((dist / radius - tr) / n).max(0.0)
            }
            SepMode::Unavailable => f64::INFINITY,
        }
    }

    /// Smallest `t` with `b_k + t·c_k·I` in `cone_k` for every item.
    pub fn joint_shift(&self, items: &[(CMat, f64, Cone)], dims: &[usize]) -> f64 {
        items
            .iter()
            .map(|(b, c, cone)| self.shift(b, dims, *cone) / c)
            .fold(0.0, f64::max)
    }
}

/// PSD test of every partial transpose; returns the per-cut minimum
/// eigenvalue alongside.
pub fn ppt_check(rho: &DensityMatrix, cuts: Option<&[Bipartition]>) -> Result<(bool, Vec<f64>)> {
    let default = Bipartition::single_factor_cuts(rho.dims().len());
    let cuts = cuts.unwrap_or(&default);
    let mut mins = Vec::with_capacity(cuts.len());
    for cut in cuts {
        let pt = crate::quantum::partial_transpose(rho, cut)?;
        mins.push(linalg::min_eigenvalue(&pt));
    }
    Ok((mins.iter().all(|&v| v >= -PPT_TOL), mins))
}

/// Exact membership test; only where PPT is exact.
pub fn sep_membership_exact(rho: &DensityMatrix) -> Result<bool> {
    if !ppt_is_exact(rho.dims()) {
        return Err(Error::DimensionUnsupported {
            dims: rho.dims().to_vec(),
            reason: "PPT is exact only for 2⊗2 and 2⊗3".into(),
        });
    }
    Ok(ppt_check(rho, None)?.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct SepOptResult {
    /// Maximum over the PPT relaxation.
    pub ppt_value: f64,
    /// Best value attained by an explicit product state.
    pub heuristic_value: f64,
    /// Optimiser of the relaxation.
    #[serde(skip)]
    pub witness: CMat,
    /// The explicit product state achieving `heuristic_value`.
    #[serde(skip)]
    pub product_point: DensityMatrix,
    pub exact: bool,
    pub meta: SolveMeta,
}

/// `max Tr(Aσ)` over separable states, bracketed.
pub fn max_linear_over_sep(
    a: &Effect,
    cuts: Option<&[Bipartition]>,
    opts: &Options,
) -> Result<SepOptResult> {
    let dims = a.dims().to_vec();
    if is_isotropic(a.matrix(), &dims) {
        return Ok(isotropic_max(a.matrix(), dims[0]));
    }
    let default = Bipartition::single_factor_cuts(dims.len());
    let cuts = cuts.unwrap_or(&default);
    let n = a.matrix().nrows();

    let mut model = Model::new();
    let sigma = model.herm_var(n);
    model.psd(&sigma);
    for cut in cuts {
        model.psd(&sigma.partial_transpose(&dims, cut.factors()));
    }
    model.eq(&sigma.trace(), 1.0);
    model.maximize(&sigma.trace_with(a.matrix()).0);
    let mut meta = SolveMeta::default();
    let sol = crate::sdp::solve_model(&model, opts, &mut meta)?;
    let ppt_value = -sol.primal_value();
    let witness = sol.value(&sigma);

    let (heuristic_value, factors) = seesaw_product_max(a.matrix(), &dims, opts.restarts, opts.seed);
    let product_point = product_state(&factors, &dims)?;
    let exact = ppt_is_exact(&dims);
    debug!("max over SEP: ppt {ppt_value:.10} seesaw {heuristic_value:.10}");
    Ok(SepOptResult {
        ppt_value: ppt_value.max(heuristic_value),
        heuristic_value,
        witness,
        product_point,
        exact,
        meta,
    })
}

/// `max Tr(Aσ)` for `A = aΨ + b(I−Ψ)` is `max(b, a/d + b(1 − 1/d))`, reached
/// by `|0⟩|1⟩` or `|0⟩|0⟩`.
fn isotropic_max(a: &CMat, d: usize) -> SepOptResult {
    let (ca, cb) = isotropic_components(a, d);
    let aligned = ca / d as f64 + cb * (1.0 - 1.0 / d as f64);
    let (value, index) = if cb > aligned { (cb, 1) } else { (aligned, 0) };
    let product_point = crate::quantum::basis_state(vec![d, d], index).expect("index in range");
    let witness = product_point.matrix().clone();
    SepOptResult {
        ppt_value: value,
        heuristic_value: value,
        witness,
        product_point,
        exact: true,
        meta: SolveMeta::default(),
    }
}

/// Tensor product of normalised kets.
pub fn product_state(factors: &[CVec], dims: &[usize]) -> Result<DensityMatrix> {
    let mut psi = CVec::from_element(1, real(1.0));
    for f in factors {
        psi = psi.kronecker(f);
    }
    DensityMatrix::pure(&psi, dims.to_vec())
}

fn random_ket(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    let v = CVec::from_fn(d, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = v.norm();
    v / real(norm)
}

/// Operator `W` of size `D × d_j` whose columns are the product kets with
/// factor `j` set to each basis vector.
fn slot_basis(factors: &[CVec], j: usize) -> CMat {
    let dj = factors[j].len();
    let mut cols = Vec::with_capacity(dj);
    for k in 0..dj {
        let mut psi = CVec::from_element(1, real(1.0));
        for (i, f) in factors.iter().enumerate() {
            let piece = if i == j {
                let mut e = CVec::zeros(dj);
                e[k] = real(1.0);
                e
            } else {
                f.clone()
            };
            psi = psi.kronecker(&piece);
        }
        cols.push(psi);
    }
    CMat::from_columns(&cols)
}

fn product_value(a: &CMat, factors: &[CVec]) -> f64 {
    let mut psi = CVec::from_element(1, real(1.0));
    for f in factors {
        psi = psi.kronecker(f);
    }
    (psi.adjoint() * a * &psi)[(0, 0)].re
}

fn seesaw_run(a: &CMat, dims: &[usize], seed: u64) -> (f64, Vec<CVec>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<CVec> = dims.iter().map(|&d| random_ket(&mut rng, d)).collect();
    let mut value = product_value(a, &factors);
    for _ in 0..1000 {
        for j in 0..dims.len() {
            let w = slot_basis(&factors, j);
            let contracted = w.adjoint() * a * &w;
            let (_, vecs) = linalg::eigh(&contracted);
            factors[j] = vecs.column(dims[j] - 1).clone_owned();
        }
        let next = product_value(a, &factors);
        let done = (next - value).abs() < 1e-10;
        value = next;
        if done {
            break;
        }
    }
    (value, factors)
}

/// Alternating maximisation of `⟨v|A|v⟩` over product kets
/// `|v⟩ = |v_0⟩ ⊗ |v_1⟩ ⊗ ...`; best of `restarts` seeded starts.
pub fn seesaw_product_max(a: &CMat, dims: &[usize], restarts: usize, seed: u64) -> (f64, Vec<CVec>) {
    let runs: Vec<(f64, Vec<CVec>)> = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| seesaw_run(a, dims, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(r)))
        .collect();
    runs.into_iter()
        .reduce(|best, next| if next.0 > best.0 { next } else { best })
        .expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{isotropic, max_entangled};

    fn opts() -> Options {
        Options::default()
    }

    #[test]
    fn ppt_check_examples() {
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(ppt_check(&mixed, None).unwrap().0);
        let (ok, mins) = ppt_check(&max_entangled(2).unwrap(), None).unwrap();
        assert!(!ok);
        assert!((mins[0] + 0.5).abs() < 1e-12);
        assert!(ppt_check(&isotropic(2, 0.5).unwrap(), None).unwrap().0);
    }

    #[test]
    fn membership() {
        assert!(!sep_membership_exact(&max_entangled(2).unwrap()).unwrap());
        assert!(!sep_membership_exact(&isotropic(2, 0.6).unwrap()).unwrap());
        assert!(sep_membership_exact(&isotropic(2, 0.4).unwrap()).unwrap());
        assert!(sep_membership_exact(&max_entangled(3).unwrap()).is_err());
    }

    #[test]
    fn linear_max_on_odd_parity_subspace() {
        // Π onto span{|01⟩, |10⟩} contains the product ket |01⟩.
        let mut pi = CMat::zeros(4, 4);
        pi[(1, 1)] = real(1.0);
        pi[(2, 2)] = real(1.0);
        let eff = Effect::new(pi, vec![2, 2]).unwrap();
        let r = max_linear_over_sep(&eff, None, &opts()).unwrap();
        assert!((r.ppt_value - 1.0).abs() < 1e-7, "{}", r.ppt_value);
        assert!((r.heuristic_value - 1.0).abs() < 1e-9);
        assert!(r.exact);
    }

    #[test]
    fn linear_max_on_triplet_ket() {
        // |ψ⟩ = (|01⟩ + |10⟩)/√2 has Schmidt coefficients (1/2, 1/2).
        let mut pi = CMat::zeros(4, 4);
        for &(r, c) in &[(1, 1), (1, 2), (2, 1), (2, 2)] {
            pi[(r, c)] = real(0.5);
        }
        let eff = Effect::new(pi, vec![2, 2]).unwrap();
        let r = max_linear_over_sep(&eff, None, &opts()).unwrap();
        assert!((r.ppt_value - 0.5).abs() < 1e-7, "{}", r.ppt_value);
        assert!((r.heuristic_value - 0.5).abs() < 1e-7);
        assert!((r.product_point.expectation(eff.matrix()) - r.heuristic_value).abs() < 1e-12);
    }

    #[test]
    fn linear_max_isotropic_closed_form() {
        let psi = Effect::new(linalg::mes_projector(3), vec![3, 3]).unwrap();
        let r = max_linear_over_sep(&psi, None, &opts()).unwrap();
        assert!((r.ppt_value - 1.0 / 3.0).abs() < 1e-12);
        let r = max_linear_over_sep(&psi.complement(), None, &opts()).unwrap();
        assert!((r.ppt_value - 1.0).abs() < 1e-12);
        assert!((r.product_point.expectation(psi.complement().matrix()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seesaw_examples() {
        let (v, _) = seesaw_product_max(&linalg::mes_projector(2), &[2, 2], 8, 1);
        assert!((v - 0.5).abs() < 1e-9);
        let mut p00 = CMat::zeros(4, 4);
        p00[(0, 0)] = real(1.0);
        let (v, f) = seesaw_product_max(&p00, &[2, 2], 8, 1);
        assert!((v - 1.0).abs() < 1e-9);
        assert!((f[0][0].norm() - 1.0).abs() < 1e-6);
        let comp = linalg::identity(4) - linalg::mes_projector(2);
        assert!((seesaw_product_max(&comp, &[2, 2], 8, 1).0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shift_modes_certify() {
        let psi = linalg::mes_projector(2);
        let t = SepMode::Exact.shift(&psi, &[2, 2], Cone::Sep);
        assert!((t - 0.5).abs() < 1e-9);
        let t_iso = SepMode::Isotropic(2).shift(&psi, &[2, 2], Cone::Sep);
        // (1 + t) ≤ 3t  ⇒  t = 1/2
        assert!((t_iso - 0.5).abs() < 1e-12);
        let t_ball = SepMode::Ball.shift(&psi, &[2, 2], Cone::Sep);
        assert!(t_ball >= t - 1e-12);
        let shifted = &psi + linalg::identity(4) * real(t_ball);
        let n = shifted.clone() / linalg::trace(&shifted);
        let off = n - linalg::identity(4) * real(0.25);
        let dist = off.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(dist <= 1.0 / 12f64.sqrt() + 1e-12);
    }
}
