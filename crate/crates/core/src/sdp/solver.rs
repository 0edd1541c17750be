//! Homogeneous self-dual interior-point method.
//!
//! The embedding
//!
//! ```text
//!  Aᵀy + Gᵀz + cτ = 0,   Ax − bτ = 0,   Gx + s − hτ = 0,
//!  κ + cᵀx + bᵀy + ⟨h, z⟩ = 0,          s, z ⪰ 0,  τ, κ ≥ 0
//! ```
//!
//! is followed from the start point `x = y = 0, s = z = I, τ = κ = 1` with
//! Mehrotra predictor-corrector steps. Complementarity is linearised in the
//! HKM form `dZ + sym(Z dS S⁻¹) = σμS⁻¹ − Z`, which gives the Schur
//! matrix `H_ij = Σ_blocks Tr(G_i Z G_j S⁻¹)`. The optimum is read off as
//! `x/τ`; a vanishing `τ` against growing `κ` yields an infeasibility
//! certificate.

use nalgebra::{DMatrix, DVector};

use super::{ConeBlock, Residuals, SdpProblem, SdpSolution, SolveStatus, SolverSettings};

type RMat = DMatrix<f64>;
type RVec = DVector<f64>;

const STEP_FRACTION: f64 = 0.98;
const REFINE_STEPS: usize = 2;
const NEAR_FEAS_FACTOR: f64 = 1e1;
const NEAR_GAP_FACTOR: f64 = 1e1;

fn inner(a: &[RMat], b: &[RMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn frob2(a: &[RMat]) -> f64 {
    a.iter().map(|x| x.norm_squared()).sum()
}

fn sym(m: RMat) -> RMat {
    let t = m.transpose();
    (m + t) * 0.5
}

/// `G(x)` per block.
fn g_apply(blocks: &[ConeBlock], x: &RVec) -> Vec<RMat> {
    blocks
        .iter()
        .map(|blk| {
            let mut out = RMat::zeros(blk.size, blk.size);
            for (var, entries) in &blk.coefficients {
                let xv = x[*var];
                if xv == 0.0 {
                    continue;
                }
                for &(r, c, v) in entries {
                    out[(r, c)] += xv * v;
                }
            }
            out
        })
        .collect()
}

/// `Gᵀ(Z)`.
fn gt_apply(blocks: &[ConeBlock], zs: &[RMat], n: usize) -> RVec {
    let mut out = RVec::zeros(n);
    for (blk, z) in blocks.iter().zip(zs) {
        for (var, entries) in &blk.coefficients {
            out[*var] += entries.iter().map(|&(r, c, v)| v * z[(r, c)]).sum::<f64>();
        }
    }
    out
}

/// Largest `α` with `x + α dx ⪰ 0` (may be infinite).
fn max_step(x: &RMat, dx: &RMat) -> f64 {
    if x.nrows() == 1 {
        return if dx[(0, 0)] < 0.0 {
            -x[(0, 0)] / dx[(0, 0)]
        } else {
            f64::INFINITY
        };
    }
    let m = match x.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            match l.solve_lower_triangular(dx).and_then(|w| l.solve_lower_triangular(&w.transpose())) {
                Some(m) => m,
                None => return max_step_eigen(x, dx),
            }
        }
        None => return max_step_eigen(x, dx),
    };
    let lo = sym(m).symmetric_eigenvalues().min();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

/// As [`max_step`] through `X^{-1/2}` from an eigendecomposition, for
/// iterates too close to singular for Cholesky.
fn max_step_eigen(x: &RMat, dx: &RMat) -> f64 {
    let eig = sym(x.clone()).symmetric_eigen();
    if !(eig.eigenvalues.min() > 0.0) {
        return 0.0;
    }
    let inv_sqrt = eig.eigenvalues.map(|v| 1.0 / v.sqrt());
    let q = &eig.eigenvectors;
    let scaled = q * RMat::from_diagonal(&inv_sqrt);
    let m = scaled.transpose() * dx * &scaled;
    let lo = sym(m).symmetric_eigenvalues().min();
    if lo >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lo
    }
}

fn inverse_spd(x: &RMat) -> Option<RMat> {
    if x.nrows() == 1 {
        let v = x[(0, 0)];
        return (v > 0.0).then(|| RMat::from_element(1, 1, 1.0 / v));
    }
    x.clone().cholesky().map(|c| sym(c.inverse()))
}

/// Factorised reduced KKT system `[H Aᵀ; A 0]`.
struct Kkt {
    n: usize,
    h: RMat,
    a: RMat,
    omega: f64,
    h_fact: Factor,
    /// `H̃⁻¹Aᵀ`
    hinv_at: RMat,
    schur: Option<Factor>,
}

enum Factor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Factor {
    fn new(m: RMat) -> Self {
        match m.clone().cholesky() {
            Some(c) => Factor::Chol(c),
            None => {
                // Regularise a nearly-singular system slightly before LU.
                let n = m.nrows();
                let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
                let mut reg = m.clone();
                for i in 0..n {
                    reg[(i, i)] += 1e-13 * scale;
                }
                match reg.clone().cholesky() {
                    Some(c) => Factor::Chol(c),
                    None => Factor::Lu(reg.lu()),
                }
            }
        }
    }

    fn solve(&self, rhs: &RMat) -> RMat {
        match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| RMat::zeros(rhs.nrows(), rhs.ncols())),
        }
    }

    fn solve_vec(&self, rhs: &RVec) -> RVec {
        match self {
            Factor::Chol(c) => c.solve(rhs),
            Factor::Lu(lu) => lu.solve(rhs).unwrap_or_else(|| RVec::zeros(rhs.len())),
        }
    }
}

impl Kkt {
    fn new(mut h: RMat, a: &RMat) -> Self {
        let n = h.nrows();
        let p = a.nrows();
        let diag_scale = (0..n).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1.0);
        let omega = if p > 0 { diag_scale } else { 0.0 };
        let plain = h.clone();
        if p > 0 {
            h += a.transpose() * a * omega;
        }
        let h_fact = Factor::new(h);
        let (hinv_at, schur) = if p > 0 {
            let hinv_at = h_fact.solve(&a.transpose());
            let s = sym(a * &hinv_at);
            (hinv_at, Some(Factor::new(s)))
        } else {
            (RMat::zeros(n, 0), None)
        };
        Self {
            n,
            h: plain,
            a: a.clone(),
            omega,
            h_fact,
            hinv_at,
            schur,
        }
    }

    /// Solves `H dx + Aᵀ dy = f`, `A dx = g`, with iterative refinement.
    fn solve(&self, f: &RVec, g: &RVec) -> (RVec, RVec) {
        let (mut dx, mut dy) = self.solve_once(f, g);
        for _ in 0..REFINE_STEPS {
            let rf = f - &self.h * &dx - self.a.transpose() * &dy;
            let rg = g - &self.a * &dx;
            let (cx, cy) = self.solve_once(&rf, &rg);
            if !cx.iter().chain(cy.iter()).all(|v| v.is_finite()) {
                break;
            }
            dx += cx;
            dy += cy;
        }
        (dx, dy)
    }

    fn solve_once(&self, f: &RVec, g: &RVec) -> (RVec, RVec) {
        let Some(schur) = &self.schur else {
            return (self.h_fact.solve_vec(f), RVec::zeros(0));
        };
        let f_aug = f + self.a.transpose() * g * self.omega;
        let hinv_f = self.h_fact.solve_vec(&f_aug);
        let rhs = &self.a * &hinv_f - g;
        let dy = schur.solve_vec(&rhs);
        let dx = hinv_f - &self.hinv_at * &dy;
        debug_assert_eq!(dx.len(), self.n);
        (dx, dy)
    }
}

struct Direction {
    dx: RVec,
    dy: RVec,
    dz: Vec<RMat>,
    ds: Vec<RMat>,
    dtau: f64,
    dkappa: f64,
}

/// Per-iteration scaling data.
struct Scaling<'a> {
    z: &'a [RMat],
    s_inv: Vec<RMat>,
}

impl Scaling<'_> {
    /// `E(V) = sym(Z V S⁻¹)` blockwise.
    fn apply(&self, v: &[RMat]) -> Vec<RMat> {
        v.iter()
            .zip(self.z)
            .zip(&self.s_inv)
            .map(|((v, z), si)| sym(z * v * si))
            .collect()
    }

    fn schur(&self, blocks: &[ConeBlock], n: usize) -> RMat {
        let mut h = RMat::zeros(n, n);
        for ((blk, z), si) in blocks.iter().zip(self.z).zip(&self.s_inv) {
            let nb = blk.size;
            let mut t = RMat::zeros(nb, nb);
            for (vj, ej) in &blk.coefficients {
                t.fill(0.0);
                for &(r, c, v) in ej {
                    for b in 0..nb {
                        let coef = v * si[(c, b)];
                        if coef != 0.0 {
                            t.column_mut(b).axpy(coef, &z.column(r), 1.0);
                        }
                    }
                }
                for (vi, ei) in &blk.coefficients {
                    let val: f64 = ei.iter().map(|&(r, c, v)| v * t[(c, r)]).sum();
                    h[(*vi, *vj)] += val;
                }
            }
        }
        sym(h)
    }
}

struct Snapshot {
    x: RVec,
    y: RVec,
    s: Vec<RMat>,
    z: Vec<RMat>,
    tau: f64,
    residuals: Residuals,
}

/// Loss of interior progress is common on problems without a strictly
/// feasible point; the last iterate is kept when it is close enough.
fn stalled_status(r: &Residuals, settings: &SolverSettings) -> SolveStatus {
    if r.primal <= NEAR_FEAS_FACTOR * settings.feas_tol
        && r.dual <= NEAR_FEAS_FACTOR * settings.feas_tol
        && r.gap <= NEAR_GAP_FACTOR * settings.gap_tol
    {
        SolveStatus::NearOptimal
    } else {
        SolveStatus::Stalled
    }
}

pub fn solve(p: &SdpProblem, settings: &SolverSettings) -> SdpSolution {
    let n = p.num_vars;
    let m_eq = p.a.nrows();
    let blocks = &p.blocks;
    let nu: f64 = blocks.iter().map(|b| b.size as f64).sum();
    let h: Vec<RMat> = blocks.iter().map(|b| b.h.clone()).collect();

    let mut x = RVec::zeros(n);
    let mut y = RVec::zeros(m_eq);
    let mut s: Vec<RMat> = blocks.iter().map(|b| RMat::identity(b.size, b.size)).collect();
    let mut z = s.clone();
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let bnorm = (p.b.norm_squared() + frob2(&h)).sqrt().max(1.0);
    let cnorm = p.c.norm().max(1.0);

    let mut status = SolveStatus::IterationLimit;
    let mut residuals = Residuals::default();
    let mut iterations = 0;
    let mut stalled = false;
    // Late iterations can lose accuracy; the best point seen is kept.
    let mut best: Option<(f64, Snapshot)> = None;

    for iter in 0..=settings.max_iter {
        iterations = iter;
        // residuals of the embedding
        let gx = g_apply(blocks, &x);
        let gtz = gt_apply(blocks, &z, n);
        let aty = p.a.transpose() * &y;
        let rx = &aty + &gtz + &p.c * tau;
        let ry = &p.a * &x - &p.b * tau;
        let rz: Vec<RMat> = gx
            .iter()
            .zip(&s)
            .zip(&h)
            .map(|((g, s), h)| g + s - h * tau)
            .collect();
        let hz = inner(&h, &z);
        let by = p.b.dot(&y);
        let cx = p.c.dot(&x);
        let rt = kappa + cx + by + hz;
        let sz = inner(&s, &z);
        let mu = (sz + tau * kappa) / (nu + 1.0);

        let pres = (ry.norm_squared() + frob2(&rz)).sqrt() / tau / bnorm;
        let dres = rx.norm() / tau / cnorm;
        let pobj = cx / tau + p.c0;
        let dobj = -(by + hz) / tau + p.c0;
        let gap = (pobj - dobj).abs().max(sz / (tau * tau));
        let relgap = gap / (1.0 + pobj.abs());
        residuals = Residuals {
            primal: pres,
            dual: dres,
            gap: relgap,
        };
        let merit = (pres / settings.feas_tol).max(dres / settings.feas_tol).max(relgap / settings.gap_tol);
        if best.as_ref().map_or(true, |(m, _)| merit < *m) {
            let snap = Snapshot {
                x: x.clone(),
                y: y.clone(),
                s: s.clone(),
                z: z.clone(),
                tau,
                residuals,
            };
            best = Some((merit, snap));
        }

        if pres <= settings.feas_tol && dres <= settings.feas_tol && relgap <= settings.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if hz + by < 0.0 {
            let pinf = (&aty + &gtz).norm() / cnorm / (-(hz + by));
            if pinf <= settings.feas_tol {
                status = SolveStatus::PrimalInfeasible;
                break;
            }
        }
        if cx < 0.0 {
            let ax = &p.a * &x;
            let gxs: Vec<RMat> = gx.iter().zip(&s).map(|(g, s)| g + s).collect();
            let dinf = (ax.norm_squared() + frob2(&gxs)).sqrt() / bnorm / (-cx);
            if dinf <= settings.feas_tol {
                status = SolveStatus::DualInfeasible;
                break;
            }
        }
        if iter == settings.max_iter {
            break;
        }

        let Some(s_inv) = s.iter().map(inverse_spd).collect::<Option<Vec<_>>>() else {
            stalled = true;
            break;
        };
        let scaling = Scaling { z: &z, s_inv };
        let kkt = Kkt::new(scaling.schur(blocks, n), &p.a);
        let e_h = scaling.apply(&h);
        let e_rz = scaling.apply(&rz);
        let f2 = -&p.c + gt_apply(blocks, &e_h, n);
        let (dx2, dy2) = kkt.solve(&f2, &p.b);
        let g_dx2 = g_apply(blocks, &dx2);
        // −κ/τ − ⟨u, E(u)⟩ with u = G dx₂ − h, which is what the expanded
        // expression −κ/τ + cᵀdx₂ + bᵀdy₂ − ⟨h, E h⟩ + ⟨E h, G dx₂⟩ reduces to;
        // the expanded form cancels badly near the optimum.
        let quad: f64 = g_dx2
            .iter()
            .zip(&h)
            .zip(z.iter().zip(&scaling.s_inv))
            .map(|((g, hj), (zj, si))| {
                let u = g - hj;
                (&u * zj * &u).component_mul(si).sum()
            })
            .sum();
        let denom = -kappa / tau - quad.max(0.0);

        let direction = |eta: f64, sigma_mu: f64, corr: Option<&Direction>| -> Direction {
            let r_c: Vec<RMat> = z
                .iter()
                .zip(&scaling.s_inv)
                .enumerate()
                .map(|(j, (zj, si))| {
                    let mut r = si * sigma_mu - zj;
                    if let Some(d) = corr {
                        r -= sym(&d.dz[j] * &d.ds[j] * si);
                    }
                    r
                })
                .collect();
            let r_kappa = sigma_mu - tau * kappa - corr.map_or(0.0, |d| d.dtau * d.dkappa);
            let base: Vec<RMat> = r_c.iter().zip(&e_rz).map(|(r, e)| r + e * eta).collect();
            let f1 = -&rx * eta - gt_apply(blocks, &base, n);
            let g1 = -&ry * eta;
            let (dx1, dy1) = kkt.solve(&f1, &g1);
            let g_dx1 = g_apply(blocks, &dx1);
            let num = -eta * rt - r_kappa / tau - p.c.dot(&dx1) - p.b.dot(&dy1) - inner(&h, &base)
                - inner(&e_h, &g_dx1);
            let dtau = num / denom;
            let dx = dx1 + &dx2 * dtau;
            let dy = dy1 + &dy2 * dtau;
            let g_dx = g_apply(blocks, &dx);
            let e_gdx = scaling.apply(&g_dx);
            let dz: Vec<RMat> = base
                .iter()
                .zip(&e_h)
                .zip(&e_gdx)
                .map(|((b, eh), eg)| b - eh * dtau + eg)
                .collect();
            let ds: Vec<RMat> = rz
                .iter()
                .zip(&h)
                .zip(&g_dx)
                .map(|((r, h), g)| -r * eta + h * dtau - g)
                .collect();
            let dkappa = (r_kappa - kappa * dtau) / tau;
            Direction {
                dx,
                dy,
                dz,
                ds,
                dtau,
                dkappa,
            }
        };

        let step_to_boundary = |d: &Direction| -> f64 {
            let mut a = f64::INFINITY;
            for (sj, dsj) in s.iter().zip(&d.ds) {
                a = a.min(max_step(sj, dsj));
            }
            for (zj, dzj) in z.iter().zip(&d.dz) {
                a = a.min(max_step(zj, dzj));
            }
            if d.dtau < 0.0 {
                a = a.min(-tau / d.dtau);
            }
            if d.dkappa < 0.0 {
                a = a.min(-kappa / d.dkappa);
            }
            a
        };

        let affine = direction(1.0, 0.0, None);
        let alpha_aff = step_to_boundary(&affine).min(1.0);
        let sz_aff: f64 = s
            .iter()
            .zip(&affine.ds)
            .zip(z.iter().zip(&affine.dz))
            .map(|((sj, dsj), (zj, dzj))| (sj + dsj * alpha_aff).dot(&(zj + dzj * alpha_aff)))
            .sum();
        let mu_aff = (sz_aff + (tau + alpha_aff * affine.dtau) * (kappa + alpha_aff * affine.dkappa))
            / (nu + 1.0);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        let combined = direction(1.0 - sigma, sigma * mu, Some(&affine));
        let alpha = (STEP_FRACTION * step_to_boundary(&combined)).min(1.0);
        let finite = combined.dtau.is_finite()
            && combined.dkappa.is_finite()
            && combined.dx.iter().all(|v| v.is_finite())
            && combined.dz.iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !finite || !(alpha >= 1e-12) {
            stalled = true;
            break;
        }
        x += &combined.dx * alpha;
        y += &combined.dy * alpha;
        for (sj, dsj) in s.iter_mut().zip(&combined.ds) {
            *sj = sym(&*sj + dsj * alpha);
        }
        for (zj, dzj) in z.iter_mut().zip(&combined.dz) {
            *zj = sym(&*zj + dzj * alpha);
        }
        tau += alpha * combined.dtau;
        kappa += alpha * combined.dkappa;
    }

    if stalled || status == SolveStatus::IterationLimit {
        if let Some((_, snap)) = best {
            Snapshot { x, y, s, z, tau, residuals, .. } = snap;
        }
        let near = stalled_status(&residuals, settings);
        if stalled || near == SolveStatus::NearOptimal {
            status = near;
        }
    }

    let scale = match status {
        SolveStatus::PrimalInfeasible => -1.0 / (inner(&h, &z) + p.b.dot(&y)),
        SolveStatus::DualInfeasible => -1.0 / p.c.dot(&x),
        _ => 1.0 / tau,
    };
    let x = x * scale;
    let y = y * scale;
    let z: Vec<RMat> = z.into_iter().map(|m| m * scale).collect();
    let s: Vec<RMat> = s.into_iter().map(|m| m * scale).collect();
    let primal_value = p.c.dot(&x) + p.c0;
    let dual_value = -(p.b.dot(&y) + inner(&h, &z)) + p.c0;
    SdpSolution {
        status,
        primal_value,
        dual_value,
        x,
        y,
        z,
        s,
        residuals,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_1x1(h: f64, coefficients: Vec<(usize, f64)>) -> ConeBlock {
        ConeBlock {
            size: 1,
            h: RMat::from_element(1, 1, h),
            coefficients: coefficients.into_iter().map(|(v, c)| (v, vec![(0, 0, c)])).collect(),
        }
    }

    #[test]
    fn linear_program() {
        // min -x0 - x1  s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x >= 0
        let mut p = SdpProblem::new(2);
        p.c = RVec::from_vec(vec![-1.0, -1.0]);
        p.blocks = vec![
            block_1x1(4.0, vec![(0, 1.0), (1, 2.0)]),
            block_1x1(6.0, vec![(0, 3.0), (1, 1.0)]),
            block_1x1(0.0, vec![(0, -1.0)]),
            block_1x1(0.0, vec![(1, -1.0)]),
        ];
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value + 2.8).abs() < 1e-7, "{}", sol.primal_value);
        assert!((sol.x[0] - 1.6).abs() < 1e-6 && (sol.x[1] - 1.2).abs() < 1e-6);
    }

    #[test]
    fn eigenvalue_bound() {
        // min t  s.t.  t I − diag(1, 2) ⪰ 0   ⇔   diag(1,2) − t I ⪯ 0
        let mut p = SdpProblem::new(1);
        p.c[0] = 1.0;
        p.blocks.push(ConeBlock {
            size: 2,
            h: RMat::from_diagonal(&RVec::from_vec(vec![-1.0, -2.0])),
            coefficients: vec![(0, vec![(0, 0, -1.0), (1, 1, -1.0)])],
        });
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 2.0).abs() < 1e-7);
        assert!(sol.gap() <= 1e-7 * (1.0 + sol.primal_value.abs()));
    }

    #[test]
    fn equality_with_unboxed_variable() {
        // min s s.t. s = x0, x0 >= 3
        let mut p = SdpProblem::new(2);
        p.c[1] = 1.0;
        p.a = RMat::from_row_slice(1, 2, &[1.0, -1.0]);
        p.b = RVec::zeros(1);
        p.blocks.push(block_1x1(-3.0, vec![(0, -1.0)]));
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn detects_infeasibility() {
        // x >= 1 and x <= 0
        let mut p = SdpProblem::new(1);
        p.c[0] = 1.0;
        p.blocks = vec![block_1x1(-1.0, vec![(0, -1.0)]), block_1x1(0.0, vec![(0, 1.0)])];
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min x s.t. x <= 0
        let mut p = SdpProblem::new(1);
        p.c[0] = 1.0;
        p.blocks = vec![block_1x1(0.0, vec![(0, 1.0)])];
        let sol = solve(&p, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::DualInfeasible);
    }
}
