//! Affine expressions in complex matrix variables and their compilation to
//! an [`SdpProblem`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{ConeBlock, Entry, SdpProblem, SdpSolution, SolverSettings};
use crate::error::{Error, Result};
use crate::quantum::linalg::{self, real, CMat, C64};

/// `constant + Σ x_i · term_i` with real scalar variables `x_i`.
#[derive(Clone, Debug)]
pub struct MatExpr {
    rows: usize,
    cols: usize,
    constant: CMat,
    terms: BTreeMap<usize, CMat>,
}

/// Real affine scalar `constant + Σ x_i · coef_i`.
#[derive(Clone, Debug, Default)]
pub struct ScalarExpr {
    constant: f64,
    terms: BTreeMap<usize, f64>,
}

impl ScalarExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: BTreeMap::new(),
        }
    }

    fn var(index: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(index, 1.0);
        Self {
            constant: 0.0,
            terms,
        }
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (&k, &v) in &other.terms {
            *out.terms.entry(k).or_insert(0.0) += v;
        }
        out
    }

    pub fn sub(&self, other: &ScalarExpr) -> ScalarExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, factor: f64) -> ScalarExpr {
        ScalarExpr {
            constant: self.constant * factor,
            terms: self.terms.iter().map(|(&k, &v)| (k, v * factor)).collect(),
        }
    }

    pub fn plus(&self, value: f64) -> ScalarExpr {
        let mut out = self.clone();
        out.constant += value;
        out
    }
}

impl MatExpr {
    pub fn constant(m: CMat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            constant: m,
            terms: BTreeMap::new(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(CMat::zeros(rows, cols))
    }

    /// `s · I_n`.
    pub fn identity_times(n: usize, s: &ScalarExpr) -> Self {
        Self::scalar_times(s, &linalg::identity(n))
    }

    /// `s · M` for a constant matrix `M`.
    pub fn scalar_times(s: &ScalarExpr, m: &CMat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            constant: m * real(s.constant),
            terms: s.terms.iter().map(|(&k, &v)| (k, m * real(v))).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn map(&self, f: impl Fn(&CMat) -> CMat) -> MatExpr {
        let constant = f(&self.constant);
        MatExpr {
            rows: constant.nrows(),
            cols: constant.ncols(),
            terms: self.terms.iter().map(|(&k, m)| (k, f(m))).collect(),
            constant,
        }
    }

    pub fn add(&self, other: &MatExpr) -> MatExpr {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in MatExpr::add");
        let mut out = self.clone();
        out.constant += &other.constant;
        for (&k, m) in &other.terms {
            match out.terms.get_mut(&k) {
                Some(existing) => *existing += m,
                None => {
                    out.terms.insert(k, m.clone());
                }
            }
        }
        out
    }

    pub fn sub(&self, other: &MatExpr) -> MatExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, m: &CMat) -> MatExpr {
        let mut out = self.clone();
        out.constant += m;
        out
    }

    pub fn scale(&self, factor: f64) -> MatExpr {
        self.map(|m| m * real(factor))
    }

    pub fn adjoint(&self) -> MatExpr {
        self.map(|m| m.adjoint())
    }

    pub fn partial_transpose(&self, dims: &[usize], subset: &[usize]) -> MatExpr {
        self.map(|m| linalg::partial_transpose(m, dims, subset))
    }

    /// `X ⊗ C`.
    pub fn kron_right(&self, c: &CMat) -> MatExpr {
        self.map(|m| linalg::kron(m, c))
    }

    /// `Tr(C X)` as (real part, imaginary part).
    pub fn trace_with(&self, c: &CMat) -> (ScalarExpr, ScalarExpr) {
        let t0 = linalg::trace_product(c, &self.constant);
        let mut re = ScalarExpr::constant(t0.re);
        let mut im = ScalarExpr::constant(t0.im);
        for (&k, m) in &self.terms {
            let t = linalg::trace_product(c, m);
            if t.re != 0.0 {
                re.terms.insert(k, t.re);
            }
            if t.im != 0.0 {
                im.terms.insert(k, t.im);
            }
        }
        (re, im)
    }

    /// Real part of the trace.
    pub fn trace(&self) -> ScalarExpr {
        self.trace_with(&linalg::identity(self.rows)).0
    }

    /// `[[a, b], [c, d]]`.
    pub fn block2(a: &MatExpr, b: &MatExpr, c: &MatExpr, d: &MatExpr) -> MatExpr {
        let (r0, c0) = a.shape();
        let (r1, c1) = d.shape();
        assert_eq!(b.shape(), (r0, c1));
        assert_eq!(c.shape(), (r1, c0));
        let place = |m: Option<&CMat>, into: &mut CMat, at: (usize, usize)| {
            if let Some(m) = m {
                into.view_mut(at, m.shape()).copy_from(m);
            }
        };
        let assemble = |pa: Option<&CMat>, pb: Option<&CMat>, pc: Option<&CMat>, pd: Option<&CMat>| {
            let mut out = CMat::zeros(r0 + r1, c0 + c1);
            place(pa, &mut out, (0, 0));
            place(pb, &mut out, (0, c0));
            place(pc, &mut out, (r0, 0));
            place(pd, &mut out, (r0, c0));
            out
        };
        let constant = assemble(Some(&a.constant), Some(&b.constant), Some(&c.constant), Some(&d.constant));
        let mut keys: Vec<usize> = Vec::new();
        for e in [a, b, c, d] {
            keys.extend(e.terms.keys());
        }
        keys.sort_unstable();
        keys.dedup();
        let terms = keys
            .into_iter()
            .map(|k| {
                (
                    k,
                    assemble(a.terms.get(&k), b.terms.get(&k), c.terms.get(&k), d.terms.get(&k)),
                )
            })
            .collect();
        MatExpr {
            rows: r0 + r1,
            cols: c0 + c1,
            constant,
            terms,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(usize);

#[derive(Clone, Debug)]
struct BlockInfo {
    complex_side: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Model {
    num_vars: usize,
    objective: ScalarExpr,
    equalities: Vec<ScalarExpr>,
    blocks: Vec<ConeBlock>,
    info: Vec<BlockInfo>,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn fresh(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn scalar_var(&mut self) -> ScalarExpr {
        let k = self.fresh();
        ScalarExpr::var(k)
    }

    /// Hermitian `n×n` variable with `n²` real parameters.
    pub fn herm_var(&mut self, n: usize) -> MatExpr {
        let mut terms = BTreeMap::new();
        for i in 0..n {
            let mut m = CMat::zeros(n, n);
            m[(i, i)] = real(1.0);
            terms.insert(self.fresh(), m);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let mut re = CMat::zeros(n, n);
                re[(i, j)] = real(1.0);
                re[(j, i)] = real(1.0);
                terms.insert(self.fresh(), re);
                let mut im = CMat::zeros(n, n);
                im[(i, j)] = C64::new(0.0, 1.0);
                im[(j, i)] = C64::new(0.0, -1.0);
                terms.insert(self.fresh(), im);
            }
        }
        MatExpr {
            rows: n,
            cols: n,
            constant: CMat::zeros(n, n),
            terms,
        }
    }

    /// General complex `rows×cols` variable.
    pub fn complex_var(&mut self, rows: usize, cols: usize) -> MatExpr {
        let mut terms = BTreeMap::new();
        for i in 0..rows {
            for j in 0..cols {
                let mut re = CMat::zeros(rows, cols);
                re[(i, j)] = real(1.0);
                terms.insert(self.fresh(), re);
                let mut im = CMat::zeros(rows, cols);
                im[(i, j)] = C64::new(0.0, 1.0);
                terms.insert(self.fresh(), im);
            }
        }
        MatExpr {
            rows,
            cols,
            constant: CMat::zeros(rows, cols),
            terms,
        }
    }

    /// `Σ_k x_k · basis_k` with one fresh real variable per basis matrix.
    pub fn real_span(&mut self, basis: &[CMat]) -> MatExpr {
        assert!(!basis.is_empty());
        let (rows, cols) = basis[0].shape();
        let terms = basis.iter().map(|b| (self.fresh(), b.clone())).collect();
        MatExpr {
            rows,
            cols,
            constant: CMat::zeros(rows, cols),
            terms,
        }
    }

    /// `expr ⪰ 0` for a Hermitian expression.
    pub fn psd(&mut self, expr: &MatExpr) -> BlockId {
        assert_eq!(expr.rows, expr.cols, "PSD constraint on a non-square expression");
        let n = expr.rows;
        let mut coefficients = Vec::with_capacity(expr.terms.len());
        for (&k, m) in &expr.terms {
            let g = linalg::real_embedding(m);
            let entries: Vec<Entry> = (0..2 * n)
                .flat_map(|r| (0..2 * n).map(move |c| (r, c)))
                .filter_map(|(r, c)| {
                    let v = g[(r, c)];
                    (v != 0.0).then_some((r, c, -v))
                })
                .collect();
            if !entries.is_empty() {
                coefficients.push((k, entries));
            }
        }
        self.blocks.push(ConeBlock {
            size: 2 * n,
            h: linalg::real_embedding(&expr.constant),
            coefficients,
        });
        self.info.push(BlockInfo {
            complex_side: Some(n),
        });
        BlockId(self.blocks.len() - 1)
    }

    /// `expr ≥ 0`.
    pub fn nonneg(&mut self, expr: &ScalarExpr) -> BlockId {
        self.blocks.push(ConeBlock {
            size: 1,
            h: DMatrix::from_element(1, 1, expr.constant),
            coefficients: expr
                .terms
                .iter()
                .filter(|(_, &v)| v != 0.0)
                .map(|(&k, &v)| (k, vec![(0, 0, -v)]))
                .collect(),
        });
        self.info.push(BlockInfo { complex_side: None });
        BlockId(self.blocks.len() - 1)
    }

    /// `expr = 0`.
    pub fn eq_zero(&mut self, expr: &ScalarExpr) {
        self.equalities.push(expr.clone());
    }

    /// `expr = value`.
    pub fn eq(&mut self, expr: &ScalarExpr, value: f64) {
        self.equalities.push(expr.plus(-value));
    }

    pub fn minimize(&mut self, expr: &ScalarExpr) {
        self.objective = expr.clone();
    }

    pub fn maximize(&mut self, expr: &ScalarExpr) {
        self.objective = expr.scale(-1.0);
    }

    pub fn to_problem(&self) -> SdpProblem {
        let n = self.num_vars;
        let mut p = SdpProblem::new(n);
        for (&k, &v) in &self.objective.terms {
            p.c[k] = v;
        }
        p.c0 = self.objective.constant;
        let m = self.equalities.len();
        p.a = DMatrix::zeros(m, n);
        p.b = DVector::zeros(m);
        for (row, e) in self.equalities.iter().enumerate() {
            for (&k, &v) in &e.terms {
                p.a[(row, k)] = v;
            }
            p.b[row] = -e.constant;
        }
        p.blocks = self.blocks.clone();
        p
    }

    /// Solves and requires optimality.
    pub fn solve(&self, settings: &SolverSettings) -> Result<ModelSolution> {
        let sol = self.solve_any(settings);
        if !sol.raw.is_optimal() {
            return Err(Error::Solver {
                status: sol.raw.status,
                iterations: sol.raw.iterations,
                gap: sol.raw.residuals.gap,
            });
        }
        Ok(sol)
    }

    /// Solves and returns whatever status was reached.
    pub fn solve_any(&self, settings: &SolverSettings) -> ModelSolution {
        let problem = self.to_problem();
        let raw = super::solve(&problem, settings);
        ModelSolution {
            raw,
            info: self.info.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelSolution {
    pub raw: SdpSolution,
    info: Vec<BlockInfo>,
}

impl ModelSolution {
    pub fn value(&self, expr: &MatExpr) -> CMat {
        let mut out = expr.constant.clone();
        for (&k, m) in &expr.terms {
            out += m * real(self.raw.x[k]);
        }
        out
    }

    pub fn scalar(&self, expr: &ScalarExpr) -> f64 {
        expr.constant + expr.terms.iter().map(|(&k, &v)| v * self.raw.x[k]).sum::<f64>()
    }

    /// Dual matrix of a PSD constraint, mapped back to Hermitian form so that
    /// the Lagrangian term reads `Tr(W · expr)`.
    pub fn dual(&self, id: BlockId) -> CMat {
        let z = &self.raw.z[id.0];
        match self.info[id.0].complex_side {
            Some(_) => linalg::real_embedding_adjoint(z),
            None => CMat::from_element(1, 1, real(z[(0, 0)])),
        }
    }

    pub fn primal_value(&self) -> f64 {
        self.raw.primal_value
    }

    pub fn dual_value(&self) -> f64 {
        self.raw.dual_value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::mes_projector;
    use crate::sdp::SolveStatus;

    #[test]
    fn ppt_maximum_of_bell_overlap_is_half() {
        let mut model = Model::new();
        let sigma = model.herm_var(4);
        model.psd(&sigma);
        model.psd(&sigma.partial_transpose(&[2, 2], &[1]));
        model.eq(&sigma.trace(), 1.0);
        model.maximize(&sigma.trace_with(&mes_projector(2)).0);
        let sol = model.solve(&SolverSettings::default()).unwrap();
        assert!((-sol.primal_value() - 0.5).abs() < 1e-7, "{}", sol.primal_value());
        assert!(sol.raw.gap() <= 1e-7 * (1.0 + sol.primal_value().abs()));
        let s = sol.value(&sigma);
        assert!((linalg::trace(&s).re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn trace_minus_one_is_infeasible() {
        let mut model = Model::new();
        let x = model.herm_var(2);
        model.psd(&x);
        model.eq(&x.trace(), -1.0);
        let sol = model.solve_any(&SolverSettings::default());
        assert_eq!(sol.raw.status, SolveStatus::PrimalInfeasible);
    }

    #[test]
    fn fidelity_block_recovers_root_fidelity() {
        // max Re Tr X s.t. [[ρ, X], [X†, σ]] ⪰ 0 equals √F(ρ, σ). A full-rank
        // ρ keeps the block strictly feasible.
        let rho = crate::quantum::random::random_density(&mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(9), &[2, 2]);
        let sigma = crate::quantum::isotropic(2, 0.7).unwrap();
        let mut model = Model::new();
        let x = model.complex_var(4, 4);
        let blk = MatExpr::block2(
            &MatExpr::constant(rho.matrix().clone()),
            &x,
            &x.adjoint(),
            &MatExpr::constant(sigma.matrix().clone()),
        );
        model.psd(&blk);
        model.maximize(&x.trace());
        let sol = model.solve(&SolverSettings::default()).unwrap();
        let f = crate::quantum::fidelity(&rho, &sigma).unwrap();
        assert!((-sol.primal_value() - f.sqrt()).abs() < 1e-7, "{:?} {} {}", sol.raw.status, sol.primal_value(), f.sqrt());
    }
}
