//! Finite-dimensional state primitives.

pub mod linalg;
pub mod random;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use linalg::{c, real, CMat, C64};

/// Validation tolerance for Hermiticity, trace and positivity.
pub const STATE_TOL: f64 = 1e-8;

/// A validated density matrix on a tensor product of factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMat,
    dims: Vec<usize>,
}

/// An operator `0 ⪯ A ⪯ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    data: CMat,
    dims: Vec<usize>,
}

/// The set of factor indices forming the "B side" of a cut.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    cut: Vec<usize>,
}

impl Bipartition {
    pub fn new(mut cut: Vec<usize>, num_factors: usize) -> Result<Self> {
        cut.sort_unstable();
        cut.dedup();
        if cut.is_empty() || cut.len() >= num_factors || cut.iter().any(|&k| k >= num_factors) {
            return Err(Error::InvalidParameter(format!(
                "cut {cut:?} is not a non-empty proper subset of {num_factors} factors"
            )));
        }
        Ok(Self { cut })
    }

    /// The cut `{1}` of a bipartite system.
    pub fn second() -> Self {
        Self { cut: vec![1] }
    }

    /// Every single-factor cut, deduplicated up to complement.
    ///
    /// For two factors this is just `{1}`.
    pub fn single_factor_cuts(num_factors: usize) -> Vec<Self> {
        match num_factors {
            0 | 1 => Vec::new(),
            2 => vec![Self::second()],
            m => (0..m).map(|k| Self { cut: vec![k] }).collect(),
        }
    }

    pub fn factors(&self) -> &[usize] {
        &self.cut
    }

    fn check(&self, num_factors: usize) -> Result<()> {
        if self.cut.is_empty() || self.cut.len() >= num_factors || self.cut.iter().any(|&k| k >= num_factors) {
            return Err(Error::InvalidParameter(format!(
                "cut {:?} invalid for {num_factors} factors",
                self.cut
            )));
        }
        Ok(())
    }
}

fn check_dims(side: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::DimensionMismatch(format!("bad factor dims {dims:?}")));
    }
    let product: usize = dims.iter().product();
    if product != side {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} multiply to {product}, matrix side is {side}"
        )));
    }
    Ok(())
}

impl DensityMatrix {
    /// Validates and lightly cleans a candidate state.
    ///
    /// The Hermitian part is taken, eigenvalues in `[-tol, 0)` are clamped and
    /// the trace is renormalised; larger defects are rejected.
    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        Self::with_tolerance(matrix, dims, STATE_TOL)
    }

    pub fn with_tolerance(matrix: CMat, dims: Vec<usize>, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(matrix.nrows(), &dims)?;
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > tol {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let h = linalg::hermitize(&matrix);
        let tr = linalg::trace(&h).re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let (vals, vecs) = linalg::eigh(&h);
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        let data = if min < 0.0 {
            let mut scaled = vecs.clone();
            for (j, &v) in vals.iter().enumerate() {
                let w = real(v.max(0.0));
                for i in 0..scaled.nrows() {
                    scaled[(i, j)] *= w;
                }
            }
            scaled * vecs.adjoint()
        } else {
            h
        };
        let tr = linalg::trace(&data).re;
        Ok(Self {
            data: data / real(tr),
            dims,
        })
    }

    /// Builds a state from a trusted PSD operator, normalising the trace.
    ///
    /// Used for outputs of solvers whose residual negativity is at the
    /// solver tolerance; eigenvalues are clamped at zero.
    pub fn from_psd_operator(op: &CMat, dims: Vec<usize>) -> Result<Self> {
        check_dims(op.nrows(), &dims)?;
        let clamped = linalg::hermitian_map(op, |v| v.max(0.0));
        let tr = linalg::trace(&clamped).re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("operator has zero trace".into()));
        }
        Ok(Self {
            data: clamped / real(tr),
            dims,
        })
    }

    /// Pure state `|ψ⟩⟨ψ|`; the vector is normalised.
    pub fn pure(psi: &linalg::CVec, dims: Vec<usize>) -> Result<Self> {
        check_dims(psi.len(), &dims)?;
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = psi / real(norm);
        Ok(Self {
            data: &v * v.adjoint(),
            dims,
        })
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self {
            data: linalg::identity(n) / real(n as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.data.nrows()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.data, &self.data).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.data)
    }

    /// Tensor product; factor lists are concatenated.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix {
            data: linalg::kron(&self.data, &other.data),
            dims,
        }
    }

    /// Reorders factors: factor `i` of the result is factor `perm[i]` here.
    pub fn permute(&self, perm: &[usize]) -> Result<DensityMatrix> {
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.dims.len()).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
        let (data, dims) = linalg::permute_factors(&self.data, &self.dims, perm);
        Ok(DensityMatrix { data, dims })
    }

    /// Relabels the factor structure without touching the matrix.
    pub fn regroup(&self, dims: Vec<usize>) -> Result<DensityMatrix> {
        check_dims(self.side(), &dims)?;
        Ok(DensityMatrix {
            data: self.data.clone(),
            dims,
        })
    }

    /// `Tr(Aρ)` for a Hermitian `A`.
    pub fn expectation(&self, op: &CMat) -> f64 {
        linalg::trace_product(op, &self.data).re
    }

    /// Mixture `p·self + (1−p)·other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        DensityMatrix::new(&self.data * real(p) + &other.data * real(1.0 - p), self.dims.clone())
    }
}

impl Effect {
    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidEffect("matrix is not square".into()));
        }
        check_dims(matrix.nrows(), &dims)?;
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > STATE_TOL {
            return Err(Error::InvalidEffect(format!("not Hermitian (defect {herm:e})")));
        }
        let h = linalg::hermitize(&matrix);
        let vals = linalg::eigvalsh(&h);
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if lo < -STATE_TOL || hi > 1.0 + STATE_TOL {
            return Err(Error::InvalidEffect(format!(
                "spectrum [{lo:e}, {hi}] outside [0, 1]"
            )));
        }
        Ok(Self { data: h, dims })
    }

    /// Clamps the spectrum into `[0, 1]`; for solver outputs.
    pub fn clamped(matrix: &CMat, dims: Vec<usize>) -> Result<Self> {
        check_dims(matrix.nrows(), &dims)?;
        Ok(Self {
            data: linalg::hermitian_map(matrix, |v| v.clamp(0.0, 1.0)),
            dims,
        })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            data: linalg::identity(n),
            dims,
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn complement(&self) -> Effect {
        Effect {
            data: linalg::identity(self.data.nrows()) - &self.data,
            dims: self.dims.clone(),
        }
    }
}

/// `|Ψ_M⟩⟨Ψ_M|` on `[M, M]` with computational-basis Schmidt vectors.
pub fn max_entangled(rank: usize) -> Result<DensityMatrix> {
    if rank == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    Ok(DensityMatrix {
        data: linalg::mes_projector(rank),
        dims: vec![rank, rank],
    })
}

/// Pure bipartite state with the given Schmidt coefficients (squared
/// amplitudes, normalised internally) in the computational basis.
pub fn schmidt_state(coefficients: &[f64]) -> Result<DensityMatrix> {
    let d = coefficients.len();
    if d == 0 || coefficients.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidParameter("Schmidt coefficients must be non-negative".into()));
    }
    let mut psi = linalg::CVec::zeros(d * d);
    for (i, &p) in coefficients.iter().enumerate() {
        psi[i * d + i] = real(p.sqrt());
    }
    DensityMatrix::pure(&psi, vec![d, d])
}

pub fn partial_transpose(rho: &DensityMatrix, cut: &Bipartition) -> Result<CMat> {
    cut.check(rho.dims.len())?;
    Ok(linalg::partial_transpose(&rho.data, &rho.dims, &cut.cut))
}

pub fn partial_trace(rho: &DensityMatrix, cut: &Bipartition) -> Result<DensityMatrix> {
    cut.check(rho.dims.len())?;
    let (data, dims) = linalg::partial_trace(&rho.data, &rho.dims, &cut.cut);
    Ok(DensityMatrix { data, dims })
}

/// `F(ρ, σ) = (Tr √(√σ ρ √σ))²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.side() != sigma.side() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity of {}-dim and {}-dim states",
            rho.side(),
            sigma.side()
        )));
    }
    Ok(fidelity_operators(&rho.data, &sigma.data))
}

/// Fidelity formula on PSD operators; not clamped to `[0, 1]` so it also
/// works for subnormalised inputs.
pub fn fidelity_operators(rho: &CMat, sigma: &CMat) -> f64 {
    let s = linalg::sqrt_psd(sigma);
    let inner = &s * rho * &s;
    let root_trace: f64 = linalg::eigvalsh(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    root_trace * root_trace
}

/// Projects a `d⊗d` operator onto the `U⊗U*`-invariant (isotropic) span.
pub fn uu_star_twirl(x: &CMat, dims: &[usize]) -> Result<CMat> {
    if dims.len() != 2 || dims[0] != dims[1] {
        return Err(Error::DimensionMismatch(format!(
            "U⊗U* twirl needs two equal factors, got {dims:?}"
        )));
    }
    check_dims(x.nrows(), dims)?;
    Ok(linalg::twirl_pair(x, dims, 0, 1))
}

/// `f·Ψ_d + (1−f)·(I−Ψ_d)/(d²−1)`.
pub fn isotropic(d: usize, f: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidParameter(format!("isotropic weight {f} outside [0, 1]")));
    }
    if d < 2 {
        return max_entangled(d.max(1));
    }
    let psi = linalg::mes_projector(d);
    let n = d * d;
    let rest = linalg::identity(n) - &psi;
    let data = &psi * real(f) + rest * real((1.0 - f) / (n as f64 - 1.0));
    Ok(DensityMatrix {
        data,
        dims: vec![d, d],
    })
}

/// Werner state `p·P_a/dim(P_a) + (1−p)·P_s/dim(P_s)`; entangled iff `p > 1/2`.
pub fn werner(d: usize, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) || d < 2 {
        return Err(Error::InvalidParameter(format!("werner(d={d}, p={p})")));
    }
    let n = d * d;
    let mut swap = CMat::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            swap[(i * d + j, j * d + i)] = C64::new(1.0, 0.0);
        }
    }
    let id = linalg::identity(n);
    let sym = (&id + &swap) * real(0.5);
    let anti = (&id - &swap) * real(0.5);
    let ds = (d * (d + 1) / 2) as f64;
    let da = (d * (d - 1) / 2) as f64;
    let data = anti * real(p / da) + sym * real((1.0 - p) / ds);
    Ok(DensityMatrix {
        data,
        dims: vec![d, d],
    })
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.eigenvalues()
        .into_iter()
        .filter(|&v| v > 1e-15)
        .map(|v| -v * v.log2())
        .sum()
}

/// Computational-basis ket.
pub fn basis_state(dims: Vec<usize>, index: usize) -> Result<DensityMatrix> {
    let n: usize = dims.iter().product();
    if index >= n {
        return Err(Error::InvalidParameter(format!("basis index {index} >= {n}")));
    }
    let mut psi = linalg::CVec::zeros(n);
    psi[index] = c(1.0, 0.0);
    DensityMatrix::pure(&psi, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol
        }
    }

    #[test]
    fn maximally_mixed_two_qubits_is_valid() {
        let m = linalg::identity(4) / real(4.0);
        let rho = DensityMatrix::new(m, vec![2, 2]).unwrap();
        assert!(close(rho.purity(), 0.25, 1e-14));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = real(1.0 / 0.99);
        m[(1, 1)] = real(-0.01 / 0.99);
        let err = DensityMatrix::new(m, vec![2]).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn rejects_dim_product_mismatch() {
        let m = linalg::identity(4) / real(4.0);
        assert!(DensityMatrix::new(m, vec![2, 3]).is_err());
    }

    #[test]
    fn bell_matrix_has_pure_spectrum() {
        let mut m = CMat::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = real(0.5);
        }
        let rho = DensityMatrix::new(m, vec![2, 2]).unwrap();
        let ev = rho.eigenvalues();
        assert!(close(ev[3], 1.0, 1e-12));
        assert!(ev[..3].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn mes_rank_one_is_product() {
        let psi = max_entangled(1).unwrap();
        assert_eq!(psi.dims(), &[1, 1]);
        assert!(close(psi.matrix()[(0, 0)].re, 1.0, 0.0));
    }

    #[test]
    fn mes_marginals_are_flat() {
        let psi = max_entangled(2).unwrap();
        let a = partial_trace(&psi, &Bipartition::second()).unwrap();
        let b = partial_trace(&psi, &Bipartition::new(vec![0], 2).unwrap()).unwrap();
        let half = linalg::identity(2) * real(0.5);
        assert!(linalg::max_abs_diff(a.matrix(), &half) < 1e-15);
        assert!(linalg::max_abs_diff(b.matrix(), &half) < 1e-15);
        let three = max_entangled(3).unwrap();
        let red = partial_trace(&three, &Bipartition::second()).unwrap();
        assert!(close(red.purity(), 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn partial_transpose_of_bell_has_negative_half() {
        let psi = max_entangled(2).unwrap();
        let pt = partial_transpose(&psi, &Bipartition::second()).unwrap();
        assert!(close(linalg::min_eigenvalue(&pt), -0.5, 1e-12));
        let back = linalg::partial_transpose(&pt, &[2, 2], &[1]);
        assert_eq!(&back, psi.matrix());
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        let pt = partial_transpose(&mixed, &Bipartition::second()).unwrap();
        assert_eq!(&pt, mixed.matrix());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = isotropic(2, 0.3).unwrap();
        let a = partial_trace(&a, &Bipartition::second()).unwrap();
        let b = basis_state(vec![3], 1).unwrap();
        let ab = a.tensor(&b);
        let back = partial_trace(&ab, &Bipartition::second()).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), a.matrix()) < 1e-15);
    }

    #[test]
    fn fidelity_golden_values() {
        let psi = max_entangled(2).unwrap();
        let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
        assert!(close(fidelity(&psi, &psi).unwrap(), 1.0, 1e-10));
        assert!(close(fidelity(&psi, &mixed).unwrap(), 0.25, 1e-10));
        // pure-state shortcut ⟨ψ|σ|ψ⟩
        assert!(close(mixed.expectation(psi.matrix()), 0.25, 1e-15));
        let zero = basis_state(vec![2], 0).unwrap();
        let one = basis_state(vec![2], 1).unwrap();
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        assert!(fidelity(&psi, &zero).is_err());
    }

    #[test]
    fn twirl_fixed_points() {
        for d in 2..=4 {
            let psi = max_entangled(d).unwrap();
            let tw = uu_star_twirl(psi.matrix(), &[d, d]).unwrap();
            assert!(linalg::max_abs_diff(&tw, psi.matrix()) < 1e-14);
            let mixed = DensityMatrix::maximally_mixed(vec![d, d]);
            let tw = uu_star_twirl(mixed.matrix(), &[d, d]).unwrap();
            assert!(linalg::max_abs_diff(&tw, mixed.matrix()) < 1e-14);
        }
        assert!(uu_star_twirl(&linalg::identity(6), &[2, 3]).is_err());
    }

    #[test]
    fn isotropic_family() {
        let d = 3;
        let one = isotropic(d, 1.0).unwrap();
        assert!(linalg::max_abs_diff(one.matrix(), max_entangled(3).unwrap().matrix()) < 1e-15);
        let flat = isotropic(d, 1.0 / 9.0).unwrap();
        assert!(linalg::max_abs_diff(flat.matrix(), &(linalg::identity(9) / real(9.0))) < 1e-15);
        let f = 0.4;
        let iso = isotropic(d, f).unwrap();
        assert!(close(iso.expectation(&linalg::mes_projector(d)), f, 1e-14));
        assert!(isotropic(2, 1.2).is_err());
    }

    #[test]
    fn werner_is_valid_state() {
        for &p in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let w = werner(2, p).unwrap();
            assert!(close(linalg::trace(w.matrix()).re, 1.0, 1e-14));
            assert!(linalg::min_eigenvalue(w.matrix()) > -1e-14);
        }
    }

    #[test]
    fn embedding_adjoint_matches_trace_pairing() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = random::random_density(&mut rng, &[3]).into_matrix();
        let z = linalg::real_embedding(&random::random_density(&mut rng, &[3]).into_matrix());
        let w = linalg::real_embedding_adjoint(&z);
        let lhs = linalg::trace_product(&w, &h).re;
        let rhs = (&z * linalg::real_embedding(&h)).trace();
        assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn von_neumann_entropy_of_schmidt_state() {
        let psi = schmidt_state(&[0.9, 0.1]).unwrap();
        let red = partial_trace(&psi, &Bipartition::second()).unwrap();
        let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        assert!(close(von_neumann_entropy(&red), h, 1e-12));
    }
}
