//! Dense complex linear algebra on tensor-product spaces.
//!
//! Factor ordering is row-major Kronecker: for dims `[d0, d1, ..]` the
//! composite index is `i0 * (d1 * d2 ..) + i1 * (d2 ..) + ..`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().copied().sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = real(f(v));
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    scaled * vecs.adjoint()
}

/// Square root of a PSD matrix; negative eigenvalues are clamped to 0.
pub fn sqrt_psd(m: &CMat) -> CMat {
    hermitian_map(m, |v| v.max(0.0).sqrt())
}

/// Projector onto the eigenvectors with eigenvalue above `cutoff * λ_max`.
pub fn support_projector(m: &CMat, relative_cutoff: f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let n = vals.len();
    let mut p = CMat::zeros(n, n);
    for (j, &v) in vals.iter().enumerate() {
        if v > relative_cutoff * top && v > 0.0 {
            let col = vecs.column(j);
            p += &col * col.adjoint();
        }
    }
    p
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Splits a composite index into its per-factor digits.
#[inline]
pub fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

#[inline]
pub fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits
        .iter()
        .zip(dims)
        .fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Transposes the factors listed in `subset`.
pub fn partial_transpose(m: &CMat, dims: &[usize], subset: &[usize]) -> CMat {
    let n = m.nrows();
    let mut out = CMat::zeros(n, n);
    let mut rd = vec![0; dims.len()];
    let mut cd = vec![0; dims.len()];
    for r in 0..n {
        digits(r, dims, &mut rd);
        for col in 0..n {
            digits(col, dims, &mut cd);
            for &k in subset {
                std::mem::swap(&mut rd[k], &mut cd[k]);
            }
            out[(compose(&rd, dims), compose(&cd, dims))] = m[(r, col)];
            for &k in subset {
                std::mem::swap(&mut rd[k], &mut cd[k]);
            }
        }
    }
    out
}

/// Traces out the factors listed in `subset`; returns the reduced matrix and
/// its remaining dims.
pub fn partial_trace(m: &CMat, dims: &[usize], subset: &[usize]) -> (CMat, Vec<usize>) {
    let keep: Vec<usize> = (0..dims.len()).filter(|k| !subset.contains(k)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let side: usize = keep_dims.iter().product();
    let mut out = CMat::zeros(side, side);
    let n = m.nrows();
    let mut rd = vec![0; dims.len()];
    let mut cd = vec![0; dims.len()];
    let mut rk = vec![0; keep.len()];
    let mut ck = vec![0; keep.len()];
    for r in 0..n {
        digits(r, dims, &mut rd);
        for col in 0..n {
            digits(col, dims, &mut cd);
            if subset.iter().any(|&k| rd[k] != cd[k]) {
                continue;
            }
            for (slot, &k) in keep.iter().enumerate() {
                rk[slot] = rd[k];
                ck[slot] = cd[k];
            }
            out[(compose(&rk, &keep_dims), compose(&ck, &keep_dims))] += m[(r, col)];
        }
    }
    (out, keep_dims)
}

/// Reorders tensor factors: factor `i` of the result is factor `perm[i]` of
/// the input.
pub fn permute_factors(m: &CMat, dims: &[usize], perm: &[usize]) -> (CMat, Vec<usize>) {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = m.nrows();
    let map: Vec<usize> = (0..n)
        .map(|old| {
            let mut od = vec![0; dims.len()];
            digits(old, dims, &mut od);
            let nd: Vec<usize> = perm.iter().map(|&p| od[p]).collect();
            compose(&nd, &new_dims)
        })
        .collect();
    let mut out = CMat::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            out[(map[r], map[col])] = m[(r, col)];
        }
    }
    (out, new_dims)
}

/// `|Ψ_d⟩⟨Ψ_d|` on `d ⊗ d`.
pub fn mes_projector(d: usize) -> CMat {
    let n = d * d;
    let mut m = CMat::zeros(n, n);
    let w = real(1.0 / d as f64);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = w;
        }
    }
    m
}

/// Twirls the factor pair `(a, b)` (equal dimension `k`) by `U ⊗ U*`.
///
/// Every `k²×k²` block `B` on the pair is replaced by
/// `Tr(BΨ)Ψ + Tr(B(I−Ψ))(I−Ψ)/(k²−1)`.
pub fn twirl_pair(m: &CMat, dims: &[usize], a: usize, b: usize) -> CMat {
    let k = dims[a];
    assert_eq!(k, dims[b], "twirled factors must have equal dimension");
    if k == 1 {
        return m.clone();
    }
    let mut perm: Vec<usize> = (0..dims.len()).filter(|&i| i != a && i != b).collect();
    perm.push(a);
    perm.push(b);
    let (moved, moved_dims) = permute_factors(m, dims, &perm);
    let kk = k * k;
    let outer = moved.nrows() / kk;
    let psi = mes_projector(k);
    let comp = identity(kk) - &psi;
    let comp_norm = 1.0 / (kk as f64 - 1.0);
    let mut out = CMat::zeros(moved.nrows(), moved.nrows());
    for r in 0..outer {
        for col in 0..outer {
            let block = moved.view((r * kk, col * kk), (kk, kk)).clone_owned();
            let t_psi = trace_product(&block, &psi);
            let t_rest = trace(&block) - t_psi;
            let tw = &psi * t_psi + &comp * (t_rest * comp_norm);
            out.view_mut((r * kk, col * kk), (kk, kk)).copy_from(&tw);
        }
    }
    let mut inverse = vec![0; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    permute_factors(&out, &moved_dims, &inverse).0
}

/// Real symmetric embedding `H ↦ [[Re H, −Im H], [Im H, Re H]]`.
pub fn real_embedding(h: &CMat) -> RMat {
    let n = h.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Adjoint of [`real_embedding`] under the trace inner products:
/// `Tr(W H) = Tr(Z φ(H))` for every Hermitian `H`.
pub fn real_embedding_adjoint(z: &RMat) -> CMat {
    let n = z.nrows() / 2;
    let mut w = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let re = z[(i, j)] + z[(i + n, j + n)];
            let im = z[(i + n, j)] - z[(i, j + n)];
            w[(i, j)] = c(re, im);
        }
    }
    hermitize(&w)
}
