//! Seeded random states and unitaries.

use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{c, real, CMat, CVec};
use super::DensityMatrix;

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let qr = ginibre(rng, n, n).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / real(d.norm()) } else { real(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Full-rank random mixed state `GG†/Tr(GG†)` (Hilbert–Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let g = ginibre(rng, n, n);
    let m = &g * g.adjoint();
    DensityMatrix::from_psd_operator(&m, dims.to_vec()).expect("Ginibre product is PSD")
}

/// Haar-random pure state.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let v: CVec = ginibre(rng, n, 1).column(0).into_owned();
    DensityMatrix::pure(&v, dims.to_vec()).expect("Gaussian vector is non-zero")
}
