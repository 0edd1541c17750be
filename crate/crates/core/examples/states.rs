//! Density matrices, partial operations, fidelity and the U⊗U* twirl.

use oneshot_ent::quantum::{self, linalg, random, Bipartition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> oneshot_ent::Result<()> {
    let bell = quantum::max_entangled(2)?;
    let marginal = quantum::partial_trace(&bell, &Bipartition::second())?;
    println!("Tr_B Ψ_2 eigenvalues: {:?}", marginal.eigenvalues());

    let gamma = quantum::partial_transpose(&bell, &Bipartition::second())?;
    println!("min eigenvalue of Ψ_2^Γ: {:.3}", linalg::min_eigenvalue(&gamma));

    let iso = quantum::isotropic(2, 0.8)?;
    println!("F(Ψ_2, iso(2, 0.8)) = {:.6}", quantum::fidelity(&bell, &iso)?);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho = random::random_density(&mut rng, &[2, 2]);
    let twirled = quantum::uu_star_twirl(rho.matrix(), rho.dims())?;
    let again = quantum::uu_star_twirl(&twirled, rho.dims())?;
    println!("twirl idempotence defect: {:.1e}", linalg::max_abs_diff(&twirled, &again));
    println!("overlap with Ψ_2 kept: {:.6} vs {:.6}", rho.expectation(bell.matrix()),
        linalg::trace_product(&twirled, bell.matrix()).re);
    Ok(())
}
