//! Dilution: prepare an approximation of ρ from Ψ_M with a certified map.

use oneshot_ent::protocols;
use oneshot_ent::quantum::{self, random};
use oneshot_ent::Options;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let rho = random::random_pure(&mut ChaCha8Rng::seed_from_u64(4), &[2, 2]).mix(&quantum::max_entangled(2)?, 0.5)?;
    for eps in [0.0, 0.05] {
        let out = protocols::build_dilute(&rho, eps, &opts)?;
        let made = protocols::apply(&out.channel, &quantum::max_entangled(out.m)?)?;
        println!(
            "ε = {eps}: M = {}, rate {:.4} in [{:.4}, {:.4}], fidelity {:.6}",
            out.m,
            out.log_m,
            out.sandwich.lower,
            out.sandwich.upper,
            quantum::fidelity(&made, &rho)?
        );
    }
    Ok(())
}
