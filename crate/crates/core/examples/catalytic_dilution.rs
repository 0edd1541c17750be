//! Catalytic dilution under δ-non-entangling maps. The catalyst Ψ_K comes
//! back untouched.

use oneshot_ent::protocols;
use oneshot_ent::quantum;
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let rho = quantum::max_entangled(2)?;
    let (eps, delta) = (0.01, 1.0);
    let out = protocols::build_catalytic_dilute(&rho, eps, delta, &opts)?;
    let k = out.catalyst_k.expect("catalytic outcome");
    println!("K = {k}, M = {}, rate {:.4} in [{:.4}, {:.4}]", out.m, out.log_m, out.sandwich.lower, out.sandwich.upper);
    println!("worst-case output R_G {:.6} ≤ δ = {delta}", out.sepp_report.worst_case_robustness.upper);
    println!("fidelity of ρ ⊗ Ψ_K block: {:.6}", out.achieved_fidelity);
    Ok(())
}
