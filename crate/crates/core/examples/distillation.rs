//! Builds and certifies a distillation channel, then applies it.

use oneshot_ent::protocols;
use oneshot_ent::quantum::{self, linalg};
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let rho = quantum::isotropic(3, 0.95)?;
    let eps = 0.1;
    let out = protocols::build_distill(&rho, eps, &opts)?;
    println!("rate log M = {} (M = {}), allowed [{:.4}, {:.4}]", out.log_m, out.m, out.sandwich.lower, out.sandwich.upper);
    println!("non-entangling: {} (worst-case R_G ≤ {:.2e})", out.sepp_report.is_sepp, out.sepp_report.worst_case_robustness.upper);

    let image = protocols::apply(&out.channel, &rho)?;
    let target = quantum::max_entangled(out.m)?;
    println!("overlap of Λ(ρ) with Ψ_M: {:.6} ≥ 1 − ε = {}", linalg::trace_product(image.matrix(), target.matrix()).re, 1.0 - eps);
    Ok(())
}
