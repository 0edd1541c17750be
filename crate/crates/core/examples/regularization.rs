//! Per-copy smoothed min-entropy of entanglement for n = 1, 2 copies.

use oneshot_ent::experiments::{self, NamedState};
use oneshot_ent::quantum;
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let eps = 0.01;
    for state in [
        NamedState::new("Ψ_2", quantum::max_entangled(2)?),
        NamedState::new("(0.9, 0.1)", quantum::schmidt_state(&[0.9, 0.1])?),
    ] {
        let s = experiments::regularization_series(&state, eps, 2, 16, &opts)?;
        for e in &s.entries {
            println!("{:<11} n = {}  E_min^ε/n ∈ [{:.6}, {:.6}]", s.state, e.n, e.lower, e.upper);
        }
        if let Some(r) = s.reference {
            println!("{:<11} reference E_R^∞ = {r:.6}", s.state);
        }
    }
    Ok(())
}
