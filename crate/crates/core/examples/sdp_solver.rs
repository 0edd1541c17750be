//! The modelling layer and the interior-point solver on a small problem:
//! the largest overlap of a PPT state with Ψ_2.

use oneshot_ent::quantum::{linalg, max_entangled};
use oneshot_ent::sdp::{dump, Model, SolverSettings};

fn main() -> oneshot_ent::Result<()> {
    let psi = max_entangled(2)?;
    let mut model = Model::new();
    let sigma = model.herm_var(4);
    model.psd(&sigma);
    model.psd(&sigma.partial_transpose(&[2, 2], &[1]));
    model.eq(&sigma.trace(), 1.0);
    model.maximize(&sigma.trace_with(psi.matrix()).0);

    let sol = model.solve(&SolverSettings::default())?;
    println!("max Tr(Ψσ) over PPT σ = {:.9}", -sol.primal_value());
    println!("status {:?}, {} iterations, gap {:.1e}", sol.raw.status, sol.raw.iterations, sol.raw.gap());
    println!("optimal σ has trace {:.9}", linalg::trace(&sol.value(&sigma)).re);

    // The same problem as plain text, for cross-checking elsewhere.
    let text = dump::to_text(&model.to_problem());
    println!("dump: {} lines", text.lines().count());
    Ok(())
}
