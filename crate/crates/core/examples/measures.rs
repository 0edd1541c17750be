//! Unsmoothed entanglement measures on a few reference states.

use oneshot_ent::measures::{self, Measure, Symmetry};
use oneshot_ent::quantum;
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let states = [
        ("Ψ_2", quantum::max_entangled(2)?),
        ("Ψ_3", quantum::max_entangled(3)?),
        ("iso(2,0.75)", quantum::isotropic(2, 0.75)?),
        ("werner(2,0.8)", quantum::werner(2, 0.8)?),
    ];
    println!("{:<14} {:>10} {:>10} {:>10} {:>10}", "state", "E_max", "E_min", "LR", "R_G");
    for (name, rho) in &states {
        let emax = measures::e_max(rho, &opts)?;
        let emin = measures::e_min(rho, &opts)?;
        let lr = measures::lr(rho, &opts)?;
        let rg = measures::r_global(rho, Symmetry::None, &opts)?;
        println!("{name:<14} {:>10.6} {:>10.6} {:>10.6} {:>10.6}", emax.midpoint(), emin.midpoint(), lr.midpoint(), rg.midpoint());
    }

    let pure = quantum::schmidt_state(&[0.9, 0.1])?;
    println!("E_R of the (0.9, 0.1) pure state: {:.6}", measures::e_r_pure(&pure)?);

    // Dispatch by name, as the command line does.
    let v = "lrg".parse::<Measure>()?.evaluate(&states[0].1, None, None, &opts)?;
    println!("lrg(Ψ_2) ∈ [{:.9}, {:.9}]", v.lower, v.upper);
    Ok(())
}
