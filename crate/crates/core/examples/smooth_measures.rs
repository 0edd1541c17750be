//! Smoothed measures over the fidelity ball.

use oneshot_ent::measures;
use oneshot_ent::quantum;
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    let opts = Options::default();
    let bell = quantum::max_entangled(2)?;
    for eps in [0.0, 0.01, 0.1] {
        let emax = measures::e_max_smooth(&bell, eps, &opts)?;
        let emin = measures::e_min_smooth(&bell, eps, &opts)?;
        let lr = measures::lr_smooth(&bell, eps, &opts)?;
        println!("ε = {eps:<5} E_max^ε {:.6}  E_min^ε {:.6}  LR^ε {:.6}", emax.midpoint(), emin.midpoint(), lr.midpoint());
    }

    let sol = measures::e_max_smooth_solution(&quantum::isotropic(2, 0.9)?, 0.05, &opts)?;
    println!(
        "iso(2, 0.9) at ε = 0.05: [{:.6}, {:.6}], optimiser has fidelity {:.4} with the centre",
        sol.value.lower,
        sol.value.upper,
        quantum::fidelity(&sol.state, &quantum::isotropic(2, 0.9)?)?
    );
    Ok(())
}
