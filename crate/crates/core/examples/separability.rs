//! PPT tests and linear optimisation over separable states.

use oneshot_ent::quantum::{self, Effect};
use oneshot_ent::separability;
use oneshot_ent::Options;

fn main() -> oneshot_ent::Result<()> {
    for f in [0.4, 0.6] {
        let iso = quantum::isotropic(2, f)?;
        let (ppt, mins) = separability::ppt_check(&iso, None)?;
        println!("iso(2, {f}): PPT {ppt}, min partial-transpose eigenvalue {:.3}", mins[0]);
    }

    // A projector that is not isotropic goes through the SDP and see-saw.
    let phi = quantum::schmidt_state(&[0.8, 0.2])?;
    let effect = Effect::new(phi.matrix().clone(), vec![2, 2])?;
    let r = separability::max_linear_over_sep(&effect, None, &Options::default())?;
    println!("max over SEP of ⟨φ|σ|φ⟩: PPT {:.6}, product {:.6}, exact {}", r.ppt_value, r.heuristic_value, r.exact);

    let (v, _) = separability::seesaw_product_max(effect.matrix(), &[2, 2], 8, 7);
    println!("see-saw alone: {v:.6} (largest Schmidt coefficient 0.8)");
    println!("product point purity {:.3}", r.product_point.purity());
    Ok(())
}
