//! Checks the rate sandwiches on a slice of the state battery.

use oneshot_ent::experiments::{self, Theorem};
use oneshot_ent::Options;

fn main() {
    let battery: Vec<_> = experiments::state_battery().into_iter().filter(|s| s.id.starts_with("mes") || s.id.starts_with("iso")).collect();
    let tasks = experiments::theorem_grid(&[Theorem::Distill, Theorem::Dilute, Theorem::Catalytic], battery.len(), &[0.0, 0.1], &[1.0]);
    let records = experiments::run_theorems(&battery, &tasks, false, &Options::default());
    for r in &records {
        println!("T{} {:<10} ε={:<4} δ={:<4} {:>8.4} ≤ {:>8.4} ≤ {:>8.4}  {:?}", r.theorem, r.state, r.eps,
            r.delta.map(|d| d.to_string()).unwrap_or("-".into()), r.lower, r.rate, r.upper, r.status);
    }
    let passed = records.iter().filter(|r| r.pass).count();
    println!("{passed}/{} passed", records.len());
}
