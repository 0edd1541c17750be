//! State and channel files, run configuration and report CSV.

use oneshot_ent::experiments::{self, Theorem};
use oneshot_ent::io::{self, RunConfig};
use oneshot_ent::quantum::linalg;
use oneshot_ent::{protocols, quantum, Options};

fn main() -> oneshot_ent::Result<()> {
    let dir = std::env::temp_dir().join("oneshot-ent-example");
    let bell = quantum::max_entangled(2)?;
    let path = dir.join("bell2.json");
    io::save_state(&path, "bell2", &bell)?;
    let back = io::load_state(&path)?.to_state()?;
    println!("state round trip defect: {:.1e}", linalg::max_abs_diff(back.matrix(), bell.matrix()));

    let out = protocols::build_dilute(&bell, 0.0, &Options::default())?;
    io::save_channel(&dir.join("dilute.json"), &out.channel)?;
    let channel = io::load_channel(&dir.join("dilute.json"))?;
    println!("channel reloaded with {} branches", channel.branches.len());

    let config: RunConfig = serde_json::from_str(r#"{"battery": ["mes-2", "iso2-0.75"], "eps": [0.0], "theorems": [1, 2]}"#)?;
    config.validate()?;
    let battery = config.resolve_battery()?;
    let theorems: Vec<Theorem> = config.theorem_list()?;
    let tasks = experiments::theorem_grid(&theorems, battery.len(), &config.eps, &config.deltas);
    let records = experiments::run_theorems(&battery, &tasks, false, &config.options());
    print!("{}", io::records_csv(&records)?);
    Ok(())
}
