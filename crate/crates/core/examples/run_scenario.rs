//! Runs the bundled demo scenario and prints the monthly rows of its series.
//!
//!     cargo run --example run_scenario [path/to/scenario.json]

use aims::scenario::run;
use aims::Scenario;

fn main() -> aims::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/wish_demo.json").to_string());
    let doc = std::fs::read(&path).expect("readable scenario");
    let scenario = Scenario::from_json(&doc)?;
    let out = run(&scenario)?;

    let csv = out.series.to_csv();
    let mut lines = csv.lines();
    println!("{}", lines.next().unwrap());
    for line in lines.step_by(4) {
        println!("{line}");
    }
    println!("events {}", out.ledger.events().len());
    println!("digest {}", out.ledger.state_digest());
    Ok(())
}
