//! Loads a scenario file and prints the analytic CSV for its sweep.
//!
//! `cargo run --example scenario_file -- scenarios/line_k2.toml`

use tandem_aoi::cli::analyze_csv;
use tandem_aoi::scenario::Scenario;

fn main() -> tandem_aoi::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/line_k2.toml").into());
    let scenario = Scenario::load(path.as_ref())?;
    println!("# scenario {} with {} points", scenario.hash(), scenario.points()?.len());
    let (csv, unstable) = analyze_csv(&scenario, None)?;
    print!("{}", String::from_utf8_lossy(&csv));
    if unstable {
        eprintln!("some points are unstable");
    }
    Ok(())
}
