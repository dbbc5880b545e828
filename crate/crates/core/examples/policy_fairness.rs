//! Per-source AoI and Jain's fairness index under FCFS, OPF and HAF on a
//! loaded line network.

use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{Policy, Uplink};
use tandem_aoi::stats::{summarize, DEFAULT_BATCHES};

fn main() -> tandem_aoi::Result<()> {
    let net = Network::line(10, 0.8, 1.0, 0.8, &[0.01], Uplink::Ideal)?;
    for policy in Policy::ALL {
        let result = simulate(&net, &SimParams::new(policy, 50_000, 9))?;
        let summary = summarize(&result, DEFAULT_BATCHES)?;
        let ages: Vec<String> = summary.sources.iter().map(|s| format!("{:.1}", s.mean_aoi)).collect();
        println!("{policy:>4}  JFI {:.4}  AoI per source [{}]", summary.jfi, ages.join(" "));
    }
    Ok(())
}
