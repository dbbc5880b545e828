//! Single M/M/1 link: simulated average AoI against the exact value and the
//! independence approximation.

use tandem_aoi::analysis::{aoi_approx, mm1_aoi_exact};
use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{NetworkConfig, Policy};
use tandem_aoi::stats::{summarize, DEFAULT_BATCHES};

fn main() -> tandem_aoi::Result<()> {
    println!("{:>5} {:>10} {:>10} {:>10}", "rho", "simulated", "exact", "approx");
    for lambda in [0.2, 0.5, 0.8] {
        let config = NetworkConfig::new(lambda, vec![0.0], vec![0.0], vec![1.0], vec![0.0])?;
        let net = Network::from_config(&config)?;
        let result = simulate(&net, &SimParams::new(Policy::Fcfs, 100_000, 5))?;
        let s = &summarize(&result, DEFAULT_BATCHES)?.sources[0];
        println!(
            "{lambda:>5} {:>10.4} {:>10.4} {:>10.4}",
            s.mean_aoi,
            mm1_aoi_exact(lambda, 1.0)?,
            aoi_approx(&config)?
        );
    }
    Ok(())
}
