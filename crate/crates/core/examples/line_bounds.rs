//! Bounds and approximation for a ten-relay line network next to the
//! simulated AoI of source 1, over a load sweep.

use tandem_aoi::analysis::{aoi_approx, aoi_bounds};
use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{Policy, Uplink};
use tandem_aoi::stats::{summarize, DEFAULT_BATCHES};

fn main() -> tandem_aoi::Result<()> {
    let eps = 0.01;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "rho", "lower", "sim", "upper", "approx");
    for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let net = Network::line(10, rho, 1.0, 0.8, &[eps], Uplink::Ideal)?;
        let config = net.source_view(0)?;
        let b = aoi_bounds(&config, Policy::Fcfs)?;
        let result = simulate(&net, &SimParams::new(Policy::Fcfs, 50_000, 2))?;
        let s = &summarize(&result, DEFAULT_BATCHES)?.sources[0];
        println!(
            "{rho:>5} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            b.lower,
            s.mean_aoi,
            b.upper,
            aoi_approx(&config)?
        );
    }
    Ok(())
}
