//! Peak-AoI tail bound versus the empirical CDF of simulated peaks on an
//! error-free six-relay line.

use tandem_aoi::analysis::paoi_bound_distribution;
use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{Policy, Uplink};
use tandem_aoi::stats::{dkw_epsilon, empirical_cdf, paoi_samples, quantile};

fn main() -> tandem_aoi::Result<()> {
    let net = Network::line(6, 0.5, 1.0, 0.8, &[0.0], Uplink::Ideal)?;
    let bound = paoi_bound_distribution(&net.source_view(0)?)?;
    let result = simulate(&net, &SimParams::new(Policy::Fcfs, 100_000, 4))?;
    let deliveries: Vec<_> = result.flows[0].windowed_deliveries().copied().collect();
    let peaks = paoi_samples(&deliveries)?;
    let band = dkw_epsilon(peaks.len(), 0.01);
    println!("{} peaks, 99% DKW band {band:.4}, p99 {:.2}", peaks.len(), quantile(&peaks, 0.99)?);
    let taus: Vec<f64> = (0..=10).map(|i| 15.0 * i as f64).collect();
    println!("{:>6} {:>10} {:>10}", "tau", "empirical", "bound");
    for (tau, f) in empirical_cdf(&peaks, &taus)? {
        println!("{tau:>6} {f:>10.4} {:>10.4}", bound.cdf(tau));
    }
    Ok(())
}
