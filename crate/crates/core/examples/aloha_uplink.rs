//! Pure ALOHA survivors against the thinned Poisson process: rates and KS
//! distance of the gap distribution, plus the AoI effect downstream.

use tandem_aoi::cli::compare_uplink;
use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{Policy, Uplink};
use tandem_aoi::stats::{summarize, DEFAULT_BATCHES};

fn main() -> tandem_aoi::Result<()> {
    println!("{:>7} {:>10} {:>10} {:>8}", "lambda", "survivors", "expected", "KS");
    for (i, lambda) in [0.01, 0.05, 0.1, 0.3].into_iter().enumerate() {
        let c = compare_uplink(lambda, 1.0, 1e5, 1, i as u64)?;
        println!("{lambda:>7} {:>10.5} {:>10.5} {:>8.4}", c.survivor_rate, c.expected_rate, c.ks);
    }

    for uplink in [Uplink::Ideal, Uplink::Aloha { packet_duration: 1.0 }] {
        let net = Network::line(4, 0.5, 1.0, 0.8, &[0.0], uplink)?;
        let result = simulate(&net, &SimParams::new(Policy::Fcfs, 50_000, 3))?;
        let s = &summarize(&result, DEFAULT_BATCHES)?.sources[0];
        println!("{uplink:?}: source 1 AoI {:.3}, uplink losses {}", s.mean_aoi, s.counts.uplink_lost);
    }
    Ok(())
}
