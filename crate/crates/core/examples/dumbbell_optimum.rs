//! Network-mean AoI on the dumbbell topology as the bottleneck load varies,
//! and the load that minimizes it for a few flow counts.

use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{Policy, Uplink};
use tandem_aoi::stats::{summarize, DEFAULT_BATCHES};

fn main() -> tandem_aoi::Result<()> {
    let rhos: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    for n in [2, 6] {
        let mut best = (f64::INFINITY, 0.0);
        for &rho in &rhos {
            let net = Network::dumbbell(n, rho, 1.0, 0.8, &[0.01], Uplink::Ideal)?;
            let result = simulate(&net, &SimParams::new(Policy::Haf, 20_000, 6))?;
            let (aoi, se) = summarize(&result, DEFAULT_BATCHES)?.network_mean_aoi();
            println!("N={n} rho={rho:.1} AoI {aoi:.3} ± {se:.3}");
            if aoi < best.0 {
                best = (aoi, rho);
            }
        }
        println!("N={n}: minimum {:.3} at rho={:.1}", best.0, best.1);
    }
    Ok(())
}
