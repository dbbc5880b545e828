//! Density, CDF and mean of a sum of exponential stages, checked against
//! the matrix-exponential evaluation and a Monte Carlo estimate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tandem_aoi::phasetype::{matrix_cdf, HypoExp};

fn main() -> tandem_aoi::Result<()> {
    let rates = [0.5, 0.8, 0.8, 1.3];
    let h = HypoExp::from_rates(&rates)?;
    println!("stages {:?}, mean {:.6}", h.stages(), h.mean());
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "pdf", "cdf", "matrix cdf");
    for t in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
        println!("{t:>6} {:>12.8} {:>12.8} {:>12.8}", h.pdf(t), h.cdf(t), matrix_cdf(&rates, t)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 200_000;
    let mc = (0..n).map(|_| h.sample(&mut rng)).sum::<f64>() / n as f64;
    println!("sample mean over {n} draws: {mc:.4}");
    Ok(())
}
