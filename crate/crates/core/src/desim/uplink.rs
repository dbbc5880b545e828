//! Source arrival processes and uplink loss models.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

/// Poisson arrival times on `(0, horizon]`.
pub fn poisson_arrivals<R: Rng + ?Sized>(rate: f64, horizon: f64, rng: &mut R) -> Vec<f64> {
    if !(rate > 0.0) {
        return Vec::new();
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut out = Vec::with_capacity((rate * horizon * 1.05) as usize + 16);
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon {
            return out;
        }
        out.push(t);
    }
}

/// The first `n` Poisson arrival times.
pub fn poisson_arrivals_count<R: Rng + ?Sized>(rate: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += exp.sample(rng);
            t
        })
        .collect()
}

/// Indices of transmissions that survive pure ALOHA: no other start within
/// `packet_duration` on either side. `starts` must be sorted.
pub fn aloha_survivors(starts: &[f64], packet_duration: f64) -> Vec<usize> {
    (0..starts.len())
        .filter(|&i| {
            let clear_before = i == 0 || starts[i] - starts[i - 1] > packet_duration;
            let clear_after = i + 1 == starts.len() || starts[i + 1] - starts[i] > packet_duration;
            clear_before && clear_after
        })
        .collect()
}

/// Start times of the transmissions that survive a pure-ALOHA channel with
/// Poisson offered load `lambda_offered` over `(0, horizon]`.
pub fn aloha_arrivals<R: Rng + ?Sized>(
    lambda_offered: f64,
    packet_duration: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(lambda_offered > 0.0 && packet_duration > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidConfig("ALOHA parameters must be positive".into()));
    }
    let starts = poisson_arrivals(lambda_offered, horizon, rng);
    Ok(aloha_survivors(&starts, packet_duration).into_iter().map(|i| starts[i]).collect())
}

/// Drops each arrival independently with probability `p_c`.
pub fn mpr_thin<R: Rng + ?Sized>(arrivals: &[f64], p_c: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&p_c) {
        return Err(Error::InvalidConfig(format!("loss probability {p_c} outside [0,1)")));
    }
    Ok(arrivals.iter().copied().filter(|_| !(rng.random::<f64>() < p_c)).collect())
}
