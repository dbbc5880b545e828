//! Closed-form AoI results for the tagged source.
//!
//! The average AoI is `lambda * E[Q]` where `Q` is the area added to the age
//! process between two useful deliveries. Everything except the correlation
//! term `E[W Y]` (total waiting time times the preceding interarrival time)
//! is available in closed form; the bounds below bracket that term per
//! scheduling policy.

use crate::error::{Error, Result};
use crate::model::{derived_rates, DerivedRates, NetworkConfig, Policy};
use crate::phasetype::{group_rates, HypoExp, CANCELLATION_GAP};

/// Lower and upper bounds, plus the independence approximation, of the
/// tagged source's average AoI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoIBounds {
    pub lower: f64,
    pub upper: f64,
    pub approx: f64,
    pub policy: Policy,
}

fn stable_rates(config: &NetworkConfig) -> Result<DerivedRates> {
    let derived = derived_rates(config);
    derived.require_stable()?;
    check_delivery(&derived)?;
    Ok(derived)
}

fn check_delivery(derived: &DerivedRates) -> Result<()> {
    if derived.end_to_end_success() <= 0.0 {
        return Err(Error::ZeroSuccess);
    }
    if derived.lambda <= 0.0 {
        return Err(Error::InvalidConfig("source rate must be positive".into()));
    }
    Ok(())
}

/// Hypoexponential for the analysis kernels. Rates closer than the
/// cancellation gap are merged, so the partial-fraction coefficients stay
/// well conditioned.
fn analysis_hypoexp(rates: &[f64]) -> Result<HypoExp> {
    crate::phasetype::coefficients(&group_rates(rates, CANCELLATION_GAP)?)
}

/// Exact mean end-to-end network time `sum_j 1/alpha_j`.
pub fn mean_network_time(derived: &DerivedRates) -> Result<f64> {
    derived.require_stable()?;
    Ok(derived.alpha.iter().map(|a| 1.0 / a).sum())
}

/// Average AoI under the assumption that waiting and interarrival times are
/// independent.
pub fn aoi_approx(config: &NetworkConfig) -> Result<f64> {
    let d = stable_rates(config)?;
    let p = d.end_to_end_success();
    let lambda = d.lambda;
    let delay: f64 = d.alpha.iter().map(|a| 1.0 / (p * a)).sum();
    Ok(delay + 1.0 / (lambda * p) + (1.0 - p).powi(2) / (lambda * p * p))
}

/// Upper bound `E[T] E[Y]` on `E[W Y]`.
pub fn ewy_upper(derived: &DerivedRates) -> Result<f64> {
    let mean = mean_network_time(derived)?;
    check_delivery(derived)?;
    Ok(mean / derived.lambda)
}

/// FCFS lower bound `E[Y (T - Y - S')^+]` on `E[W Y]`, where `T` is the
/// end-to-end network time, `Y` the interarrival time and `S'` the service
/// time over the first `K - 1` links, all independent.
pub fn ewy_lower_fcfs(config: &NetworkConfig, derived: &DerivedRates) -> Result<f64> {
    derived.require_stable()?;
    check_delivery(derived)?;
    let k = derived.k_links();
    if config.k_links != k {
        return Err(Error::InvalidConfig("derived rates do not match the configuration".into()));
    }
    let lambda = derived.lambda;
    let network = analysis_hypoexp(&derived.alpha)?;
    let prefix = if k > 1 { Some(analysis_hypoexp(&config.mu[..k - 1])?) } else { None };

    // E[S'^m e^(-a S')] / m! for the service prefix.
    let prefix_moment = |a: f64, m: u32| -> f64 {
        match &prefix {
            None => {
                if m == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Some(h) => {
                let rates = h.rates().distinct_rates();
                let mut total = 0.0;
                for (&mu_o, row) in rates.iter().zip(h.coefficient_table()) {
                    for (idx, &delta) in row.iter().enumerate() {
                        let p = idx as u32 + 1;
                        total += binomial(m + p - 1, m) * delta / (a + mu_o).powi((m + p) as i32);
                    }
                }
                total
            }
        }
    };

    let mut sum = 0.0;
    let rates = network.rates().distinct_rates();
    for (&a, row) in rates.iter().zip(network.coefficient_table()) {
        for (idx, &gamma) in row.iter().enumerate() {
            let j = idx as u32 + 1;
            for l in 0..=j {
                let outer = gamma * lambda * (j - l) as f64 / a.powi((j - l + 1) as i32);
                if outer == 0.0 {
                    continue;
                }
                for m in 0..=l {
                    let inner = (l - m + 1) as f64 / (a + lambda).powi((l - m + 2) as i32);
                    sum += outer * inner * prefix_moment(a, m);
                }
            }
        }
    }
    Ok(sum)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// OPF/HAF lower bound on `E[W Y]`: the exact first-node term plus, for
/// every later node, the wait caused by a busy queue that is never empty.
pub fn ewy_lower_opf(config: &NetworkConfig, derived: &DerivedRates) -> Result<f64> {
    derived.require_stable()?;
    check_delivery(derived)?;
    let mu = &config.mu;
    let first = derived.lambda / (derived.alpha[0] * mu[0] * mu[0]);
    let rest: f64 = (1..derived.k_links())
        .map(|j| {
            let rho = derived.rho[j];
            (1.0 - rho) * rho * mu[j - 1] / (derived.arrival_rate[j] * (derived.alpha[j] + mu[j - 1]))
        })
        .sum();
    Ok(first + rest)
}

/// Average AoI as a function of the `E[W Y]` term.
fn aoi_from_ewy(config: &NetworkConfig, derived: &DerivedRates, ewy: f64) -> f64 {
    let lambda = derived.lambda;
    let p = derived.end_to_end_success();
    let per_link: f64 = config
        .mu
        .iter()
        .zip(&derived.alpha)
        .map(|(m, a)| 1.0 / (m * lambda) + (1.0 - p) / (p * a * lambda))
        .sum();
    let lost = (1.0 - p) / (lambda * p);
    lambda * (ewy + per_link + 1.0 / (lambda * lambda * p) + lost * lost)
}

/// Bounds and approximation of the tagged source's average AoI.
pub fn aoi_bounds(config: &NetworkConfig, policy: Policy) -> Result<AoIBounds> {
    let derived = stable_rates(config)?;
    let lower_ewy = match policy {
        Policy::Fcfs => ewy_lower_fcfs(config, &derived)?,
        Policy::Opf | Policy::Haf => ewy_lower_opf(config, &derived)?,
    };
    let upper_ewy = ewy_upper(&derived)?;
    Ok(AoIBounds {
        lower: aoi_from_ewy(config, &derived, lower_ewy),
        upper: aoi_from_ewy(config, &derived, upper_ewy),
        approx: aoi_approx(config)?,
        policy,
    })
}

/// Distribution that stochastically dominates the peak AoI in the
/// error-free case: previous packet's network time, this packet's service
/// time and the interarrival time, all independent.
pub fn paoi_bound_distribution(config: &NetworkConfig) -> Result<HypoExp> {
    if config.eps.iter().any(|e| *e > 0.0) {
        return Err(Error::Unsupported("peak-AoI tail bound requires error-free links".into()));
    }
    let derived = stable_rates(config)?;
    let rates: Vec<f64> = derived
        .alpha
        .iter()
        .chain(&config.mu)
        .chain(std::iter::once(&derived.lambda))
        .cloned()
        .collect();
    HypoExp::from_rates(&rates)
}

/// Upper bound on `P(PAoI > tau)`.
pub fn paoi_tail_bound(config: &NetworkConfig, tau: f64) -> Result<f64> {
    Ok(paoi_bound_distribution(config)?.survival(tau))
}

/// Average AoI of a single FCFS M/M/1 queue.
pub fn mm1_aoi_exact(lambda: f64, mu: f64) -> Result<f64> {
    if !(lambda > 0.0 && mu > 0.0) {
        return Err(Error::InvalidConfig("rates must be positive".into()));
    }
    if lambda >= mu {
        return Err(Error::Unstable(vec![1]));
    }
    let rho = lambda / mu;
    Ok((1.0 + 1.0 / rho + rho * rho / (1.0 - rho)) / mu)
}
