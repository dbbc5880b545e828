//! Tagged-source view of a multi-hop relay path and its steady-state rates.
//!
//! A [`NetworkConfig`] describes one source whose packets traverse `K` links
//! in series. Node `k` (1-based) transmits over link `k` with exponential
//! service rate `mu[k-1]`; the transmission is erased with probability
//! `eps[k-1]`. Cross traffic of rate `theta[k-1]` joins at node `k`, and a
//! fraction `psi[k-1]` of all cross traffic served at node `k` leaves the path
//! afterwards.

use crate::error::{Error, Result};

/// How packets of the tagged source reach the first relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Uplink {
    /// Every generated packet enters node 1.
    Ideal,
    /// Multi-packet reception: each packet is independently lost with
    /// probability `p_c` before the first queue.
    MprThinning { p_c: f64 },
    /// Pure ALOHA with a single attempt: a transmission survives only if no
    /// other transmission of the same source starts within `packet_duration`
    /// of it.
    Aloha { packet_duration: f64 },
}

impl Uplink {
    /// Probability that a generated packet is lost on the uplink when the
    /// offered rate is `lambda`.
    pub fn loss_probability(&self, lambda: f64) -> f64 {
        match *self {
            Uplink::Ideal => 0.0,
            Uplink::MprThinning { p_c } => p_c,
            Uplink::Aloha { packet_duration } => 1.0 - (-2.0 * lambda * packet_duration).exp(),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Uplink::Ideal => Ok(()),
            Uplink::MprThinning { p_c } if (0.0..1.0).contains(&p_c) => Ok(()),
            Uplink::MprThinning { p_c } => Err(Error::InvalidConfig(format!(
                "uplink loss probability {p_c} outside [0,1)"
            ))),
            Uplink::Aloha { packet_duration } if packet_duration > 0.0 && packet_duration.is_finite() => Ok(()),
            Uplink::Aloha { packet_duration } => Err(Error::InvalidConfig(format!(
                "packet duration {packet_duration} must be positive"
            ))),
        }
    }
}

/// One source's path through `K` links.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub k_links: usize,
    pub lambda: f64,
    pub theta: Vec<f64>,
    pub psi: Vec<f64>,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub uplink: Uplink,
    /// Waiting-room size per node; `None` is an infinite buffer.
    pub buffer_capacity: Option<usize>,
}

impl NetworkConfig {
    /// Builds and validates a configuration with an ideal uplink and infinite
    /// buffers.
    pub fn new(lambda: f64, theta: Vec<f64>, psi: Vec<f64>, mu: Vec<f64>, eps: Vec<f64>) -> Result<Self> {
        let config = NetworkConfig {
            k_links: mu.len(),
            lambda,
            theta,
            psi,
            mu,
            eps,
            uplink: Uplink::Ideal,
            buffer_capacity: None,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_uplink(mut self, uplink: Uplink) -> Result<Self> {
        self.uplink = uplink;
        self.validate()?;
        Ok(self)
    }

    pub fn with_buffer(mut self, capacity: Option<usize>) -> Result<Self> {
        self.buffer_capacity = capacity;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k_links;
        if k == 0 {
            return Err(Error::InvalidConfig("path needs at least one link".into()));
        }
        for (name, v) in [("theta", &self.theta), ("psi", &self.psi), ("mu", &self.mu), ("eps", &self.eps)] {
            if v.len() != k {
                return Err(Error::InvalidConfig(format!("{name} has length {} but K = {k}", v.len())));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("source rate {} must be non-negative", self.lambda)));
        }
        if self.theta.iter().chain(&self.mu).any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidConfig("rates must be finite and non-negative".into()));
        }
        if self.psi.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("offload fractions must lie in [0,1]".into()));
        }
        if self.eps.iter().any(|e| !(0.0..1.0).contains(e)) {
            return Err(Error::InvalidConfig("erasure probabilities must lie in [0,1)".into()));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::InvalidConfig("buffer capacity must be positive".into()));
        }
        self.uplink.validate()
    }

    /// Rate at which the tagged source's packets enter node 1.
    pub fn effective_lambda(&self) -> f64 {
        self.lambda * (1.0 - self.uplink.loss_probability(self.lambda))
    }

    /// Probability of surviving links `1..=j`; `p_s(0) = 1`.
    pub fn success_probability(&self, j: usize) -> f64 {
        self.eps[..j.min(self.k_links)].iter().map(|e| 1.0 - e).product()
    }
}

/// Aggregate cross-traffic load arriving at node `k` (1-based).
pub fn cross_traffic_load(config: &NetworkConfig, k: usize) -> Result<f64> {
    if k == 0 || k > config.k_links {
        return Err(Error::IndexOutOfRange { index: k, k: config.k_links });
    }
    let total = (1..=k)
        .map(|j| {
            let carried: f64 = (j..k)
                .map(|i| (1.0 - config.psi[i - 1]) * (1.0 - config.eps[i - 1]))
                .product();
            config.theta[j - 1] * carried
        })
        .sum();
    Ok(total)
}

/// Steady-state rates derived from a [`NetworkConfig`]. All vectors are
/// indexed by node, 0-based; `p_s` has `K + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRates {
    /// Tagged-source rate into node 1, after uplink losses.
    pub lambda: f64,
    pub mu: Vec<f64>,
    pub theta_bar: Vec<f64>,
    pub p_s: Vec<f64>,
    pub arrival_rate: Vec<f64>,
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl DerivedRates {
    pub fn k_links(&self) -> usize {
        self.mu.len()
    }

    /// End-to-end delivery probability `p_s(K)`.
    pub fn end_to_end_success(&self) -> f64 {
        self.p_s[self.k_links()]
    }

    pub fn is_stable(&self) -> bool {
        stability_check(self).is_empty()
    }

    pub fn require_stable(&self) -> Result<()> {
        let bad = stability_check(self);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Unstable(bad))
        }
    }
}

/// Arrival rates, utilizations and response rates at every node.
///
/// Tagged packets reaching node `j` have survived links `1..j-1`, so the
/// node-`j` arrival rate is `lambda * p_s(j-1) + theta_bar_j`.
pub fn derived_rates(config: &NetworkConfig) -> DerivedRates {
    let k = config.k_links;
    let lambda = config.effective_lambda();
    let p_s: Vec<f64> = (0..=k).map(|j| config.success_probability(j)).collect();
    let theta_bar: Vec<f64> = (1..=k)
        .map(|j| cross_traffic_load(config, j).expect("index within 1..=K"))
        .collect();
    let arrival_rate: Vec<f64> = (0..k).map(|j| lambda * p_s[j] + theta_bar[j]).collect();
    let rho = arrival_rate.iter().zip(&config.mu).map(|(a, m)| a / m).collect();
    let alpha = arrival_rate.iter().zip(&config.mu).map(|(a, m)| m - a).collect();
    DerivedRates {
        lambda,
        mu: config.mu.clone(),
        theta_bar,
        p_s,
        arrival_rate,
        rho,
        alpha,
    }
}

/// 1-based indices of nodes with utilization `>= 1`.
pub fn stability_check(derived: &DerivedRates) -> Vec<usize> {
    derived
        .rho
        .iter()
        .enumerate()
        .filter(|(_, r)| !(**r < 1.0))
        .map(|(j, _)| j + 1)
        .collect()
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
    }
}

/// Per-source rate in the line network at error-free downlink load `rho`.
pub fn line_source_rate(k: usize, rho: f64, mu_dl: f64) -> f64 {
    rho * mu_dl / k as f64
}

/// Line network seen by the source at node 1: `K` relays, one aggregated
/// ground source per relay, everything routed to the same ground station.
pub fn line_scenario(k: usize, rho: f64, mu_isl: f64, mu_dl: f64, eps: f64) -> Result<NetworkConfig> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be at least 1".into()));
    }
    require_positive("rho", rho)?;
    require_positive("mu_isl", mu_isl)?;
    require_positive("mu_dl", mu_dl)?;
    let lambda = line_source_rate(k, rho, mu_dl);
    let mut theta = vec![lambda; k];
    theta[0] = 0.0;
    let mut mu = vec![mu_isl; k];
    mu[k - 1] = mu_dl;
    NetworkConfig::new(lambda, theta, vec![0.0; k], mu, vec![eps; k])
}

/// Number of links in the dumbbell topology.
pub const DUMBBELL_LINKS: usize = 4;

/// Per-source rate in the dumbbell at bottleneck load `rho`. The load is
/// normalized by the downlink rate.
pub fn dumbbell_source_rate(n_sources: usize, rho: f64, mu_dl: f64) -> f64 {
    rho * mu_dl / n_sources as f64
}

/// Dumbbell seen by one of `n_sources` symmetric flows: private first link,
/// shared second link, private third link and downlink. The other flows'
/// traffic joins at node 2, after surviving their own first link, and leaves
/// after being served there.
pub fn dumbbell_scenario(n_sources: usize, rho: f64, mu_isl: f64, mu_dl: f64, eps: f64) -> Result<NetworkConfig> {
    if n_sources == 0 {
        return Err(Error::InvalidConfig("dumbbell needs at least one source".into()));
    }
    require_positive("rho", rho)?;
    require_positive("mu_isl", mu_isl)?;
    require_positive("mu_dl", mu_dl)?;
    let lambda = dumbbell_source_rate(n_sources, rho, mu_dl);
    let k = DUMBBELL_LINKS;
    let mut theta = vec![0.0; k];
    theta[1] = (n_sources - 1) as f64 * lambda * (1.0 - eps);
    let mut psi = vec![0.0; k];
    psi[1] = 1.0;
    let mut mu = vec![mu_isl; k];
    mu[k - 1] = mu_dl;
    NetworkConfig::new(lambda, theta, psi, mu, vec![eps; k])
}

/// Scheduling discipline applied at every relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// First come, first served by node arrival time.
    Fcfs,
    /// Oldest packet first: smallest generation timestamp.
    Opf,
    /// Highest age first: the source whose freshest forwarded packet is
    /// oldest.
    Haf,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Fcfs, Policy::Opf, Policy::Haf];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Fcfs => "fcfs",
            Policy::Opf => "opf",
            Policy::Haf => "haf",
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fcfs" => Ok(Policy::Fcfs),
            "opf" => Ok(Policy::Opf),
            "haf" => Ok(Policy::Haf),
            other => Err(Error::InvalidConfig(format!("unknown policy '{other}'"))),
        }
    }
}
