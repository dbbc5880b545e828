//! Shared-node network description used by the simulator.

use crate::error::{Error, Result};
use crate::model::{self, NetworkConfig, Uplink};

/// One relay: exponential server and erasure channel on its outgoing link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSpec {
    pub mu: f64,
    pub eps: f64,
}

/// A hop of a route. After a successful transmission at `node` the packet
/// moves on with probability `continue_prob`; the last hop of a route always
/// delivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub node: usize,
    pub continue_prob: f64,
}

/// A Poisson packet stream and its route.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub rate: f64,
    pub route: Vec<Hop>,
    pub uplink: Uplink,
    /// Tracked flows generate a fixed number of packets and are reported;
    /// untracked flows are background traffic.
    pub tracked: bool,
}

impl FlowSpec {
    /// Rate entering the first hop after uplink losses.
    pub fn effective_rate(&self) -> f64 {
        self.rate * (1.0 - self.uplink.loss_probability(self.rate))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub nodes: Vec<NodeSpec>,
    pub flows: Vec<FlowSpec>,
    pub buffer_capacity: Option<usize>,
}

impl Network {
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidConfig("network has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !(n.mu > 0.0 && n.mu.is_finite()) {
                return Err(Error::InvalidConfig(format!("node {} needs a positive service rate", i + 1)));
            }
            if !(0.0..1.0).contains(&n.eps) {
                return Err(Error::InvalidConfig(format!("node {} erasure outside [0,1)", i + 1)));
            }
        }
        if !self.flows.iter().any(|f| f.tracked) {
            return Err(Error::InvalidConfig("network has no tracked flow".into()));
        }
        for (i, f) in self.flows.iter().enumerate() {
            if !(f.rate > 0.0 && f.rate.is_finite()) {
                return Err(Error::InvalidConfig(format!("flow {i} needs a positive rate")));
            }
            if f.route.is_empty() {
                return Err(Error::InvalidConfig(format!("flow {i} has an empty route")));
            }
            for (h, hop) in f.route.iter().enumerate() {
                if hop.node >= self.nodes.len() {
                    return Err(Error::IndexOutOfRange { index: hop.node, k: self.nodes.len() });
                }
                if !(0.0..=1.0).contains(&hop.continue_prob) {
                    return Err(Error::InvalidConfig(format!("flow {i} hop {h} has a bad continue probability")));
                }
                if f.route[..h].iter().any(|o| o.node == hop.node) {
                    return Err(Error::InvalidConfig(format!("flow {i} visits node {} twice", hop.node)));
                }
            }
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::InvalidConfig("buffer capacity must be positive".into()));
        }
        Ok(())
    }

    /// The tagged source of `config` as flow 0, plus one background stream
    /// per node that has exogenous traffic.
    pub fn from_config(config: &NetworkConfig) -> Result<Network> {
        config.validate()?;
        let k = config.k_links;
        let nodes = (0..k).map(|j| NodeSpec { mu: config.mu[j], eps: config.eps[j] }).collect();
        let mut flows = vec![FlowSpec {
            rate: config.lambda,
            route: (0..k).map(|j| Hop { node: j, continue_prob: 1.0 }).collect(),
            uplink: config.uplink,
            tracked: true,
        }];
        for j in 0..k {
            if config.theta[j] > 0.0 {
                flows.push(FlowSpec {
                    rate: config.theta[j],
                    route: (j..k).map(|m| Hop { node: m, continue_prob: 1.0 - config.psi[m] }).collect(),
                    uplink: Uplink::Ideal,
                    tracked: false,
                });
            }
        }
        let net = Network { nodes, flows, buffer_capacity: config.buffer_capacity };
        net.validate()?;
        Ok(net)
    }

    /// `K` relays in a chain towards one ground station. Source `k` enters at
    /// relay `k`; all sources share the per-source rate `rho * mu_dl / K`.
    pub fn line(k: usize, rho: f64, mu_isl: f64, mu_dl: f64, eps: &[f64], uplink: Uplink) -> Result<Network> {
        let base = model::line_scenario(k, rho, mu_isl, mu_dl, 0.0)?;
        let eps = broadcast(eps, k)?;
        let nodes = (0..k).map(|j| NodeSpec { mu: base.mu[j], eps: eps[j] }).collect();
        let flows = (0..k)
            .map(|s| FlowSpec {
                rate: base.lambda,
                route: (s..k).map(|j| Hop { node: j, continue_prob: 1.0 }).collect(),
                uplink,
                tracked: true,
            })
            .collect();
        let net = Network { nodes, flows, buffer_capacity: None };
        net.validate()?;
        Ok(net)
    }

    /// `n` symmetric flows that meet at one shared relay. Flow `i` uses a
    /// private relay, the shared relay, a second private relay and a private
    /// downlink. Node `0` is the shared relay.
    pub fn dumbbell(n: usize, rho: f64, mu_isl: f64, mu_dl: f64, eps: &[f64], uplink: Uplink) -> Result<Network> {
        let base = model::dumbbell_scenario(n, rho, mu_isl, mu_dl, 0.0)?;
        let eps = broadcast(eps, model::DUMBBELL_LINKS)?;
        let mut nodes = vec![NodeSpec { mu: base.mu[1], eps: eps[1] }];
        let mut flows = Vec::with_capacity(n);
        for _ in 0..n {
            let first = nodes.len();
            nodes.push(NodeSpec { mu: base.mu[0], eps: eps[0] });
            nodes.push(NodeSpec { mu: base.mu[2], eps: eps[2] });
            nodes.push(NodeSpec { mu: base.mu[3], eps: eps[3] });
            flows.push(FlowSpec {
                rate: base.lambda,
                route: [first, 0, first + 1, first + 2]
                    .into_iter()
                    .map(|node| Hop { node, continue_prob: 1.0 })
                    .collect(),
                uplink,
                tracked: true,
            });
        }
        let net = Network { nodes, flows, buffer_capacity: None };
        net.validate()?;
        Ok(net)
    }

    pub fn with_buffer(mut self, capacity: Option<usize>) -> Result<Network> {
        self.buffer_capacity = capacity;
        self.validate()?;
        Ok(self)
    }

    pub fn tracked_flows(&self) -> Vec<usize> {
        (0..self.flows.len()).filter(|&f| self.flows[f].tracked).collect()
    }

    /// Per-hop rate of `flow` arriving at each node of its route.
    fn hop_rates(&self, flow: usize) -> Vec<f64> {
        let f = &self.flows[flow];
        let mut r = f.effective_rate();
        f.route
            .iter()
            .map(|hop| {
                let here = r;
                r *= (1.0 - self.nodes[hop.node].eps) * hop.continue_prob;
                here
            })
            .collect()
    }

    /// Long-run arrival rate at every node.
    pub fn node_arrival_rates(&self) -> Vec<f64> {
        let mut rates = vec![0.0; self.nodes.len()];
        for f in 0..self.flows.len() {
            for (hop, r) in self.flows[f].route.iter().zip(self.hop_rates(f)) {
                rates[hop.node] += r;
            }
        }
        rates
    }

    pub fn node_loads(&self) -> Vec<f64> {
        self.node_arrival_rates().iter().zip(&self.nodes).map(|(a, n)| a / n.mu).collect()
    }

    /// 0-based indices of nodes whose load is at least one.
    pub fn unstable_nodes(&self) -> Vec<usize> {
        self.node_loads()
            .iter()
            .enumerate()
            .filter(|(_, &l)| l >= 1.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// The path of `flow` as a single-source configuration, with the other
    /// flows folded into per-node cross traffic and offload fractions.
    pub fn source_view(&self, flow: usize) -> Result<NetworkConfig> {
        let f = self.flows.get(flow).ok_or(Error::IndexOutOfRange { index: flow, k: self.flows.len() })?;
        let path: Vec<usize> = f.route.iter().map(|h| h.node).collect();
        let k = path.len();
        // other[h]: foreign rate arriving at path node h.
        // carried[h]: foreign rate that leaves path node h towards path node h+1.
        let mut other = vec![0.0; k];
        let mut carried = vec![0.0; k];
        for g in (0..self.flows.len()).filter(|&g| g != flow) {
            let route = &self.flows[g].route;
            let rates = self.hop_rates(g);
            for (i, hop) in route.iter().enumerate() {
                let Some(h) = path.iter().position(|&n| n == hop.node) else { continue };
                other[h] += rates[i];
                if h + 1 < k && i + 1 < route.len() && route[i + 1].node == path[h + 1] {
                    carried[h] += rates[i + 1];
                }
            }
        }
        let mut theta = vec![0.0; k];
        let mut psi = vec![0.0; k];
        for h in 0..k {
            theta[h] = if h == 0 { other[0] } else { (other[h] - carried[h - 1]).max(0.0) };
            let served = other[h] * (1.0 - self.nodes[path[h]].eps);
            psi[h] = if h + 1 < k && served > 0.0 { (1.0 - carried[h] / served).clamp(0.0, 1.0) } else { 0.0 };
        }
        let mu = path.iter().map(|&n| self.nodes[n].mu).collect();
        let eps = path.iter().map(|&n| self.nodes[n].eps).collect();
        NetworkConfig::new(f.rate, theta, psi, mu, eps)?
            .with_uplink(f.uplink)?
            .with_buffer(self.buffer_capacity)
    }
}

/// Expands a scalar to `k` copies; a slice of length `k` is used as is.
pub fn broadcast(values: &[f64], k: usize) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; k]),
        n if n == k => Ok(values.to_vec()),
        n => Err(Error::InvalidConfig(format!("expected 1 or {k} values, got {n}"))),
    }
}
