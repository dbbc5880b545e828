//! Packet-level discrete-event simulation of relay networks.
//!
//! Sources are Poisson, relays are single exponential servers with an
//! erasure channel on their outgoing link, and every relay applies the same
//! [`Policy`]. Runs are deterministic given `(seed, replication)`.

mod engine;
mod network;
mod uplink;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use engine::{select_next, Delivery, FlowCounts, NodeRecord, NodeState, Packet};
pub use network::{broadcast, FlowSpec, Hop, Network, NodeSpec};
pub use uplink::{aloha_arrivals, aloha_survivors, mpr_thin, poisson_arrivals, poisson_arrivals_count};

use crate::error::{Error, Result};
use crate::model::{NetworkConfig, Policy, Uplink};
use engine::{FlowInput, RandomDraws, RawRun};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub policy: Policy,
    /// Packets generated by each tracked flow.
    pub n_pkt: usize,
    pub seed: u64,
    pub replication: u64,
    /// Fraction of each tracked flow's packets, by generation order, left
    /// out of the statistics window at the start and at the end.
    pub warmup_frac: f64,
    pub tail_frac: f64,
    pub record_departures: bool,
    pub allow_unstable: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            policy: Policy::Fcfs,
            n_pkt: 100_000,
            seed: 0,
            replication: 0,
            warmup_frac: 0.05,
            tail_frac: 0.05,
            record_departures: false,
            allow_unstable: false,
        }
    }
}

impl SimParams {
    pub fn new(policy: Policy, n_pkt: usize, seed: u64) -> SimParams {
        SimParams { policy, n_pkt, seed, ..SimParams::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_pkt < 2 {
            return Err(Error::InvalidConfig("need at least two packets per source".into()));
        }
        let ok = |f: f64| (0.0..0.5).contains(&f);
        if !ok(self.warmup_frac) || !ok(self.tail_frac) {
            return Err(Error::InvalidConfig("warm-up and tail fractions must lie in [0, 0.5)".into()));
        }
        Ok(())
    }
}

/// What one flow generated and what reached its destination.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub tracked: bool,
    pub generation_times: Vec<f64>,
    /// Deliveries in order of delivery time.
    pub deliveries: Vec<Delivery>,
    pub counts: FlowCounts,
    /// Statistics window `[start, end]`.
    pub window: (f64, f64),
    /// Generated packets left out before and after the window.
    pub discarded_warmup: usize,
    pub discarded_tail: usize,
}

impl FlowRecord {
    /// Deliveries of packets generated inside the window.
    pub fn windowed_deliveries(&self) -> impl Iterator<Item = &Delivery> {
        let (a, b) = self.window;
        self.deliveries.iter().filter(move |d| d.generated >= a && d.generated <= b)
    }

    /// Mean generation-to-delivery time over the window.
    pub fn mean_delay(&self) -> Option<f64> {
        let (n, s) = self
            .windowed_deliveries()
            .fold((0usize, 0.0), |(n, s), d| (n + 1, s + d.delivered - d.generated));
        (n > 0).then(|| s / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub policy: Policy,
    pub seed: u64,
    pub replication: u64,
    pub flows: Vec<FlowRecord>,
    pub nodes: Vec<NodeRecord>,
    /// Time of the last event.
    pub end_time: f64,
    /// 0-based nodes whose long-run load is at least one.
    pub unstable_nodes: Vec<usize>,
}

impl SimResult {
    pub fn unstable(&self) -> bool {
        !self.unstable_nodes.is_empty()
    }

    pub fn tracked(&self) -> impl Iterator<Item = (usize, &FlowRecord)> {
        self.flows.iter().enumerate().filter(|(_, f)| f.tracked)
    }
}

/// Independent generator for one `(seed, replication, lane)` triple.
pub fn stream_rng(seed: u64, replication: u64, lane: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(replication.to_le_bytes());
    h.update(lane.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn flow_input(flow: &FlowSpec, n_pkt: Option<usize>, horizon: f64, rng: &mut ChaCha8Rng) -> Result<FlowInput> {
    let generation_times = match n_pkt {
        Some(n) => poisson_arrivals_count(flow.rate, n, rng),
        None => poisson_arrivals(flow.rate, horizon, rng),
    };
    let entries = match flow.uplink {
        Uplink::Ideal => (0..generation_times.len()).collect(),
        Uplink::MprThinning { p_c } => (0..generation_times.len()).filter(|_| !(rng.random::<f64>() < p_c)).collect(),
        Uplink::Aloha { packet_duration } => aloha_survivors(&generation_times, packet_duration),
    };
    Ok(FlowInput { generation_times, entries })
}

fn finish(net: &Network, params: &SimParams, inputs: Vec<FlowInput>, raw: RawRun) -> SimResult {
    let RawRun { deliveries, counts, nodes, end_time } = raw;
    let flows = inputs
        .into_iter()
        .zip(deliveries)
        .zip(counts)
        .zip(&net.flows)
        .map(|(((input, deliveries), counts), spec)| {
            let n = input.generation_times.len();
            let (lo, hi, window) = if spec.tracked && n > 0 {
                let lo = (params.warmup_frac * n as f64).floor() as usize;
                let hi = n - (params.tail_frac * n as f64).floor() as usize;
                (lo, hi, (input.generation_times[lo], input.generation_times[hi - 1]))
            } else {
                (0, n, (0.0, end_time))
            };
            FlowRecord {
                tracked: spec.tracked,
                generation_times: if spec.tracked { input.generation_times } else { Vec::new() },
                deliveries: if spec.tracked { deliveries } else { Vec::new() },
                counts,
                window,
                discarded_warmup: lo,
                discarded_tail: n - hi,
            }
        })
        .collect();
    SimResult {
        policy: params.policy,
        seed: params.seed,
        replication: params.replication,
        flows,
        nodes,
        end_time,
        unstable_nodes: net.unstable_nodes(),
    }
}

/// Simulates `net` until every admitted packet has left. Tracked flows
/// generate `params.n_pkt` packets each; background flows run until the last
/// tracked generation.
pub fn simulate(net: &Network, params: &SimParams) -> Result<SimResult> {
    net.validate()?;
    params.validate()?;
    let unstable = net.unstable_nodes();
    if !unstable.is_empty() && !params.allow_unstable {
        return Err(Error::Unstable(unstable.iter().map(|n| n + 1).collect()));
    }
    let mut inputs = vec![FlowInput::default(); net.flows.len()];
    for (f, spec) in net.flows.iter().enumerate().filter(|(_, s)| s.tracked) {
        let mut rng = stream_rng(params.seed, params.replication, f as u64 + 1);
        inputs[f] = flow_input(spec, Some(params.n_pkt), 0.0, &mut rng)?;
    }
    let horizon = inputs
        .iter()
        .filter_map(|i| i.generation_times.last().copied())
        .fold(0.0, f64::max);
    for (f, spec) in net.flows.iter().enumerate().filter(|(_, s)| !s.tracked) {
        let mut rng = stream_rng(params.seed, params.replication, f as u64 + 1);
        inputs[f] = flow_input(spec, None, horizon, &mut rng)?;
    }
    let mut draws = RandomDraws::new(stream_rng(params.seed, params.replication, 0), net);
    let raw = engine::run(net, params.policy, &inputs, &mut draws, params.record_departures);
    Ok(finish(net, params, inputs, raw))
}

/// Simulates the tagged source of `config` with its cross traffic.
pub fn simulate_config(config: &NetworkConfig, params: &SimParams) -> Result<SimResult> {
    simulate(&Network::from_config(config)?, params)
}

/// Replays given generation times and per-node service times. Erasure and
/// offload decisions are drawn from `seed`. Every generated packet enters
/// the network.
///
/// # Panics
///
/// If a node runs out of scripted service times.
pub fn simulate_trace(
    net: &Network,
    policy: Policy,
    generation_times: &[Vec<f64>],
    service_times: &[Vec<f64>],
    seed: u64,
) -> Result<SimResult> {
    net.validate()?;
    if generation_times.len() != net.flows.len() || service_times.len() != net.nodes.len() {
        return Err(Error::InvalidConfig("trace does not match the network".into()));
    }
    let inputs: Vec<FlowInput> = generation_times
        .iter()
        .map(|t| FlowInput { generation_times: t.clone(), entries: (0..t.len()).collect() })
        .collect();
    let mut draws = engine::ScriptedDraws {
        service: service_times.iter().map(|s| s.iter().copied().collect()).collect(),
        rng: stream_rng(seed, 0, 0),
    };
    let params = SimParams {
        policy,
        seed,
        warmup_frac: 0.0,
        tail_frac: 0.0,
        allow_unstable: true,
        ..SimParams::default()
    };
    let raw = engine::run(net, policy, &inputs, &mut draws, true);
    Ok(finish(net, &params, inputs, raw))
}

#[cfg(test)]
mod tests;
