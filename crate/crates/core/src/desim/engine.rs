//! Event loop, relay state and scheduling.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::network::Network;
use crate::model::Policy;

/// A packet waiting at a relay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub source: usize,
    pub seq: usize,
    pub generated: f64,
    pub node_arrival: f64,
    order: u64,
    hop: usize,
}

impl Packet {
    pub fn new(source: usize, seq: usize, generated: f64, node_arrival: f64) -> Packet {
        Packet { source, seq, generated, node_arrival, order: 0, hop: 0 }
    }
}

/// Queue contents and scheduling memory of one relay. Packets are held in
/// one FIFO per source, so every policy picks among the source heads.
#[derive(Debug, Clone)]
pub struct NodeState {
    queues: Vec<VecDeque<Packet>>,
    queued: usize,
    in_service: Option<Packet>,
    freshest: Vec<Option<f64>>,
    next_order: u64,
}

impl NodeState {
    pub fn new(n_sources: usize) -> NodeState {
        NodeState {
            queues: vec![VecDeque::new(); n_sources],
            queued: 0,
            in_service: None,
            freshest: vec![None; n_sources],
            next_order: 0,
        }
    }

    pub fn enqueue(&mut self, mut packet: Packet) {
        packet.order = self.next_order;
        self.next_order += 1;
        self.queues[packet.source].push_back(packet);
        self.queued += 1;
    }

    /// Packets waiting, excluding the one in service.
    pub fn queued(&self) -> usize {
        self.queued
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    /// Generation time of the freshest packet of `source` this relay has
    /// finished transmitting.
    pub fn freshest_forwarded(&self, source: usize) -> Option<f64> {
        self.freshest[source]
    }

    pub fn mark_forwarded(&mut self, source: usize, generated: f64) {
        let slot = &mut self.freshest[source];
        if slot.is_none_or(|g| generated > g) {
            *slot = Some(generated);
        }
    }

    fn pop(&mut self, source: usize) -> Packet {
        self.queued -= 1;
        self.queues[source].pop_front().expect("selected queue is non-empty")
    }
}

fn fcfs_key(p: &Packet) -> (f64, u64) {
    (p.node_arrival, p.order)
}

fn opf_key(p: &Packet) -> (f64, f64, u64) {
    (p.generated, p.node_arrival, p.order)
}

fn select_source(node: &NodeState, policy: Policy, now: f64) -> Option<usize> {
    let heads = node.queues.iter().enumerate().filter_map(|(s, q)| q.front().map(|p| (s, p)));
    let best = match policy {
        Policy::Fcfs => heads.min_by(|a, b| fcfs_key(a.1).partial_cmp(&fcfs_key(b.1)).unwrap_or(Ordering::Equal)),
        Policy::Opf => heads.min_by(|a, b| opf_key(a.1).partial_cmp(&opf_key(b.1)).unwrap_or(Ordering::Equal)),
        Policy::Haf => {
            let age = |s: usize| node.freshest[s].map_or(f64::INFINITY, |g| now - g);
            heads.min_by(|a, b| {
                age(b.0)
                    .total_cmp(&age(a.0))
                    .then_with(|| opf_key(a.1).partial_cmp(&opf_key(b.1)).unwrap_or(Ordering::Equal))
            })
        }
    };
    best.map(|(s, _)| s)
}

/// The packet `policy` serves next at `node`, or `None` if nothing waits.
///
/// FCFS takes the earliest node arrival. OPF takes the oldest generation
/// time. HAF takes the source whose freshest packet forwarded by this relay
/// is oldest, a source never forwarded counting as infinitely old, and
/// breaks ties as OPF.
pub fn select_next(node: &NodeState, policy: Policy, now: f64) -> Option<&Packet> {
    select_source(node, policy, now).and_then(|s| node.queues[s].front())
}

/// Randomness consumed by the event loop.
pub(crate) trait Draws {
    fn service(&mut self, node: usize) -> f64;
    fn uniform(&mut self) -> f64;
}

pub(crate) struct RandomDraws {
    rng: ChaCha8Rng,
    exp: Vec<Exp<f64>>,
}

impl RandomDraws {
    pub(crate) fn new(rng: ChaCha8Rng, net: &Network) -> RandomDraws {
        let exp = net.nodes.iter().map(|n| Exp::new(n.mu).expect("validated rate")).collect();
        RandomDraws { rng, exp }
    }
}

impl Draws for RandomDraws {
    fn service(&mut self, node: usize) -> f64 {
        self.exp[node].sample(&mut self.rng)
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

/// Replays fixed service times; uniforms still come from `rng`.
pub(crate) struct ScriptedDraws {
    pub(crate) service: Vec<VecDeque<f64>>,
    pub(crate) rng: ChaCha8Rng,
}

impl Draws for ScriptedDraws {
    fn service(&mut self, node: usize) -> f64 {
        self.service[node].pop_front().expect("scripted service time available")
    }

    fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

/// Generation times of one flow and the indices of those that reach the
/// first relay.
#[derive(Debug, Clone, Default)]
pub(crate) struct FlowInput {
    pub(crate) generation_times: Vec<f64>,
    pub(crate) entries: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub seq: usize,
    pub generated: f64,
    pub delivered: f64,
}

/// Packet accounting of one flow.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowCounts {
    pub generated: usize,
    pub uplink_lost: usize,
    /// Lost to a full waiting room.
    pub dropped: usize,
    /// Erasures per hop of the route.
    pub erased: Vec<usize>,
    pub offloaded: usize,
    pub delivered: usize,
}

impl FlowCounts {
    pub fn total_erased(&self) -> usize {
        self.erased.iter().sum()
    }
}

/// Time-integrated observations of one relay.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeRecord {
    /// Packets admitted to the relay.
    pub arrivals: usize,
    pub dropped: usize,
    pub departures: usize,
    /// Integral of the number in system over time.
    pub occupancy_area: f64,
    pub sojourn_total: f64,
    pub busy_time: f64,
    /// Departure instants, kept only on request.
    pub departure_times: Vec<f64>,
}

pub(crate) struct RawRun {
    pub(crate) deliveries: Vec<Vec<Delivery>>,
    pub(crate) counts: Vec<FlowCounts>,
    pub(crate) nodes: Vec<NodeRecord>,
    pub(crate) end_time: f64,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Enter { flow: usize },
    Complete { node: usize },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    order: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that the max-heap pops the earliest event.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.order.cmp(&self.order))
    }
}

struct Engine<'a, D: Draws> {
    net: &'a Network,
    policy: Policy,
    draws: &'a mut D,
    inputs: &'a [FlowInput],
    cursor: Vec<usize>,
    heap: BinaryHeap<Event>,
    order: u64,
    state: Vec<NodeState>,
    last_change: Vec<f64>,
    record_departures: bool,
    out: RawRun,
}

impl<D: Draws> Engine<'_, D> {
    fn push(&mut self, time: f64, kind: Kind) {
        self.heap.push(Event { time, order: self.order, kind });
        self.order += 1;
    }

    fn schedule_entry(&mut self, flow: usize) {
        let inputs = self.inputs;
        let input = &inputs[flow];
        if let Some(&idx) = input.entries.get(self.cursor[flow]) {
            let t = input.generation_times[idx];
            self.push(t, Kind::Enter { flow });
        }
    }

    fn in_system(&self, node: usize) -> usize {
        self.state[node].queued() + usize::from(self.state[node].is_busy())
    }

    fn advance_area(&mut self, node: usize, now: f64) {
        let dt = now - self.last_change[node];
        let n = self.in_system(node) as f64;
        let rec = &mut self.out.nodes[node];
        rec.occupancy_area += n * dt;
        if self.state[node].is_busy() {
            rec.busy_time += dt;
        }
        self.last_change[node] = now;
    }

    fn start_service(&mut self, node: usize, packet: Packet, now: f64) {
        self.state[node].in_service = Some(packet);
        let s = self.draws.service(node);
        self.push(now + s, Kind::Complete { node });
    }

    fn arrive(&mut self, node: usize, packet: Packet, now: f64) {
        self.advance_area(node, now);
        if !self.state[node].is_busy() {
            debug_assert_eq!(self.state[node].queued(), 0, "idle relay with waiting packets");
            self.out.nodes[node].arrivals += 1;
            self.start_service(node, packet, now);
        } else if self.net.buffer_capacity.is_some_and(|c| self.state[node].queued() >= c) {
            self.out.nodes[node].dropped += 1;
            self.out.counts[packet.source].dropped += 1;
        } else {
            self.out.nodes[node].arrivals += 1;
            self.state[node].enqueue(packet);
        }
    }

    fn enter(&mut self, flow: usize, now: f64) {
        let inputs = self.inputs;
        let input = &inputs[flow];
        let seq = input.entries[self.cursor[flow]];
        self.cursor[flow] += 1;
        let packet = Packet::new(flow, seq, input.generation_times[seq], now);
        let node = self.net.flows[flow].route[0].node;
        self.arrive(node, packet, now);
        self.schedule_entry(flow);
    }

    fn complete(&mut self, node: usize, now: f64) {
        self.advance_area(node, now);
        let packet = self.state[node].in_service.take().expect("completion at a busy relay");
        let rec = &mut self.out.nodes[node];
        rec.departures += 1;
        rec.sojourn_total += now - packet.node_arrival;
        if self.record_departures {
            rec.departure_times.push(now);
        }
        self.state[node].mark_forwarded(packet.source, packet.generated);

        if let Some(source) = select_source(&self.state[node], self.policy, now) {
            let next = self.state[node].pop(source);
            self.start_service(node, next, now);
        }

        let route = &self.net.flows[packet.source].route;
        let hop = route[packet.hop];
        let eps = self.net.nodes[node].eps;
        if eps > 0.0 && self.draws.uniform() < eps {
            self.out.counts[packet.source].erased[packet.hop] += 1;
        } else if packet.hop + 1 == route.len() {
            let c = &mut self.out.counts[packet.source];
            c.delivered += 1;
            self.out.deliveries[packet.source].push(Delivery {
                seq: packet.seq,
                generated: packet.generated,
                delivered: now,
            });
        } else if hop.continue_prob < 1.0 && !(self.draws.uniform() < hop.continue_prob) {
            self.out.counts[packet.source].offloaded += 1;
        } else {
            let next_node = route[packet.hop + 1].node;
            let moved = Packet { node_arrival: now, hop: packet.hop + 1, ..packet };
            self.arrive(next_node, moved, now);
        }
    }
}

/// Runs the event loop until every admitted packet has left the network.
pub(crate) fn run<D: Draws>(
    net: &Network,
    policy: Policy,
    inputs: &[FlowInput],
    draws: &mut D,
    record_departures: bool,
) -> RawRun {
    let n_flows = net.flows.len();
    let n_nodes = net.nodes.len();
    let counts = (0..n_flows)
        .map(|f| FlowCounts {
            generated: inputs[f].generation_times.len(),
            uplink_lost: inputs[f].generation_times.len() - inputs[f].entries.len(),
            erased: vec![0; net.flows[f].route.len()],
            ..FlowCounts::default()
        })
        .collect();
    let mut engine = Engine {
        net,
        policy,
        draws,
        inputs,
        cursor: vec![0; n_flows],
        heap: BinaryHeap::with_capacity(n_flows + n_nodes),
        order: 0,
        state: vec![NodeState::new(n_flows); n_nodes],
        last_change: vec![0.0; n_nodes],
        record_departures,
        out: RawRun {
            deliveries: inputs.iter().map(|i| Vec::with_capacity(i.entries.len())).collect(),
            counts,
            nodes: vec![NodeRecord::default(); n_nodes],
            end_time: 0.0,
        },
    };
    for f in 0..n_flows {
        engine.schedule_entry(f);
    }
    let mut now = 0.0;
    while let Some(ev) = engine.heap.pop() {
        debug_assert!(ev.time >= now, "event time went backwards");
        now = ev.time;
        match ev.kind {
            Kind::Enter { flow } => engine.enter(flow, now),
            Kind::Complete { node } => engine.complete(node, now),
        }
    }
    for node in 0..n_nodes {
        engine.advance_area(node, now);
    }
    engine.out.end_time = now;
    engine.out
}
