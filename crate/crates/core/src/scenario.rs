//! Scenario files: a TOML document describing a topology, its links, the
//! uplink, run settings and an optional one-parameter sweep.
//!
//! ```toml
//! [topology]
//! kind = "line"          # line | dumbbell | custom
//! k_links = 10           # line
//! n_sources = 6          # dumbbell
//! rho = 0.5              # line and dumbbell
//! lambda = 0.1           # custom: tagged-source rate
//! theta = [0.0, 0.2]     # custom: cross traffic per node
//! psi = [0.0, 0.0]       # custom: offload fraction per node
//!
//! [links]
//! mu_isl = 1.0
//! mu_dl = 0.8
//! mu = [1.0, 0.8]        # custom: per-link service rates
//! eps = 0.01             # scalar or per-link array
//!
//! [uplink]
//! model = "ideal"        # ideal | mpr | aloha
//! p_c = 0.1              # mpr
//! packet_duration = 1.0  # aloha
//!
//! [run]
//! policy = ["fcfs", "opf", "haf"]
//! n_pkt = 100000
//! seed = 1
//! replications = 1
//! warmup_frac = 0.05
//! tail_frac = 0.05
//! buffer_capacity = 50   # omit for infinite buffers
//! horizon = 1e6          # uplink-compare only
//!
//! [sweep]
//! parameter = "rho"      # rho | k_links | n_sources | eps | lambda | p_c | packet_duration
//! values = [0.1, 0.5, 0.9]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::desim::{broadcast, Network};
use crate::error::{Error, Result};
use crate::model::{NetworkConfig, Policy, Uplink, DUMBBELL_LINKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Line,
    Dumbbell,
    Custom,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Line => "line",
            TopologyKind::Dumbbell => "dumbbell",
            TopologyKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kind: TopologyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_links: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sources: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<f64>>,
}

fn default_mu_isl() -> f64 {
    1.0
}

fn default_mu_dl() -> f64 {
    0.8
}

fn default_eps() -> OneOrMany<f64> {
    OneOrMany::One(0.01)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinksSection {
    #[serde(default = "default_mu_isl")]
    pub mu_isl: f64,
    #[serde(default = "default_mu_dl")]
    pub mu_dl: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default = "default_eps")]
    pub eps: OneOrMany<f64>,
}

impl Default for LinksSection {
    fn default() -> Self {
        LinksSection { mu_isl: default_mu_isl(), mu_dl: default_mu_dl(), mu: None, eps: default_eps() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UplinkModel {
    #[default]
    Ideal,
    Mpr,
    Aloha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct UplinkSection {
    #[serde(default)]
    pub model: UplinkModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_duration: Option<f64>,
}

impl UplinkSection {
    fn resolve(&self) -> Result<Uplink> {
        match self.model {
            UplinkModel::Ideal => Ok(Uplink::Ideal),
            UplinkModel::Mpr => self
                .p_c
                .map(|p_c| Uplink::MprThinning { p_c })
                .ok_or_else(|| Error::Scenario("uplink model 'mpr' needs p_c".into())),
            UplinkModel::Aloha => self
                .packet_duration
                .map(|packet_duration| Uplink::Aloha { packet_duration })
                .ok_or_else(|| Error::Scenario("uplink model 'aloha' needs packet_duration".into())),
        }
    }
}

fn default_policy() -> OneOrMany<String> {
    OneOrMany::One("fcfs".into())
}

fn default_n_pkt() -> usize {
    100_000
}

fn default_replications() -> usize {
    1
}

fn default_frac() -> f64 {
    0.05
}

fn default_horizon() -> f64 {
    1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_policy")]
    pub policy: OneOrMany<String>,
    #[serde(default = "default_n_pkt")]
    pub n_pkt: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_frac")]
    pub warmup_frac: f64,
    #[serde(default = "default_frac")]
    pub tail_frac: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_capacity: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            policy: default_policy(),
            n_pkt: default_n_pkt(),
            seed: 0,
            replications: default_replications(),
            warmup_frac: default_frac(),
            tail_frac: default_frac(),
            buffer_capacity: None,
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Rho,
    KLinks,
    NSources,
    Eps,
    Lambda,
    PC,
    PacketDuration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologySection,
    #[serde(default)]
    pub links: LinksSection,
    #[serde(default)]
    pub uplink: UplinkSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// One fully resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub index: usize,
    pub sweep_value: Option<f64>,
    pub topology: TopologyKind,
    /// Links on the longest tracked route.
    pub k_links: usize,
    /// Tracked sources.
    pub n_sources: usize,
    /// Requested load, or the bottleneck load for custom topologies.
    pub rho: f64,
    pub network: Network,
}

impl Point {
    /// Single-source configuration of every tracked flow, in flow order.
    pub fn source_configs(&self) -> Result<Vec<NetworkConfig>> {
        self.network.tracked_flows().into_iter().map(|f| self.network.source_view(f)).collect()
    }
}

fn as_count(v: f64, name: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::Scenario(format!("{name} sweep value {v} is not a positive integer")))
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    /// Canonical TOML form: every default filled in, fixed key order.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(digest)[..16].to_string()
    }

    pub fn policies(&self) -> Result<Vec<Policy>> {
        let v = self.run.policy.to_vec();
        if v.is_empty() {
            return Err(Error::Scenario("run.policy is empty".into()));
        }
        v.iter().map(|p| p.parse()).collect()
    }

    fn check(&self) -> Result<()> {
        self.policies()?;
        if self.run.replications == 0 {
            return Err(Error::Scenario("run.replications must be at least 1".into()));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Scenario("sweep.values is empty".into()));
            }
        }
        Ok(())
    }

    /// The scenario with the sweep parameter set to `value`.
    fn at(&self, parameter: SweepParameter, value: f64) -> Result<Scenario> {
        let mut s = self.clone();
        s.sweep = None;
        match parameter {
            SweepParameter::Rho => s.topology.rho = Some(value),
            SweepParameter::KLinks => s.topology.k_links = Some(as_count(value, "k_links")?),
            SweepParameter::NSources => s.topology.n_sources = Some(as_count(value, "n_sources")?),
            SweepParameter::Eps => s.links.eps = OneOrMany::One(value),
            SweepParameter::Lambda => s.topology.lambda = Some(value),
            SweepParameter::PC => s.uplink.p_c = Some(value),
            SweepParameter::PacketDuration => s.uplink.packet_duration = Some(value),
        }
        Ok(s)
    }

    /// Every sweep point in sweep order; a scenario without a sweep has one.
    pub fn points(&self) -> Result<Vec<Point>> {
        match &self.sweep {
            None => Ok(vec![self.point(0, None)?]),
            Some(sweep) => sweep
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| self.at(sweep.parameter, v)?.point(i, Some(v)))
                .collect(),
        }
    }

    fn point(&self, index: usize, sweep_value: Option<f64>) -> Result<Point> {
        let t = &self.topology;
        let l = &self.links;
        let uplink = self.uplink.resolve()?;
        let eps = l.eps.to_vec();
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Scenario(format!("topology.{name} is required")));
        let (network, k_links, n_sources, rho) = match t.kind {
            TopologyKind::Line => {
                let k = t.k_links.ok_or_else(|| Error::Scenario("topology.k_links is required".into()))?;
                let rho = need(t.rho, "rho")?;
                (Network::line(k, rho, l.mu_isl, l.mu_dl, &eps, uplink)?, k, k, rho)
            }
            TopologyKind::Dumbbell => {
                let n = t.n_sources.ok_or_else(|| Error::Scenario("topology.n_sources is required".into()))?;
                let rho = need(t.rho, "rho")?;
                (Network::dumbbell(n, rho, l.mu_isl, l.mu_dl, &eps, uplink)?, DUMBBELL_LINKS, n, rho)
            }
            TopologyKind::Custom => {
                let mu = l.mu.clone().ok_or_else(|| Error::Scenario("links.mu is required for custom".into()))?;
                let k = mu.len();
                let config = NetworkConfig::new(
                    need(t.lambda, "lambda")?,
                    t.theta.clone().unwrap_or_else(|| vec![0.0; k]),
                    t.psi.clone().unwrap_or_else(|| vec![0.0; k]),
                    mu,
                    broadcast(&eps, k)?,
                )?
                .with_uplink(uplink)?;
                let net = Network::from_config(&config)?;
                let rho = net.node_loads().into_iter().fold(0.0, f64::max);
                (net, k, 1, rho)
            }
        };
        let network = network.with_buffer(self.run.buffer_capacity)?;
        Ok(Point { index, sweep_value, topology: t.kind, k_links, n_sources, rho, network })
    }
}
