//! Command-line front end: closed-form sweeps, simulation sweeps, peak-age
//! tails and the ALOHA interdeparture comparison, all written as CSV.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{aoi_bounds, mean_network_time, paoi_bound_distribution};
use crate::desim::{aloha_arrivals, simulate, stream_rng, SimParams};
use crate::error::{Error, Result};
use crate::model::{derived_rates, stability_check, Policy};
use crate::scenario::{Point, Scenario, SweepParameter};
use crate::stats::{self, DEFAULT_BATCHES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;

pub const SIMULATE_HEADER: [&str; 18] = [
    "scenario_hash",
    "seed",
    "topology",
    "K",
    "N",
    "rho",
    "policy",
    "source_id",
    "mean_aoi",
    "se_aoi",
    "mean_paoi",
    "paoi_p99",
    "mean_delay",
    "jfi",
    "aoi_lower",
    "aoi_upper",
    "aoi_approx",
    "losses",
];

pub const ANALYZE_HEADER: [&str; 15] = [
    "scenario_hash",
    "seed",
    "topology",
    "K",
    "N",
    "rho",
    "lambda",
    "policy",
    "source_id",
    "aoi_lower",
    "aoi_upper",
    "aoi_approx",
    "mean_delay",
    "status",
    "diagnostic",
];

pub const TAIL_HEADER: [&str; 12] = [
    "scenario_hash",
    "seed",
    "topology",
    "K",
    "N",
    "rho",
    "policy",
    "source_id",
    "tau",
    "empirical_cdf",
    "bound_cdf",
    "dkw",
];

pub const UPLINK_HEADER: [&str; 11] = [
    "scenario_hash",
    "seed",
    "lambda_a",
    "packet_duration",
    "tau",
    "empirical_cdf",
    "exponential_cdf",
    "survivor_rate",
    "expected_rate",
    "se_rate",
    "ks",
];

#[derive(Debug, Parser)]
#[command(name = "tandem-aoi", version, about = "AoI bounds and simulation for multi-hop relay networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form bounds, approximation and mean delay per sweep point.
    Analyze(CommonArgs),
    /// Simulated AoI, peak AoI, delay and fairness next to the closed forms.
    Simulate(CommonArgs),
    /// Empirical peak-AoI CDF of source 1 against the tail bound.
    Tail(TailArgs),
    /// Interdeparture times of ALOHA survivors against a thinned Poisson process.
    UplinkCompare(UplinkArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Overrides run.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores if omitted.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Largest τ on the grid; defaults to where the bound's survival drops below 1e-4.
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub tau_points: usize,
}

#[derive(Debug, Args)]
pub struct UplinkArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 200)]
    pub tau_points: usize,
}

type Row = Vec<String>;

fn num(x: f64) -> String {
    format!("{x}")
}

fn to_csv(header: &[&str], rows: &[Row]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::InvalidConfig(format!("csv: {e}")))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::InvalidConfig("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(f))
}

fn point_prefix(hash: &str, seed: u64, p: &Point) -> Row {
    vec![
        hash.to_string(),
        seed.to_string(),
        p.topology.as_str().to_string(),
        p.k_links.to_string(),
        p.n_sources.to_string(),
        num(p.rho),
    ]
}

/// Closed-form CSV and whether any point was unstable.
pub fn analyze_csv(scenario: &Scenario, seed: Option<u64>) -> Result<(Vec<u8>, bool)> {
    let hash = scenario.hash();
    let seed = seed.unwrap_or(scenario.run.seed);
    let policies = scenario.policies()?;
    let mut rows = Vec::new();
    let mut unstable = false;
    for point in scenario.points()? {
        let configs = point.source_configs()?;
        for &policy in &policies {
            for (s, config) in configs.iter().enumerate() {
                let mut row = point_prefix(&hash, seed, &point);
                row.extend([num(config.effective_lambda()), policy.to_string(), (s + 1).to_string()]);
                let derived = derived_rates(config);
                let bad = stability_check(&derived);
                if !bad.is_empty() {
                    unstable = true;
                    let loads: Vec<String> = bad.iter().map(|&j| format!("{j}:{}", num(derived.rho[j - 1]))).collect();
                    row.extend(["", "", "", "", "unstable"].map(String::from));
                    row.push(format!("load>=1 at nodes {}", loads.join(" ")));
                } else {
                    match aoi_bounds(config, policy).and_then(|b| Ok((b, mean_network_time(&derived)?))) {
                        Ok((b, delay)) => {
                            row.extend([num(b.lower), num(b.upper), num(b.approx), num(delay)]);
                            row.extend(["ok".to_string(), String::new()]);
                        }
                        Err(e) => {
                            row.extend(["", "", "", "", "error"].map(String::from));
                            row.push(e.to_string());
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    Ok((to_csv(&ANALYZE_HEADER, &rows)?, unstable))
}

fn simulate_task(hash: &str, scenario: &Scenario, point: &Point, policy: Policy, seed: u64) -> Result<Vec<Row>> {
    let run = &scenario.run;
    let params = SimParams {
        policy,
        n_pkt: run.n_pkt,
        seed,
        replication: 0,
        warmup_frac: run.warmup_frac,
        tail_frac: run.tail_frac,
        ..SimParams::default()
    };
    let result = simulate(&point.network, &params)?;
    let summary = stats::summarize(&result, DEFAULT_BATCHES)?;
    let configs = point.source_configs()?;
    summary
        .sources
        .iter()
        .zip(&configs)
        .enumerate()
        .map(|(s, (src, config))| {
            let b = aoi_bounds(config, policy)?;
            let c = &src.counts;
            let mut row = point_prefix(hash, seed, point);
            row.extend([policy.to_string(), (s + 1).to_string()]);
            row.extend(
                [src.mean_aoi, src.se_aoi, src.mean_paoi, src.paoi_p99, src.mean_delay, summary.jfi, b.lower, b.upper, b.approx]
                    .map(num),
            );
            row.push((c.uplink_lost + c.dropped + c.total_erased()).to_string());
            Ok(row)
        })
        .collect()
}

/// Simulation CSV: one row per sweep point, policy, replication seed and
/// tracked source. Replication `r` uses seed `seed + r`.
pub fn simulate_csv(scenario: &Scenario, seed: Option<u64>, jobs: Option<usize>) -> Result<Vec<u8>> {
    let hash = scenario.hash();
    let base = seed.unwrap_or(scenario.run.seed);
    let points = scenario.points()?;
    let policies = scenario.policies()?;
    let mut tasks = Vec::new();
    for p in &points {
        for &policy in &policies {
            for r in 0..scenario.run.replications as u64 {
                tasks.push((p, policy, base.wrapping_add(r)));
            }
        }
    }
    let rows = with_pool(jobs, || {
        tasks
            .par_iter()
            .map(|&(p, policy, s)| simulate_task(&hash, scenario, p, policy, s))
            .collect::<Result<Vec<_>>>()
    })??;
    to_csv(&SIMULATE_HEADER, &rows.concat())
}

fn grid(max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(max > 0.0 && max.is_finite()) {
        return Err(Error::InvalidConfig("τ grid needs at least two points and a positive maximum".into()));
    }
    Ok((0..points).map(|i| max * i as f64 / (points - 1) as f64).collect())
}

fn tail_task(
    hash: &str,
    scenario: &Scenario,
    point: &Point,
    policy: Policy,
    seed: u64,
    tau_max: Option<f64>,
    tau_points: usize,
) -> Result<Vec<Row>> {
    let config = point.network.source_view(0)?;
    let bound = paoi_bound_distribution(&config)?;
    let tau_max = match tau_max {
        Some(t) => t,
        None => {
            let mut t = bound.mean();
            while bound.survival(t) > 1e-4 {
                t *= 1.5;
            }
            t
        }
    };
    let taus = grid(tau_max, tau_points)?;
    let run = &scenario.run;
    let params = SimParams {
        policy,
        n_pkt: run.n_pkt,
        seed,
        warmup_frac: run.warmup_frac,
        tail_frac: run.tail_frac,
        ..SimParams::default()
    };
    let result = simulate(&point.network, &params)?;
    let windowed: Vec<_> = result.flows[0].windowed_deliveries().copied().collect();
    let peaks = stats::paoi_samples(&windowed)?;
    let dkw = stats::dkw_epsilon(peaks.len(), 0.01);
    Ok(stats::empirical_cdf(&peaks, &taus)?
        .into_iter()
        .map(|(tau, emp)| {
            let mut row = point_prefix(hash, seed, point);
            row.extend([policy.to_string(), "1".to_string()]);
            row.extend([tau, emp, 1.0 - bound.survival(tau), dkw].map(num));
            row
        })
        .collect())
}

/// Peak-AoI CDF of source 1 against the tail bound. Error-free scenarios only.
pub fn tail_csv(
    scenario: &Scenario,
    seed: Option<u64>,
    jobs: Option<usize>,
    tau_max: Option<f64>,
    tau_points: usize,
) -> Result<Vec<u8>> {
    let hash = scenario.hash();
    let seed = seed.unwrap_or(scenario.run.seed);
    let points = scenario.points()?;
    for p in &points {
        paoi_bound_distribution(&p.network.source_view(0)?)?;
    }
    let policies = scenario.policies()?;
    let tasks: Vec<(&Point, Policy)> = points.iter().flat_map(|p| policies.iter().map(move |&q| (p, q))).collect();
    let rows = with_pool(jobs, || {
        tasks
            .par_iter()
            .map(|&(p, policy)| tail_task(&hash, scenario, p, policy, seed, tau_max, tau_points))
            .collect::<Result<Vec<_>>>()
    })??;
    to_csv(&TAIL_HEADER, &rows.concat())
}

/// Offered ALOHA loads of the scenario: the `lambda` sweep, or
/// `topology.lambda`.
fn offered_loads(scenario: &Scenario) -> Result<Vec<f64>> {
    match &scenario.sweep {
        Some(s) if s.parameter == SweepParameter::Lambda => Ok(s.values.clone()),
        Some(_) => Err(Error::Scenario("uplink-compare sweeps over 'lambda' only".into())),
        None => scenario
            .topology
            .lambda
            .map(|l| vec![l])
            .ok_or_else(|| Error::Scenario("uplink-compare needs topology.lambda or a lambda sweep".into())),
    }
}

/// Survivor interdeparture statistics for one offered load.
#[derive(Debug, Clone, PartialEq)]
pub struct UplinkComparison {
    pub lambda_a: f64,
    pub survivor_rate: f64,
    pub expected_rate: f64,
    pub se_rate: f64,
    pub ks: f64,
    pub gaps: Vec<f64>,
}

pub fn compare_uplink(lambda_a: f64, packet_duration: f64, horizon: f64, seed: u64, index: u64) -> Result<UplinkComparison> {
    let mut rng = stream_rng(seed, index, 0);
    let survivors = aloha_arrivals(lambda_a, packet_duration, horizon, &mut rng)?;
    let gaps: Vec<f64> = survivors.windows(2).map(|w| w[1] - w[0]).collect();
    let expected_rate = lambda_a * (-2.0 * lambda_a * packet_duration).exp();
    let ks = stats::ks_distance(&gaps, |t| 1.0 - (-expected_rate * t).exp())?;
    Ok(UplinkComparison {
        lambda_a,
        survivor_rate: survivors.len() as f64 / horizon,
        expected_rate,
        se_rate: (expected_rate / horizon).sqrt(),
        ks,
        gaps,
    })
}

pub fn uplink_compare_csv(scenario: &Scenario, seed: Option<u64>, jobs: Option<usize>, tau_points: usize) -> Result<Vec<u8>> {
    let hash = scenario.hash();
    let seed = seed.unwrap_or(scenario.run.seed);
    let d = scenario
        .uplink
        .packet_duration
        .ok_or_else(|| Error::Scenario("uplink-compare needs uplink.packet_duration".into()))?;
    let horizon = scenario.run.horizon;
    let loads = offered_loads(scenario)?;
    let results = with_pool(jobs, || {
        loads
            .par_iter()
            .enumerate()
            .map(|(i, &l)| compare_uplink(l, d, horizon, seed, i as u64))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut rows = Vec::new();
    for c in &results {
        let taus = grid(-(1e-3f64).ln() / c.expected_rate, tau_points)?;
        for (tau, emp) in stats::empirical_cdf(&c.gaps, &taus)? {
            let mut row = vec![hash.clone(), seed.to_string()];
            row.extend(
                [c.lambda_a, d, tau, emp, 1.0 - (-c.expected_rate * tau).exp(), c.survivor_rate, c.expected_rate, c.se_rate, c.ks]
                    .map(num),
            );
            rows.push(row);
        }
    }
    to_csv(&UPLINK_HEADER, &rows)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (common, produced) = match &cli.command {
        Command::Analyze(a) => (a, Scenario::load(&a.scenario).and_then(|s| analyze_csv(&s, a.seed))),
        Command::Simulate(a) => (
            a,
            Scenario::load(&a.scenario).and_then(|s| simulate_csv(&s, a.seed, a.jobs)).map(|b| (b, false)),
        ),
        Command::Tail(t) => (
            &t.common,
            Scenario::load(&t.common.scenario)
                .and_then(|s| tail_csv(&s, t.common.seed, t.common.jobs, t.tau_max, t.tau_points))
                .map(|b| (b, false)),
        ),
        Command::UplinkCompare(u) => (
            &u.common,
            Scenario::load(&u.common.scenario)
                .and_then(|s| uplink_compare_csv(&s, u.common.seed, u.common.jobs, u.tau_points))
                .map(|b| (b, false)),
        ),
    };
    match produced {
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
        Ok((bytes, unstable)) => {
            if let Err(e) = emit(&common.out, &bytes) {
                eprintln!("error: cannot write output: {e}");
                return EXIT_IO;
            }
            if unstable {
                eprintln!("warning: some sweep points are unstable");
                EXIT_UNSTABLE
            } else {
                EXIT_OK
            }
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
