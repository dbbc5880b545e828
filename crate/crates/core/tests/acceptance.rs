//! Acceptance criteria. Each test prints one PASS/FAIL line.

mod common;

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tandem_aoi::analysis::{aoi_approx, aoi_bounds, ewy_lower_fcfs, mean_network_time, mm1_aoi_exact, paoi_bound_distribution};
use tandem_aoi::cli::compare_uplink;
use tandem_aoi::desim::{simulate, Network, SimParams};
use tandem_aoi::model::{derived_rates, NetworkConfig, Policy, Uplink};
use tandem_aoi::phasetype::HypoExp;
use tandem_aoi::stats::{dkw_epsilon, empirical_cdf, paoi_samples};

use common::{ewy_fcfs_quadrature, expm_cdf, load_grid, mean_se, report, run};

const N_PKT: usize = 100_000;
const MU_ISL: f64 = 1.0;
const MU_DL: f64 = 0.8;

#[derive(Debug, Clone, Copy)]
enum Topo {
    Line(usize),
    Dumbbell(usize),
}

impl Topo {
    fn network(self, rho: f64, eps: f64) -> Network {
        match self {
            Topo::Line(k) => Network::line(k, rho, MU_ISL, MU_DL, &[eps], Uplink::Ideal),
            Topo::Dumbbell(n) => Network::dumbbell(n, rho, MU_ISL, MU_DL, &[eps], Uplink::Ideal),
        }
        .unwrap()
    }
}

/// Source-1 statistics at one point of the bound-validation grid.
#[derive(Debug, Clone)]
struct GridPoint {
    topo: Topo,
    rho: f64,
    eps: f64,
    policy: Policy,
    aoi: f64,
    se_aoi: f64,
    lower: f64,
    upper: f64,
    delay: f64,
    se_delay: f64,
    exact_delay: f64,
}

fn validation_grid() -> &'static [GridPoint] {
    static GRID: OnceLock<Vec<GridPoint>> = OnceLock::new();
    GRID.get_or_init(|| {
        let mut cases = Vec::new();
        let topos = [Topo::Line(2), Topo::Line(6), Topo::Line(10), Topo::Dumbbell(2), Topo::Dumbbell(6)];
        for topo in topos {
            for rho in load_grid(0.1, 0.9, 0.1) {
                for eps in [0.0, 0.01] {
                    for policy in Policy::ALL {
                        cases.push((topo, rho, eps, policy));
                    }
                }
            }
        }
        cases
            .par_iter()
            .enumerate()
            .map(|(i, &(topo, rho, eps, policy))| {
                let net = topo.network(rho, eps);
                let config = net.source_view(0).unwrap();
                let bounds = aoi_bounds(&config, policy).unwrap();
                let s = &run(&net, policy, N_PKT, 1_000 + i as u64).sources[0];
                GridPoint {
                    topo,
                    rho,
                    eps,
                    policy,
                    aoi: s.mean_aoi,
                    se_aoi: s.se_aoi,
                    lower: bounds.lower,
                    upper: bounds.upper,
                    delay: s.mean_delay,
                    se_delay: s.se_delay,
                    exact_delay: mean_network_time(&derived_rates(&config)).unwrap(),
                }
            })
            .collect()
    })
}

fn describe(p: &GridPoint) -> String {
    format!("{:?} rho={} eps={} {}", p.topo, p.rho, p.eps, p.policy)
}

#[test]
fn ac01_sandwich() {
    let grid = validation_grid();
    let bad: Vec<String> = grid
        .iter()
        .filter(|p| !(p.lower - 3.0 * p.se_aoi <= p.aoi && p.aoi <= p.upper + 3.0 * p.se_aoi))
        .map(|p| format!("{}: {:.3} ± {:.3} not in [{:.3}, {:.3}]", describe(p), p.aoi, p.se_aoi, p.lower, p.upper))
        .collect();
    let tightest = grid
        .iter()
        .map(|p| ((p.aoi - p.lower) / p.se_aoi).min((p.upper - p.aoi) / p.se_aoi))
        .fold(f64::INFINITY, f64::min);
    let pass = report(
        "AC1",
        bad.is_empty(),
        &format!(
            "{} grid points, {} outside bounds ± 3 s.e., tightest margin {tightest:.2} s.e. {}",
            grid.len(),
            bad.len(),
            bad.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn ac02_exact_mean_delay() {
    let grid = validation_grid();
    let bad: Vec<String> = grid
        .iter()
        .filter(|p| (p.delay - p.exact_delay).abs() > 3.0 * p.se_delay)
        .map(|p| format!("{}: {:.4} ± {:.4} vs {:.4}", describe(p), p.delay, p.se_delay, p.exact_delay))
        .collect();
    let worst = |policy: Option<Policy>| {
        grid.iter()
            .filter(|p| policy.is_none_or(|q| p.policy == q))
            .map(|p| (p.delay - p.exact_delay).abs() / p.se_delay)
            .fold(0.0, f64::max)
    };
    let fcfs_bad = grid.iter().filter(|p| p.policy == Policy::Fcfs && (p.delay - p.exact_delay).abs() > 3.0 * p.se_delay).count();
    let pass = report(
        "AC2",
        bad.is_empty(),
        &format!(
            "{} grid points, {} off by more than 3 s.e., worst {:.2} s.e.; FCFS only: {fcfs_bad} off, worst {:.2} s.e. {}",
            grid.len(),
            bad.len(),
            worst(None),
            worst(Some(Policy::Fcfs)),
            bad.join("; ")
        ),
    );
    assert!(pass);
}

#[test]
fn ac03_single_link_ground_truth() {
    let config = NetworkConfig::new(0.5, vec![0.0], vec![0.0], vec![1.0], vec![0.0]).unwrap();
    let net = Network::from_config(&config).unwrap();
    let sim = run(&net, Policy::Fcfs, N_PKT, 3).sources[0].mean_aoi;
    let exact = mm1_aoi_exact(0.5, 1.0).unwrap();
    let approx = aoi_approx(&config).unwrap();
    let rel = (sim - 3.5).abs() / 3.5;
    let pass = report(
        "AC3",
        rel <= 0.02 && (exact - 3.5).abs() < 1e-12 && (approx - 4.0).abs() < 1e-12,
        &format!("simulated {sim:.4} ({:.2}% from 3.5), exact {exact}, approximation {approx}", rel * 100.0),
    );
    assert!(pass);
}

#[test]
fn ac04_u_shape() {
    let rhos = load_grid(0.05, 0.95, 0.05);
    let aoi: Vec<f64> = rhos
        .par_iter()
        .enumerate()
        .map(|(i, &rho)| run(&Topo::Line(10).network(rho, 0.0), Policy::Fcfs, N_PKT, 4_000 + i as u64).sources[0].mean_aoi)
        .collect();
    let (imin, min) = aoi.iter().cloned().enumerate().fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
    let first = aoi[0];
    let last = aoi[aoi.len() - 1];
    let pass = report(
        "AC4",
        first >= 250.0 && first > min && last > min,
        &format!("AoI(0.05) = {first:.2}, AoI(0.95) = {last:.2}, minimum {min:.2} at rho={}", rhos[imin]),
    );
    assert!(pass);
}

#[test]
fn ac05_erasures_help_at_high_load() {
    let at = |rho: f64, eps: f64, seed: u64| {
        let s = &run(&Topo::Line(10).network(rho, eps), Policy::Fcfs, N_PKT, seed).sources[0];
        (s.mean_aoi, s.se_aoi)
    };
    let (high0, high0_se) = at(0.9, 0.0, 51);
    let (high1, high1_se) = at(0.9, 0.01, 52);
    let (low0, low0_se) = at(0.1, 0.0, 53);
    let (low1, low1_se) = at(0.1, 0.01, 54);
    let sep = |a: f64, b: f64| 3.0 * (a * a + b * b).sqrt();
    let high_ok = high0 - high1 > sep(high0_se, high1_se);
    let low_ok = low1 - low0 > sep(low0_se, low1_se);
    let pass = report(
        "AC5",
        high_ok && low_ok,
        &format!(
            "rho=0.9: eps=0 {high0:.3}±{high0_se:.3}, eps=0.01 {high1:.3}±{high1_se:.3}; rho=0.1: eps=0 {low0:.3}±{low0_se:.3}, eps=0.01 {low1:.3}±{low1_se:.3}"
        ),
    );
    assert!(pass);
}

#[test]
fn ac06_paoi_tail_dominance() {
    let results: Vec<(f64, bool, f64, f64)> = [0.2, 0.5, 0.8]
        .par_iter()
        .map(|&rho| {
            let net = Topo::Line(6).network(rho, 0.0);
            let bound = paoi_bound_distribution(&net.source_view(0).unwrap()).unwrap();
            let r = simulate(&net, &SimParams::new(Policy::Fcfs, N_PKT, 600)).unwrap();
            let windowed: Vec<_> = r.flows[0].windowed_deliveries().copied().collect();
            let peaks = paoi_samples(&windowed).unwrap();
            let mut tau_max = bound.mean();
            while bound.survival(tau_max) > 1e-4 {
                tau_max *= 1.5;
            }
            let taus: Vec<f64> = (0..200).map(|i| tau_max * i as f64 / 199.0).collect();
            let dkw = dkw_epsilon(N_PKT, 0.01);
            let mut dominated = true;
            let mut gap: f64 = 0.0;
            for (tau, emp) in empirical_cdf(&peaks, &taus).unwrap() {
                let b = bound.cdf(tau);
                dominated &= b <= emp + dkw;
                gap = gap.max((emp - b).abs());
            }
            (rho, dominated, gap, dkw)
        })
        .collect();
    let all_dominated = results.iter().all(|r| r.1);
    let smallest_at_08 = results[2].2 < results[0].2 && results[2].2 < results[1].2;
    let detail: Vec<String> =
        results.iter().map(|(rho, d, g, e)| format!("rho={rho}: dominated={d} sup-gap={g:.4} dkw={e:.4}")).collect();
    let pass = report("AC6", all_dominated && smallest_at_08, &detail.join(", "));
    assert!(pass);
}

#[test]
fn ac07_fairness_ordering() {
    const SEEDS: u64 = 10;
    let rhos = [0.7, 0.8, 0.9];
    let cases: Vec<(usize, usize, u64)> =
        (0..rhos.len()).flat_map(|r| (0..3).flat_map(move |p| (0..SEEDS).map(move |s| (r, p, s)))).collect();
    let summaries: Vec<_> = cases
        .par_iter()
        .map(|&(r, p, s)| run(&Topo::Line(10).network(rhos[r], 0.01), Policy::ALL[p], N_PKT, 7_000 + s))
        .collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, &rho) in rhos.iter().enumerate() {
        let of = |p: usize| -> Vec<&tandem_aoi::stats::AoISummary> {
            cases.iter().zip(&summaries).filter(|(c, _)| c.0 == r && c.1 == p).map(|(_, s)| s).collect()
        };
        let jfi = |p: usize| mean_se(&of(p).iter().map(|s| s.jfi).collect::<Vec<_>>());
        let (fcfs, opf, haf) = (jfi(0), jfi(1), jfi(2));
        let sep = |a: (f64, f64), b: (f64, f64)| a.0 - b.0 > 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt();
        let ordered = sep(opf, haf) && sep(haf, fcfs);
        let mut first_worst = true;
        for p in 0..3 {
            let runs = of(p);
            let k = runs[0].sources.len();
            let per_source: Vec<f64> =
                (0..k).map(|i| runs.iter().map(|s| s.sources[i].mean_aoi).sum::<f64>() / runs.len() as f64).collect();
            first_worst &= per_source.iter().skip(1).all(|&v| v < per_source[0]);
        }
        ok &= ordered && first_worst;
        detail.push(format!(
            "rho={rho}: JFI opf {:.5}±{:.5} haf {:.5}±{:.5} fcfs {:.5}±{:.5}, source 1 worst={first_worst}",
            opf.0, opf.1, haf.0, haf.1, fcfs.0, fcfs.1
        ));
    }
    let pass = report("AC7", ok, &detail.join("; "));
    assert!(pass);
}

#[test]
fn ac08_dumbbell_optimum_shift() {
    let rhos = load_grid(0.05, 0.95, 0.05);
    let ns = [2usize, 6, 10];
    let n_rho = rhos.len();
    let cases: Vec<(usize, usize, usize)> = (0..ns.len())
        .flat_map(|n| (0..3).flat_map(move |p| (0..n_rho).map(move |r| (n, p, r))))
        .collect();
    let aoi: Vec<(f64, f64)> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(n, p, r))| {
            run(&Topo::Dumbbell(ns[n]).network(rhos[r], 0.01), Policy::ALL[p], N_PKT, 8_000 + i as u64).network_mean_aoi()
        })
        .collect();
    let curve = |n: usize, p: usize| -> Vec<(f64, f64)> {
        cases.iter().zip(&aoi).filter(|(c, _)| c.0 == n && c.1 == p).map(|(_, v)| *v).collect()
    };
    let argmin = |v: &[(f64, f64)]| rhos[v.iter().enumerate().fold(0, |b, (i, x)| if x.0 < v[b].0 { i } else { b })];
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, policy) in Policy::ALL.iter().enumerate() {
        let stars: Vec<f64> = (0..ns.len()).map(|n| argmin(&curve(n, p))).collect();
        ok &= stars.windows(2).all(|w| w[0] <= w[1]);
        detail.push(format!("{policy} rho* = {stars:?}"));
    }
    let fcfs = curve(1, 0);
    let haf = curve(1, 2);
    let mut haf_ok = true;
    for (r, &rho) in rhos.iter().enumerate().filter(|(_, &rho)| rho >= 0.7 - 1e-9) {
        haf_ok &= haf[r].0 <= fcfs[r].0;
        detail.push(format!("N=6 rho={rho}: haf {:.3} fcfs {:.3}", haf[r].0, fcfs[r].0));
    }
    let pass = report("AC8", ok && haf_ok, &detail.join(", "));
    assert!(pass);
}

fn random_rates(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let n = rng.random_range(1..=6);
        let mut r: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        r.sort_by(f64::total_cmp);
        if r.windows(2).all(|w| (w[1] - w[0]) / w[0] > 0.01) {
            return r;
        }
    }
}

#[test]
fn ac09_hypoexponential_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_norm: f64 = 0.0;
    let mut worst_cdf: f64 = 0.0;
    for _ in 0..100 {
        let rates = random_rates(&mut rng);
        let h = HypoExp::from_rates(&rates).unwrap();
        let mut upper = h.mean();
        while h.survival(upper) > 1e-13 {
            upper *= 1.5;
        }
        let fastest = rates.iter().cloned().fold(0.0, f64::max);
        let mut steps = (upper * fastest / 0.002) as usize;
        steps += steps % 2;
        let dx = upper / steps as f64;
        let integral = (0..=steps)
            .map(|i| {
                let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * h.pdf(i as f64 * dx)
            })
            .sum::<f64>()
            * dx
            / 3.0;
        worst_norm = worst_norm.max((integral - 1.0).abs());
        for i in 1..=40 {
            let t = upper * i as f64 / 40.0;
            worst_cdf = worst_cdf.max((h.cdf(t) - expm_cdf(&rates, t)).abs());
        }
    }
    let erlang = HypoExp::from_rates(&[2.0; 4]).unwrap();
    let worst_erlang = (1..=50)
        .map(|i| {
            let t = i as f64 * 0.1;
            let x = 2.0 * t;
            let exact = 1.0 - (-x).exp() * (1.0 + x + x * x / 2.0 + x * x * x / 6.0);
            (erlang.cdf(t) - exact).abs()
        })
        .fold(0.0, f64::max);
    let pass = report(
        "AC9",
        worst_norm <= 1e-6 && worst_cdf <= 1e-8 && worst_erlang <= 1e-14,
        &format!("normalization error {worst_norm:.2e}, CDF vs matrix exponential {worst_cdf:.2e}, Erlang {worst_erlang:.2e}"),
    );
    assert!(pass);
}

fn random_stable_config(rng: &mut ChaCha8Rng) -> NetworkConfig {
    loop {
        let k = rng.random_range(1..=4);
        let lambda = rng.random_range(0.1..0.4);
        let theta: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.3)).collect();
        let psi: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.5)).collect();
        let mu: Vec<f64> = (0..k).map(|_| rng.random_range(0.8..1.6)).collect();
        let eps: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.05)).collect();
        let config = NetworkConfig::new(lambda, theta, psi, mu, eps).unwrap();
        if derived_rates(&config).rho.iter().all(|&r| r <= 0.85) {
            return config;
        }
    }
}

#[test]
fn ac10_lower_bound_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let configs: Vec<NetworkConfig> = (0..20).map(|_| random_stable_config(&mut rng)).collect();
    let errors: Vec<(usize, f64, f64)> = configs
        .par_iter()
        .map(|c| {
            let closed = ewy_lower_fcfs(c, &derived_rates(c)).unwrap();
            let numeric = ewy_fcfs_quadrature(c);
            (c.k_links, closed, (closed - numeric).abs() / numeric.abs().max(1.0))
        })
        .collect();
    let worst = errors.iter().map(|e| e.2).fold(0.0, f64::max);
    let pass = report(
        "AC10",
        worst <= 1e-6,
        &format!("20 configs with K up to {}, worst scaled difference {worst:.2e}", errors.iter().map(|e| e.0).max().unwrap()),
    );
    assert!(pass);
}

#[test]
fn ac11_aloha_thinning_approximation() {
    let loads = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3];
    let results: Vec<(f64, f64)> = loads
        .par_iter()
        .enumerate()
        .map(|(i, &l)| (l, compare_uplink(l, 1.0, 1e6, 11, i as u64).unwrap().ks))
        .collect();
    let ok = results.iter().all(|r| r.1 <= 0.05);
    let detail: Vec<String> = results.iter().map(|(l, ks)| format!("lambda*d={l}: KS {ks:.4}")).collect();
    let pass = report("AC11", ok, &detail.join(", "));
    assert!(pass);
}

#[test]
fn ac12_byte_identical_csv() {
    let bin = env!("CARGO_BIN_EXE_tandem-aoi");
    let dir = tempfile::tempdir().unwrap();
    let scenarios = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    let cases = [
        ("simulate", "quick.toml", vec![]),
        ("analyze", "line_k10_sweep.toml", vec![]),
        ("simulate", "custom_mpr.toml", vec!["--jobs", "1"]),
        ("tail", "line_k2.toml", vec!["--tau-points", "50"]),
        ("uplink-compare", "aloha_compare.toml", vec!["--tau-points", "20"]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, (cmd, file, extra)) in cases.iter().enumerate() {
        let outputs: Vec<Vec<u8>> = (0..2)
            .map(|rep| {
                let out = dir.path().join(format!("{i}_{rep}.csv"));
                let status = std::process::Command::new(bin)
                    .arg(cmd)
                    .arg(format!("{scenarios}/{file}"))
                    .args(extra)
                    .arg("--out")
                    .arg(&out)
                    .status()
                    .unwrap();
                assert!(status.success(), "{cmd} {file} failed");
                std::fs::read(&out).unwrap()
            })
            .collect();
        let same = outputs[0] == outputs[1] && !outputs[0].is_empty();
        ok &= same;
        detail.push(format!("{cmd} {file}: {} bytes identical={same}", outputs[0].len()));
    }
    let pass = report("AC12", ok, &detail.join(", "));
    assert!(pass);
}
