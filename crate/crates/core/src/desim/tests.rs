use super::*;
use crate::model::{line_scenario, NetworkConfig};

fn single_node(mu: f64) -> Network {
    Network {
        nodes: vec![NodeSpec { mu, eps: 0.0 }],
        flows: vec![FlowSpec {
            rate: 0.5,
            route: vec![Hop { node: 0, continue_prob: 1.0 }],
            uplink: Uplink::Ideal,
            tracked: true,
        }],
        buffer_capacity: None,
    }
}

fn mm1(lambda: f64, mu: f64) -> NetworkConfig {
    NetworkConfig::new(lambda, vec![0.0], vec![0.0], vec![mu], vec![0.0]).unwrap()
}

/// Mean and standard error from `batches` contiguous batch means.
fn batch_mean(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let means: Vec<f64> = values.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (m, (var / means.len() as f64).sqrt())
}

#[test]
fn two_packet_hand_trace() {
    let net = single_node(1.0);
    let r = simulate_trace(&net, Policy::Fcfs, &[vec![0.0, 0.1]], &[vec![1.0, 1.0]], 0).unwrap();
    let d = &r.flows[0].deliveries;
    assert_eq!(d.len(), 2);
    assert!((d[0].delivered - 1.0).abs() < 1e-12);
    assert!((d[1].delivered - 2.0).abs() < 1e-12);
    // Second packet: sojourn 1.9, of which 0.9 waiting.
    assert!((r.nodes[0].sojourn_total - 2.9).abs() < 1e-12);
    assert!((r.nodes[0].occupancy_area - 2.9).abs() < 1e-12);
}

#[test]
fn tandem_hand_trace() {
    let mut net = single_node(1.0);
    net.nodes.push(NodeSpec { mu: 1.0, eps: 0.0 });
    net.flows[0].route.push(Hop { node: 1, continue_prob: 1.0 });
    // Packet 0 leaves node 1 at 1.0, packet 1 waits until then and leaves at 1.2.
    // At node 2, packet 0 needs 0.5 (done 1.5); packet 1 starts at 1.5 and needs 0.1.
    let r = simulate_trace(&net, Policy::Fcfs, &[vec![0.0, 0.2]], &[vec![1.0, 0.2], vec![0.5, 0.1]], 0).unwrap();
    let times: Vec<f64> = r.flows[0].deliveries.iter().map(|d| d.delivered).collect();
    assert!((times[0] - 1.5).abs() < 1e-12 && (times[1] - 1.6).abs() < 1e-12, "{times:?}");
}

#[test]
fn mm1_mean_delay_matches_theory() {
    let params = SimParams::new(Policy::Fcfs, 200_000, 11);
    let r = simulate_config(&mm1(0.5, 1.0), &params).unwrap();
    let delays: Vec<f64> = r.flows[0].windowed_deliveries().map(|d| d.delivered - d.generated).collect();
    let (m, se) = batch_mean(&delays, 40);
    assert!((m - 2.0).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn same_seed_same_run() {
    let config = line_scenario(3, 0.6, 1.0, 0.8, 0.05).unwrap();
    let net = Network::from_config(&config).unwrap();
    let params = SimParams::new(Policy::Opf, 5_000, 7);
    let a = simulate(&net, &params).unwrap();
    let b = simulate(&net, &params).unwrap();
    assert_eq!(a, b);
    let c = simulate(&net, &SimParams { seed: 8, ..params }).unwrap();
    assert_ne!(a.flows[0].deliveries, c.flows[0].deliveries);
    let d = simulate(&net, &SimParams { replication: 1, ..params }).unwrap();
    assert_ne!(a.flows[0].deliveries, d.flows[0].deliveries);
}

#[test]
fn every_packet_is_accounted_for() {
    let config = NetworkConfig::new(
        0.15,
        vec![0.0, 0.2, 0.1],
        vec![0.4, 0.3, 0.0],
        vec![1.0, 1.0, 0.9],
        vec![0.05, 0.1, 0.02],
    )
    .unwrap()
    .with_uplink(Uplink::MprThinning { p_c: 0.1 })
    .unwrap()
    .with_buffer(Some(3))
    .unwrap();
    let net = Network::from_config(&config).unwrap();
    for policy in Policy::ALL {
        let r = simulate(&net, &SimParams::new(policy, 20_000, 3)).unwrap();
        for f in &r.flows {
            let c = &f.counts;
            assert_eq!(
                c.generated,
                c.uplink_lost + c.dropped + c.total_erased() + c.offloaded + c.delivered,
                "{c:?}"
            );
        }
        assert!(r.flows[0].counts.dropped > 0);
        assert_eq!(r.flows[0].counts.offloaded, 0);
        assert!(r.flows[1].counts.offloaded > 0);
    }
}

#[test]
fn deliveries_of_a_source_stay_in_order() {
    let net = Network::line(4, 0.7, 1.0, 0.8, &[0.0], Uplink::Ideal).unwrap();
    for policy in Policy::ALL {
        let r = simulate(&net, &SimParams::new(policy, 10_000, 5)).unwrap();
        for (_, f) in r.tracked() {
            assert_eq!(f.counts.delivered, f.counts.generated);
            assert!(f.deliveries.windows(2).all(|w| w[0].seq < w[1].seq));
        }
    }
}

#[test]
fn departures_of_mm1_are_poisson() {
    let params = SimParams { record_departures: true, ..SimParams::new(Policy::Fcfs, 60_000, 21) };
    let r = simulate_config(&mm1(0.5, 1.0), &params).unwrap();
    let deps = &r.nodes[0].departure_times;
    let mut gaps: Vec<f64> = deps.windows(2).map(|w| w[1] - w[0]).skip(1000).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len() as f64;
    let ks = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let f = 1.0 - (-0.5 * g).exp();
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    // Kolmogorov critical value at the 1% level.
    assert!(ks < 1.63 / n.sqrt(), "ks = {ks}");
}

#[test]
fn littles_law_at_every_node() {
    let config = line_scenario(4, 0.8, 1.0, 0.8, 0.02).unwrap();
    let r = simulate_config(&config, &SimParams::new(Policy::Haf, 20_000, 9)).unwrap();
    for node in &r.nodes {
        assert_eq!(node.arrivals, node.departures);
        // With the network drained, area under N(t) is the summed sojourn.
        assert!((node.occupancy_area - node.sojourn_total).abs() < 1e-6 * node.sojourn_total);
        let l = node.occupancy_area / r.end_time;
        let lambda_w = node.arrivals as f64 / r.end_time * (node.sojourn_total / node.departures as f64);
        assert!((l - lambda_w).abs() < 1e-9 * l.max(1.0));
    }
}

#[test]
fn hop_survival_matches_success_probability() {
    let eps = vec![0.1, 0.2, 0.05];
    let config = NetworkConfig::new(0.3, vec![0.0; 3], vec![0.0; 3], vec![1.0; 3], eps.clone()).unwrap();
    let r = simulate_config(&config, &SimParams::new(Policy::Fcfs, 100_000, 13)).unwrap();
    let c = &r.flows[0].counts;
    let mut reached = c.generated as f64;
    for j in 0..3 {
        reached -= c.erased[j] as f64;
        let p: f64 = eps[..=j].iter().map(|e| 1.0 - e).product();
        let n = c.generated as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        assert!((reached / n - p).abs() < 3.0 * se, "hop {}: {} vs {p}", j + 1, reached / n);
    }
}

#[test]
fn uplink_models_thin_entries() {
    let mut config = mm1(0.3, 1.0).with_uplink(Uplink::Aloha { packet_duration: 1.0 }).unwrap();
    let r = simulate_config(&config, &SimParams::new(Policy::Fcfs, 100_000, 17)).unwrap();
    let c = &r.flows[0].counts;
    let n = c.generated as f64;
    let p = (-0.6f64).exp();
    let se = (p * (1.0 - p) / n).sqrt();
    // Survivals are positively correlated between neighbours, so allow a
    // wider band than for independent thinning.
    assert!(((n - c.uplink_lost as f64) / n - p).abs() < 6.0 * se);

    config = config.with_uplink(Uplink::MprThinning { p_c: 0.25 }).unwrap();
    let r = simulate_config(&config, &SimParams::new(Policy::Fcfs, 100_000, 17)).unwrap();
    let c = &r.flows[0].counts;
    let se = (0.25 * 0.75 / n).sqrt();
    assert!((c.uplink_lost as f64 / n - 0.25).abs() < 3.0 * se);
}

#[test]
fn unstable_requires_opt_in() {
    let config = mm1(1.2, 1.0);
    let params = SimParams::new(Policy::Fcfs, 1_000, 1);
    assert_eq!(simulate_config(&config, &params), Err(Error::Unstable(vec![1])));
    let r = simulate_config(&config, &SimParams { allow_unstable: true, ..params }).unwrap();
    assert!(r.unstable());
    assert_eq!(r.flows[0].counts.delivered, 1_000);
}

#[test]
fn window_discards_head_and_tail() {
    let r = simulate_config(&mm1(0.5, 1.0), &SimParams::new(Policy::Fcfs, 1_000, 2)).unwrap();
    let f = &r.flows[0];
    assert_eq!((f.discarded_warmup, f.discarded_tail), (50, 50));
    assert_eq!(f.window, (f.generation_times[50], f.generation_times[949]));
    assert_eq!(f.windowed_deliveries().count(), 900);
}
