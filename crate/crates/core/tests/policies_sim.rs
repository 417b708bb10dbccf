use harq_aoi::bounds::{self, Population};
use harq_aoi::policies::PolicyConfig;
use harq_aoi::sim::{self, SimConfig, Simulator};
use harq_aoi::{HarqModel, PolicyKind};

const FADING: HarqModel = HarqModel::ReciprocalDecay;
const FBL: HarqModel = HarqModel::ExponentialDecay { lambda: 0.5 };

fn deliveries(config: &SimConfig, slots: u64) -> Vec<usize> {
    let mut sim = Simulator::new(config).unwrap();
    (0..slots)
        .filter_map(|_| sim.step().unwrap().delivery.map(|d| d.terminal))
        .collect()
}

#[test]
fn round_robin_matches_renewal_value() {
    for model in [FADING, FBL] {
        let pop = Population::from_p0(model, &[0.5, 1.0]).unwrap();
        let res = sim::run(&SimConfig::new(
            &pop,
            PolicyKind::RoundRobinPersistent,
            1_000_000,
            5,
        ))
        .unwrap();
        let exact = bounds::rrp_exact(&pop);
        assert!(
            (res.avg_aoi - exact).abs() <= 3.0 * res.aoi_std_err,
            "{model}: {} +- {} vs {exact}",
            res.avg_aoi,
            res.aoi_std_err
        );
    }
}

#[test]
fn attempts_per_delivery_estimate_mean_attempts() {
    for model in [FADING, FBL] {
        let pop = Population::linear_grid(model, 4).unwrap();
        let res = sim::run(&SimConfig::new(
            &pop,
            PolicyKind::RoundRobinPersistent,
            1_000_000,
            6,
        ))
        .unwrap();
        for (t, m) in res.terminals.iter().zip(pop.exact_moments()) {
            let ratio = t.attempts as f64 / t.deliveries as f64;
            assert!(
                (ratio / m.ek - 1.0).abs() < 0.01,
                "{model}: {ratio} vs {}",
                m.ek
            );
        }
    }
}

#[test]
fn round_robin_terminals_share_the_cycle() {
    let pop = Population::linear_grid(FADING, 5).unwrap();
    let res = sim::run(&SimConfig::new(
        &pop,
        PolicyKind::RoundRobinPersistent,
        1_000_000,
        7,
    ))
    .unwrap();
    let cycle: f64 = pop.exact_moments().iter().map(|m| m.ek).sum();
    for t in &res.terminals {
        let mean = t.inter_delivery_mean.unwrap();
        assert!((mean / cycle - 1.0).abs() < 0.01, "{mean} vs {cycle}");
    }
    let check = sim::inter_delivery_check(&res).unwrap();
    assert!(check <= res.avg_aoi + 3.0 * res.aoi_std_err);
    assert!(check >= bounds::aoi_lower_bound(&pop) * 0.99);
}

#[test]
fn round_robin_delivers_in_cyclic_order() {
    for model in [FADING, FBL] {
        let pop = Population::linear_grid(model, 6).unwrap();
        let order = deliveries(
            &SimConfig::new(&pop, PolicyKind::RoundRobinPersistent, 50_000, 8),
            50_000,
        );
        assert!(order.len() > 1000);
        for (i, &n) in order.iter().enumerate() {
            assert_eq!(n, i % 6);
        }
    }
}

#[test]
fn baselines_stay_above_lower_bound() {
    for model in [FADING, FBL] {
        let pop = Population::from_p0(model, &[0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
        let lb = bounds::aoi_lower_bound(&pop);
        for kind in PolicyKind::ALL {
            let res = sim::run(&SimConfig::new(&pop, kind, 300_000, 9)).unwrap();
            assert!(
                res.avg_aoi >= lb - 3.0 * res.aoi_std_err,
                "{kind} {model}: {} < {lb}",
                res.avg_aoi
            );
            let check = sim::inter_delivery_check(&res).unwrap();
            assert!(
                check <= res.avg_aoi + 3.0 * res.aoi_std_err,
                "{kind} {model}: {check}"
            );
        }
    }
}

#[test]
fn randomized_attempt_shares_follow_weights() {
    let pop = Population::from_p0(FADING, &[0.4, 0.8]).unwrap();
    for weights in [vec![1.0, 1.0], vec![1.0, 3.0]] {
        let total: f64 = weights.iter().sum();
        let policy = PolicyConfig {
            kind: PolicyKind::StationaryRandomized,
            weights: Some(weights.clone()),
        };
        let res = sim::run(&SimConfig::new(&pop, policy, 400_000, 10)).unwrap();
        for (t, w) in res.terminals.iter().zip(&weights) {
            let share = t.attempts as f64 / res.window as f64;
            assert!(
                (share - w / total).abs() < 0.005,
                "{share} vs {}",
                w / total
            );
        }
    }
}

#[test]
fn greedy_cycles_on_perfect_symmetric_channels() {
    let pop = Population::from_p0(FADING, &[0.0; 4]).unwrap();
    let order = deliveries(
        &SimConfig::new(&pop, PolicyKind::GreedyMaxAge, 1000, 11),
        1000,
    );
    assert_eq!(order.len(), 1000);
    for (i, &n) in order.iter().enumerate() {
        assert_eq!(n, i % 4);
    }
    let res = sim::run(&SimConfig::new(&pop, PolicyKind::GreedyMaxAge, 1000, 11)).unwrap();
    assert!((res.avg_aoi - 2.5).abs() < 0.01, "{}", res.avg_aoi);
}

#[test]
fn type1_round_robin_equals_persistent_without_errors() {
    let pop = Population::from_p0(FBL, &[0.0; 5]).unwrap();
    let a = sim::run(&SimConfig::new(
        &pop,
        PolicyKind::RoundRobinType1,
        10_000,
        12,
    ))
    .unwrap();
    let b = sim::run(&SimConfig::new(
        &pop,
        PolicyKind::RoundRobinPersistent,
        10_000,
        12,
    ))
    .unwrap();
    assert_eq!(a.avg_aoi, b.avg_aoi);
    assert_eq!(a.terminals, b.terminals);
}

#[test]
fn every_terminal_keeps_delivering() {
    const WINDOW: u64 = 100_000;
    let pop = Population::from_p0(FBL, &[0.2, 0.5, 0.8, 0.95]).unwrap();
    for kind in PolicyKind::ALL {
        let config = SimConfig::new(&pop, kind, 5 * WINDOW, 13);
        let mut sim = Simulator::new(&config).unwrap();
        for w in 0..5 {
            let mut seen = [0u64; 4];
            for _ in 0..WINDOW {
                if let Some(d) = sim.step().unwrap().delivery {
                    seen[d.terminal] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c > 0), "{kind} window {w}: {seen:?}");
        }
    }
}
