use gadmm_core::baselines::{admm_ps_step, PsAdmmState};
use gadmm_core::chain::{build_chain, generate_head_set, Chain};
use gadmm_core::dgadmm::{dual_handover, run_dgadmm, RefreshPolicy};
use gadmm_core::gadmm::{gadmm_step, GadmmConfig, GadmmEngine, GadmmState, StopReason};
use gadmm_core::linalg::{self, Matrix};
use gadmm_core::metrics::{total_comm_cost, Attribution, NullSink, TcMode, TcPolicy};
use gadmm_core::model::{compute_reference_optimum, LocalObjective, PenaltyParam};
use gadmm_core::netsim::{Bus, LinkPolicy, Payload, Transmission};
use gadmm_core::topology::{cost_matrix, random_placement, CommCostMatrix, CostModel, EnergyModel, StaticTopology};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shards(n: usize, m: usize, d: usize, seed: u64) -> Vec<LocalObjective> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..m * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            LocalObjective::linear(Matrix::from_row_major(m, d, x).unwrap(), y).unwrap()
        })
        .collect()
}

fn symmetric_costs(n: usize, vals: &[f64]) -> CommCostMatrix {
    CommCostMatrix::from_fn(n, |i, j| vals[(i.min(j) * n + i.max(j)) % vals.len()])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_is_alternating_permutation(half in 1usize..=8, seed: u64, epoch in 0u64..50, vals in prop::collection::vec(0.1f64..10.0, 1..64)) {
        let n = 2 * half;
        let heads = generate_head_set(seed, epoch, n).unwrap();
        prop_assert_eq!(heads.len(), half);
        let chain = build_chain(&symmetric_costs(n, &vals), &heads).unwrap();
        let order = chain.order();
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(order[0], 0);
        prop_assert_eq!(order[n - 1], n - 1);
        for (p, w) in order.iter().enumerate() {
            prop_assert_eq!(p % 2 == 0, heads.contains(w));
        }
    }

    #[test]
    fn head_sets_are_reproducible(seed: u64, epoch: u64, half in 1usize..=12) {
        prop_assert_eq!(generate_head_set(seed, epoch, 2 * half).unwrap(), generate_head_set(seed, epoch, 2 * half).unwrap());
    }

    #[test]
    fn tc_is_additive_over_logs(n in 2usize..8, vals in prop::collection::vec(0.0f64..5.0, 1..40), raw in prop::collection::vec((0usize..8, prop::collection::vec(0usize..8, 1..4)), 0..30), split in 0usize..30, sum_mode: bool) {
        let costs = symmetric_costs(n, &vals);
        let log: Vec<Transmission> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (s, rs))| Transmission { round: i as u64, sender: s % n, receivers: rs.into_iter().map(|r| r % n).collect() })
            .collect();
        let policy = TcPolicy {
            mode: TcMode::Decentralized,
            attribution: if sum_mode { Attribution::SumOverReceivers } else { Attribution::MaxOverReceivers },
        };
        let k = split.min(log.len());
        let whole = total_comm_cost(&log, &costs, policy).unwrap();
        let parts = total_comm_cost(&log[..k], &costs, policy).unwrap() + total_comm_cost(&log[k..], &costs, policy).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
    }

    #[test]
    fn bus_step_matches_pure_step_and_replays(half in 1usize..=4, d in 1usize..4, seed: u64, rho in 0.1f64..10.0, iters in 1usize..6) {
        let n = 2 * half;
        let objs = shards(n, 6, d, seed);
        let cfg = GadmmConfig::new(rho).unwrap();
        let heads = generate_head_set(seed, 0, n).unwrap();
        let chain = build_chain(&CommCostMatrix::from_fn(n, |i, j| (i as f64 - j as f64).abs()), &heads).unwrap();
        let mut pure = GadmmState::zeros(chain.clone(), d);
        let mut bused = pure.clone();
        let mut engine = GadmmEngine::new(&objs, cfg).unwrap();
        let mut bus = Bus::new(LinkPolicy::Chain(chain.clone())).with_history();
        for _ in 0..iters {
            pure = gadmm_step(&pure, &objs, &cfg).unwrap();
            engine.step(&mut bused, Some(&mut bus)).unwrap();
        }
        prop_assert_eq!(pure.thetas(), bused.thetas());
        prop_assert_eq!(pure.lambdas(), bused.lambdas());
        // the last model each worker broadcast is its current model
        for w in 0..n {
            let last = bus.history().iter().rev().find_map(|r| r.deliveries.iter().find(|dl| dl.sender == w).map(|dl| dl.payload.clone()));
            prop_assert_eq!(&*last.unwrap(), &Payload::Model(bused.theta(w).clone()));
        }
        prop_assert_eq!(bus.history().len(), 2 * iters);
    }

    #[test]
    fn ps_admm_duals_sum_to_zero(n in 2usize..7, d in 1usize..4, seed: u64, rho in 0.1f64..10.0) {
        let objs = shards(n, 5, d, seed);
        let rho = PenaltyParam::new(rho).unwrap();
        let mut s = PsAdmmState::zeros(n, d);
        for _ in 0..5 {
            s = admm_ps_step(&s, &objs, rho, 1e-12).unwrap();
            let mut sum = vec![0.0; d];
            for l in &s.lambdas {
                linalg::axpy(1.0, l, &mut sum);
            }
            let scale: f64 = s.lambdas.iter().map(|l| linalg::norm(l)).sum::<f64>().max(1.0);
            prop_assert!(linalg::norm(&sum) <= 1e-12 * scale);
        }
    }

    #[test]
    fn handover_onto_same_chain_is_identity(half in 1usize..=6, d in 1usize..4, seed: u64, handover: bool) {
        let n = 2 * half;
        let objs = shards(n, 4, d, seed);
        let chain = build_chain(&CommCostMatrix::unit(n), &generate_head_set(seed, 1, n).unwrap()).unwrap();
        let mut s = GadmmState::zeros(chain.clone(), d);
        for _ in 0..3 {
            s = gadmm_step(&s, &objs, &GadmmConfig::new(1.0).unwrap()).unwrap();
        }
        let moved = dual_handover(&s, chain, handover).unwrap();
        prop_assert_eq!(moved.lambdas(), s.lambdas());
        prop_assert_eq!(moved.thetas(), s.thetas());
    }
}

#[test]
fn rechaining_converges_when_shards_agree() {
    // Identical shards make every reference dual zero, so changing the
    // chain order cannot move the fixed point.
    let one = shards(1, 12, 3, 7).remove(0);
    let objs = vec![one; 8];
    let r = compute_reference_optimum(&objs, 1e-12).unwrap();
    let costs = cost_matrix(&random_placement(8, 250.0, 8).unwrap(), CostModel::Energy(EnergyModel::default()));
    for handover in [true, false] {
        let cfg = GadmmConfig::new(1.0).unwrap().with_max_iters(20_000).with_seed(3);
        let policy = RefreshPolicy { tau: 1, handover_duals: handover, ..Default::default() };
        let out = run_dgadmm(&objs, &cfg, policy, &r, &mut StaticTopology::new(costs.clone()), &mut NullSink).unwrap();
        assert_ne!(out.stop, StopReason::MaxIters, "handover={handover}");
        assert!(out.trace.last().unwrap().objective_error <= 1e-4);
    }
}

#[test]
fn identity_chain_neighbours() {
    let c = Chain::identity(4).unwrap();
    assert_eq!(c.neighbors(0), (None, Some(1)));
    assert_eq!(c.neighbors(2), (Some(1), Some(3)));
    assert_eq!(c.degree(3), 1);
}
