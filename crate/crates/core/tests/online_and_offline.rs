mod common;

use blockpack::adversary::{random_instance, DiscountDist, RandomParams, TwoPhaseAdversary, StaircaseAdversary};
use blockpack::engine::{
    batched_capacities, run, Batching, DeterministicOracle, GreedyFractional, OnlineAlgorithm,
    OracleIntegral, RandomizedOracle, StaticSource,
};
use blockpack::model::{
    check_myopically_reasonable, min_slackness, social_welfare, validate_feasibility, Allocation,
    Block, Instance, Transaction,
};
use blockpack::offline::{
    competitive_ratio, offline_fractional_opt, offline_integral_opt, OfflineError,
};
use proptest::prelude::*;

fn small_params() -> impl Strategy<Value = (u64, usize, usize, Block, f64)> {
    (any::<u64>(), 1usize..=6, 1usize..=3, 1 as Block..=4, 0.2..1.0f64)
}

fn small_instance(seed: u64, n: usize, m: usize, horizon: Block, q: f64) -> Instance {
    let mut p = RandomParams::new(n, m, horizon);
    p.q_max = q;
    p.discount = DiscountDist::Mixed { patient: 0.5, hi: 0.5 };
    random_instance(seed, &p).unwrap()
}

/// Best integral schedule by trying every assignment of a block (or none)
/// to every transaction.
fn brute_force_integral(inst: &Instance) -> f64 {
    let txns = inst.transactions();
    let horizon = inst.horizon();
    let choices = horizon as usize + 1;
    let total = choices.pow(txns.len() as u32);
    let mut best: f64 = 0.0;
    for code in 0..total {
        let mut c = code;
        let mut alloc = Allocation::integral();
        let mut ok = true;
        for txn in txns {
            let b = (c % choices) as Block;
            c /= choices;
            if b == 0 {
                continue;
            }
            if b < txn.arrival {
                ok = false;
                break;
            }
            alloc.add(&txn.id, b, 1.0);
        }
        if ok && validate_feasibility(&alloc, inst, true).is_empty() {
            best = best.max(social_welfare(&alloc, inst, 1, horizon).unwrap());
        }
    }
    best
}

#[test]
fn greedy_against_two_phase_adversary_by_hand() {
    let mut src = TwoPhaseAdversary::new(4).unwrap();
    let out = run(&mut GreedyFractional::new(vec![1.0, 1.0]), &mut src, 4, 0).unwrap();
    // Blocks 1-2 take an A each (value 2), blocks 3-4 one unit each.
    assert_eq!(out.report.per_block_welfare, vec![2.0, 2.0, 1.0, 1.0]);
    let inst = src.realized_instance().unwrap();
    let y = src.benchmark_allocation().unwrap();
    assert_eq!(competitive_ratio(&out.allocation, &y, &inst, 4, 0).unwrap(), 0.75);
    assert_eq!(min_slackness(&y, &inst).unwrap(), 0.0);
}

#[test]
fn rounding_algorithms_against_two_phase_adversary() {
    for horizon in [4, 40] {
        let algs: Vec<Box<dyn OnlineAlgorithm>> = vec![
            Box::new(OracleIntegral::new(vec![1.0, 1.0], DeterministicOracle)),
            Box::new(OracleIntegral::new(vec![1.0, 1.0], RandomizedOracle::new(0.25, 3))),
        ];
        for mut alg in algs {
            let mut src = TwoPhaseAdversary::new(horizon).unwrap();
            let out = run(&mut alg, &mut src, horizon, 0).unwrap();
            let inst = src.realized_instance().unwrap();
            let y = src.benchmark_allocation().unwrap();
            let r = competitive_ratio(&out.allocation, &y, &inst, horizon, 0).unwrap();
            assert!(r <= 7.0 / 8.0 + 1e-9, "{} T={horizon}: {r}", alg.name());
        }
    }
}

#[test]
fn case_one_fractional_optimum() {
    // Greedy never sees case one; build its instance directly.
    let k = 3;
    let mut txns = Vec::new();
    for i in 1..=2 * k {
        let a = if i <= k { 1 } else { k + 1 };
        txns.push(Transaction::new(format!("A{i}"), a, 2.0, 0.0, vec![1.0, 0.0]));
    }
    for i in 1..=k {
        txns.push(Transaction::new(format!("B{i}"), 1, 1.0, 0.0, vec![1.0, 1.0]));
    }
    let inst = Instance::new(vec![1.0, 1.0], 2 * k, txns).unwrap();
    let (_, v) = offline_fractional_opt(&inst).unwrap();
    assert!((v - 4.0 * f64::from(k)).abs() < 1e-9);
}

#[test]
fn staircase_fractional_optimum_beats_its_floor() {
    let adv = StaircaseAdversary::new(3, 4).unwrap();
    let inst = adv.instance();
    let (_, v) = offline_fractional_opt(&inst).unwrap();
    assert!(v >= (2.0 * 3.0 - 1.0) * 4.0);
    let bench = social_welfare(&adv.benchmark_allocation(), &inst, 1, adv.horizon()).unwrap();
    assert!(v >= bench - 1e-9);
}

#[test]
fn fractional_cap_is_enforced() {
    let inst = small_instance(1, 6, 2, 4, 0.5);
    assert!(matches!(
        blockpack::offline::offline_fractional_opt_with_cap(&inst, 3),
        Err(OfflineError::TooLarge(_))
    ));
}

#[test]
fn batching_with_unit_length_is_the_inner_algorithm() {
    for seed in 0..5 {
        let inst = small_instance(seed, 30, 2, 6, 0.3);
        let caps = inst.capacities().to_vec();
        let plain = run(
            &mut OracleIntegral::new(caps.clone(), RandomizedOracle::new(0.25, seed)),
            &mut StaticSource::new(&inst),
            6,
            0,
        )
        .unwrap();
        let batched = run(
            &mut Batching::new(
                OracleIntegral::new(batched_capacities(&caps, 1), RandomizedOracle::new(0.25, seed)),
                1,
            ),
            &mut StaticSource::new(&inst),
            6,
            0,
        )
        .unwrap();
        assert_eq!(plain.allocation, batched.allocation);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_search_matches_brute_force((seed, n, m, t, q) in small_params()) {
        let inst = small_instance(seed, n.min(5), m, t.min(3), q);
        let (alloc, v) = offline_integral_opt(&inst).unwrap();
        prop_assert!(validate_feasibility(&alloc, &inst, true).is_empty());
        let best = brute_force_integral(&inst);
        prop_assert!((v - best).abs() <= 1e-9 * (1.0 + best), "search {v} vs brute force {best}");
    }

    #[test]
    fn optima_are_ordered((seed, n, m, t, q) in small_params()) {
        let inst = small_instance(seed, n, m, t, q);
        let (y, frac) = offline_fractional_opt(&inst).unwrap();
        let (_, int) = offline_integral_opt(&inst).unwrap();
        prop_assert!(validate_feasibility(&y, &inst, false).is_empty());
        prop_assert!(frac >= int - 1e-9 * (1.0 + int));
        // The integral part of the fractional optimum is a feasible schedule.
        let mut rounded = Allocation::integral();
        for (b, id, x) in y.iter() {
            if x >= 1.0 - 1e-9 {
                rounded.add(id, b, 1.0);
            }
        }
        let rv = social_welfare(&rounded, &inst, 1, inst.horizon()).unwrap();
        prop_assert!(rv <= int + 1e-9 * (1.0 + int));
        let out = run(
            &mut OracleIntegral::new(inst.capacities().to_vec(), DeterministicOracle),
            &mut StaticSource::new(&inst),
            inst.horizon(),
            0,
        ).unwrap();
        prop_assert!(out.report.total_welfare <= int + 1e-9 * (1.0 + int));
    }

    #[test]
    fn greedy_keeps_half_and_the_block_inequality(seed in any::<u64>()) {
        let inst = common::corpus_instance(seed % 100_000);
        let horizon = inst.horizon();
        let (y, _) = offline_fractional_opt(&inst).unwrap();
        let out = run(
            &mut GreedyFractional::new(inst.capacities().to_vec()),
            &mut StaticSource::new(&inst),
            horizon,
            0,
        ).unwrap();
        prop_assert!(competitive_ratio(&out.allocation, &y, &inst, horizon, 0).unwrap() >= 0.5 - 1e-6);
        prop_assert!(common::per_block_shortfall(&out.allocation, &y, &inst) <= 1e-8);
        prop_assert!(check_myopically_reasonable(&out.allocation, &inst, 1e-7).is_empty());
        prop_assert!(validate_feasibility(&out.allocation, &inst, false).is_empty());
        prop_assert_eq!(out.report.min_slackness, 0.0);
    }

    #[test]
    fn batched_greedy_stays_within_slackness((seed, n, m, _t, q) in small_params(), l in 1 as Block..=4) {
        let horizon = 3 * l;
        let inst = small_instance(seed, n * 3, m, horizon, q);
        let caps = batched_capacities(inst.capacities(), l);
        let out = run(
            &mut Batching::new(GreedyFractional::new(caps), l),
            &mut StaticSource::new(&inst),
            horizon,
            l,
        ).unwrap();
        prop_assert!(out.allocation.iter().all(|(b, _, _)| b % l == 0));
        prop_assert!(out.report.min_slackness <= f64::from(l));
        prop_assert!(out.report.extension_used <= l);
    }
}
