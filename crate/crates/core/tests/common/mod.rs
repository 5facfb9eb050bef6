//! Shared instance generators and reference checks for the integration suites.
#![allow(dead_code)]

use std::collections::HashMap;

use blockpack::adversary::{random_instance, ArrivalDist, DiscountDist, RandomParams};
use blockpack::model::{decay, Allocation, Block, Instance, TxnId};
use blockpack::rounding::Item;
use blockpack::seeding;
use rand::Rng;

/// One instance of the randomized corpus: `m ≤ 4`, `n ≤ 100`, `T ≤ 15`,
/// mixed discounts, a range of item sizes and arrival patterns.
pub fn corpus_instance(seed: u64) -> Instance {
    let mut rng = seeding::stream_rng(seed, 99);
    let m = rng.random_range(1..=4);
    let n = rng.random_range(1..=100);
    let horizon = rng.random_range(1..=15);
    let mut p = RandomParams::new(n, m, horizon);
    p.capacities = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
    p.q_max = [0.1, 0.3, 0.6, 1.0][rng.random_range(0..4)];
    p.density = rng.random_range(0.3..=1.0);
    p.value_range = (0.1, rng.random_range(0.5..5.0));
    p.discount = DiscountDist::Mixed {
        patient: 0.4,
        hi: rng.random_range(0.05..0.6),
    };
    p.arrival = if rng.random_bool(0.2) {
        ArrivalDist::Front
    } else {
        ArrivalDist::Uniform
    };
    random_instance(seed, &p).expect("corpus parameters are valid")
}

/// Positions of transactions and their per-block fractions, `x[i][t-1]`.
pub fn dense(alloc: &Allocation, inst: &Instance, last: Block) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; last as usize]; inst.len()];
    for (b, id, f) in alloc.iter() {
        if b <= last {
            x[inst.position(id).expect("known id")][b as usize - 1] += f;
        }
    }
    x
}

/// `v_i^t` for `t ≥ a_i`, 0 before arrival.
pub fn values(inst: &Instance, last: Block) -> Vec<Vec<f64>> {
    inst.transactions()
        .iter()
        .map(|txn| {
            (1..=last)
                .map(|t| {
                    if t < txn.arrival {
                        0.0
                    } else {
                        decay(txn.value, txn.discount, t - txn.arrival)
                    }
                })
                .collect()
        })
        .collect()
}

/// Worst relative shortfall of `Σ_i x^t v^t ≥ Σ_i (1 − X^{t−1}) y^t v^t`
/// over the blocks `1..=T` (non-positive when it holds everywhere).
pub fn per_block_shortfall(x: &Allocation, y: &Allocation, inst: &Instance) -> f64 {
    let last = inst.horizon();
    let xs = dense(x, inst, last);
    let ys = dense(y, inst, last);
    let vs = values(inst, last);
    let mut worst = f64::NEG_INFINITY;
    let mut cum = vec![0.0; inst.len()];
    for t in 0..last as usize {
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for i in 0..inst.len() {
            lhs += xs[i][t] * vs[i][t];
            rhs += (1.0 - cum[i]) * ys[i][t] * vs[i][t];
        }
        for i in 0..inst.len() {
            cum[i] += xs[i][t];
        }
        let scale = rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((rhs - lhs) / scale);
    }
    worst
}

/// Both sides of `Σ_t x^t v^t ≥ Σ_t X^t y^t v^t` summed over transactions.
pub fn cumulative_sides(x: &Allocation, y: &Allocation, inst: &Instance, last: Block) -> (f64, f64) {
    let xs = dense(x, inst, last);
    let ys = dense(y, inst, last);
    let vs = values(inst, last);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..inst.len() {
        let mut cum = 0.0;
        for t in 0..last as usize {
            cum += xs[i][t];
            lhs += xs[i][t] * vs[i][t];
            rhs += cum * ys[i][t] * vs[i][t];
        }
    }
    (lhs, rhs)
}

/// An arbitrary fractional allocation over `1..=T`: random per-block
/// fractions after arrival, each transaction's total at most 1, capacities
/// ignored.
pub fn random_allocation<R: Rng>(rng: &mut R, inst: &Instance) -> Allocation {
    let mut a = Allocation::new();
    for txn in inst.transactions() {
        let total: f64 = if rng.random_bool(0.2) { 1.0 } else { rng.random() };
        let blocks: Vec<Block> = (txn.arrival..=inst.horizon())
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if blocks.is_empty() {
            continue;
        }
        let weights: Vec<f64> = blocks.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        let sum: f64 = weights.iter().sum();
        for (b, w) in blocks.iter().zip(&weights) {
            a.add(&txn.id, *b, total * w / sum);
        }
    }
    a
}

/// Random single-block knapsack with `q_max` exactly `q` (relative to
/// capacity); at least one resource demanded per item.
pub fn random_block<R: Rng>(rng: &mut R, n: usize, m: usize, q: f64) -> (Vec<Item>, Vec<f64>) {
    let caps: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut items: Vec<Item> = (0..n)
        .map(|_| {
            let forced = rng.random_range(0..m);
            let demand = caps
                .iter()
                .enumerate()
                .map(|(j, b)| {
                    if j == forced || rng.random_bool(0.5) {
                        rng.random_range(0.05..=1.0) * q * b
                    } else {
                        0.0
                    }
                })
                .collect();
            Item::new(rng.random_range(0.1..10.0), demand)
        })
        .collect();
    if let Some(first) = items.first_mut() {
        first.demand[0] = q * caps[0];
    }
    (items, caps)
}

pub fn totals(alloc: &Allocation) -> HashMap<TxnId, f64> {
    alloc.totals().into_iter().map(|(k, v)| (k.clone(), v)).collect()
}
