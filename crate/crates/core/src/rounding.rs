//! Single-block integral packers.
//!
//! All three packers work on one multidimensional knapsack: a list of
//! [`Item`]s and a capacity vector. [`deterministic_round`] and
//! [`randomized_round`] round a basic optimum of the block LP;
//! [`exact_pack`] is an exhaustive branch-and-bound used as a λ = 1 oracle
//! and for cross-validation.

use log::warn;
use rand::Rng;
use thiserror::Error;

use crate::lp::{self, LpError, LpSolution, PackingLp};
use crate::model::FEAS_TOL;
use crate::seeding;

/// Default item cap for [`exact_pack`].
pub const EXACT_PACK_CAP: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum RoundingError {
    #[error("exact packing refuses {count} items (cap {cap})")]
    TooManyItems { count: usize, cap: usize },
    #[error("item {item} has {len} demand entries, expected {m}")]
    DimensionMismatch { item: usize, len: usize, m: usize },
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub value: f64,
    pub demand: Vec<f64>,
}

impl Item {
    pub fn new(value: f64, demand: Vec<f64>) -> Self {
        Item { value, demand }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingOutcome {
    /// Indices into the item slice, ascending.
    pub chosen: Vec<usize>,
    pub value: f64,
    /// Sampling rounds; 1 for deterministic packers.
    pub iterations: u64,
    /// `value / lp_value` (1 when the LP optimum is 0).
    pub certified_lambda: f64,
    pub lp_value: f64,
    /// Randomized rounding ran out of iterations and fell back to
    /// deterministic rounding.
    pub fallback: bool,
    pub seed: Option<u64>,
}

fn lambda(value: f64, lp_value: f64) -> f64 {
    if lp_value > 0.0 {
        value / lp_value
    } else {
        1.0
    }
}

fn check_dims(items: &[Item], m: usize) -> Result<(), RoundingError> {
    match items.iter().position(|it| it.demand.len() != m) {
        Some(i) => Err(RoundingError::DimensionMismatch {
            item: i,
            len: items[i].demand.len(),
            m,
        }),
        None => Ok(()),
    }
}

/// The block LP `max Σ v_i x_i` s.t. `Σ w_ij x_i ≤ B_j`, `0 ≤ x ≤ 1`.
pub fn block_lp(items: &[Item], capacities: &[f64]) -> Result<PackingLp, RoundingError> {
    check_dims(items, capacities.len())?;
    let matrix = (0..capacities.len())
        .map(|j| items.iter().map(|it| it.demand[j]).collect())
        .collect();
    Ok(PackingLp::new(
        items.iter().map(|it| it.value).collect(),
        matrix,
        capacities.to_vec(),
        vec![1.0; items.len()],
    )?)
}

/// `max_{i,j} w_ij / B_j` over the items.
pub fn q_max(items: &[Item], capacities: &[f64]) -> f64 {
    items
        .iter()
        .flat_map(|it| it.demand.iter().zip(capacities).map(|(w, b)| w / b))
        .fold(0.0, f64::max)
}

pub fn fits(items: &[Item], chosen: &[usize], capacities: &[f64]) -> bool {
    capacities.iter().enumerate().all(|(j, b)| {
        let used: f64 = chosen.iter().map(|&i| items[i].demand[j]).sum();
        used <= b + FEAS_TOL * b
    })
}

fn value_of(items: &[Item], chosen: &[usize]) -> f64 {
    chosen.iter().map(|&i| items[i].value).sum()
}

/// Keeps the items a basic LP optimum schedules fully and drops the rest.
pub fn deterministic_round(
    items: &[Item],
    capacities: &[f64],
) -> Result<RoundingOutcome, RoundingError> {
    let lp = block_lp(items, capacities)?;
    let sol = lp::solve_basic_optimal(&lp);
    Ok(round_down(items, &sol))
}

fn round_down(items: &[Item], sol: &LpSolution) -> RoundingOutcome {
    let chosen: Vec<usize> = sol
        .values
        .iter()
        .enumerate()
        .filter(|(_, x)| **x >= 1.0 - FEAS_TOL)
        .map(|(i, _)| i)
        .collect();
    let value = value_of(items, &chosen);
    RoundingOutcome {
        chosen,
        value,
        iterations: 1,
        certified_lambda: lambda(value, sol.objective_value),
        lp_value: sol.objective_value,
        fallback: false,
        seed: None,
    }
}

/// `δ² / (16 ln(5m/δ))`: the item-size regime in which randomized rounding
/// succeeds with probability at least `δ / (10m)` per round.
pub fn randomized_regime_q_max(m: usize, delta: f64) -> f64 {
    delta * delta / (16.0 * (5.0 * m as f64 / delta).ln())
}

/// `⌈100·m/δ⌉`.
pub fn default_max_iters(m: usize, delta: f64) -> u64 {
    (100.0 * m as f64 / delta).ceil() as u64
}

/// One independent Bernoulli draw of the randomized rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub chosen: Vec<usize>,
    pub value: f64,
    pub usage: Vec<f64>,
}

/// Randomized rounding around a fixed basic LP optimum. The LP is solved once;
/// every round resamples against the same `x*`.
#[derive(Debug, Clone)]
pub struct RandomizedRounder<'a> {
    items: &'a [Item],
    capacities: &'a [f64],
    delta: f64,
    solution: LpSolution,
    /// (index, probability) for items with `x*_i > 0`.
    probs: Vec<(usize, f64)>,
}

impl<'a> RandomizedRounder<'a> {
    pub fn new(items: &'a [Item], capacities: &'a [f64], delta: f64) -> Result<Self, RoundingError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(RoundingError::BadDelta(delta));
        }
        let lp = block_lp(items, capacities)?;
        let solution = lp::solve_basic_optimal(&lp);
        let keep = 1.0 - delta / 2.0;
        let probs = solution
            .values
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > 0.0)
            .map(|(i, x)| (i, keep * x))
            .collect();
        Ok(RandomizedRounder {
            items,
            capacities,
            delta,
            solution,
            probs,
        })
    }

    pub fn lp_solution(&self) -> &LpSolution {
        &self.solution
    }

    pub fn lp_value(&self) -> f64 {
        self.solution.objective_value
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let mut chosen = Vec::new();
        let mut usage = vec![0.0; self.capacities.len()];
        let mut value = 0.0;
        for &(i, p) in &self.probs {
            if rng.random::<f64>() < p {
                chosen.push(i);
                value += self.items[i].value;
                for (u, w) in usage.iter_mut().zip(&self.items[i].demand) {
                    *u += w;
                }
            }
        }
        Sample { chosen, value, usage }
    }

    pub fn is_feasible(&self, s: &Sample) -> bool {
        s.usage
            .iter()
            .zip(self.capacities)
            .all(|(u, b)| *u <= b + FEAS_TOL * b)
    }

    pub fn meets_value_target(&self, s: &Sample) -> bool {
        let target = (1.0 - self.delta) * self.lp_value();
        s.value >= target - FEAS_TOL * self.lp_value()
    }

    pub fn accepts(&self, s: &Sample) -> bool {
        self.is_feasible(s) && self.meets_value_target(s)
    }

    /// Samples until both acceptance tests pass, or falls back to
    /// deterministic rounding after `max_iters` rounds.
    pub fn round(&self, seed: u64, max_iters: u64) -> RoundingOutcome {
        let mut rng = seeding::rng_for(seed);
        let lp_value = self.lp_value();
        for it in 1..=max_iters.max(1) {
            let s = self.sample(&mut rng);
            if self.accepts(&s) {
                return RoundingOutcome {
                    certified_lambda: lambda(s.value, lp_value),
                    chosen: s.chosen,
                    value: s.value,
                    iterations: it,
                    lp_value,
                    fallback: false,
                    seed: Some(seed),
                };
            }
        }
        warn!("randomized rounding exhausted {max_iters} rounds; using deterministic rounding");
        let mut out = round_down(self.items, &self.solution);
        out.iterations = max_iters;
        out.fallback = true;
        out.seed = Some(seed);
        out
    }
}

/// Randomized rounding with mean `(1 − δ/2)·x*_i` per item.
pub fn randomized_round(
    items: &[Item],
    capacities: &[f64],
    delta: f64,
    seed: u64,
    max_iters: u64,
) -> Result<RoundingOutcome, RoundingError> {
    Ok(RandomizedRounder::new(items, capacities, delta)?.round(seed, max_iters))
}

/// Exact multidimensional knapsack by branch-and-bound, up to
/// [`EXACT_PACK_CAP`] items.
pub fn exact_pack(items: &[Item], capacities: &[f64]) -> Result<RoundingOutcome, RoundingError> {
    exact_pack_with_cap(items, capacities, EXACT_PACK_CAP)
}

pub fn exact_pack_with_cap(
    items: &[Item],
    capacities: &[f64],
    cap: usize,
) -> Result<RoundingOutcome, RoundingError> {
    if items.len() > cap {
        return Err(RoundingError::TooManyItems {
            count: items.len(),
            cap,
        });
    }
    let lp = block_lp(items, capacities)?;
    let lp_value = lp::solve_basic_optimal(&lp).objective_value;

    let m = capacities.len();
    let size = |i: usize| -> f64 {
        items[i]
            .demand
            .iter()
            .zip(capacities)
            .map(|(w, b)| w / b)
            .sum()
    };
    // Only positive-value items can improve a packing.
    let mut order: Vec<usize> = (0..items.len()).filter(|&i| items[i].value > 0.0).collect();
    order.sort_by(|&a, &b| {
        let da = items[a].value / (size(a) + 1e-300);
        let db = items[b].value / (size(b) + 1e-300);
        db.total_cmp(&da).then(a.cmp(&b))
    });
    let mut suffix = vec![0.0; order.len() + 1];
    for k in (0..order.len()).rev() {
        suffix[k] = suffix[k + 1] + items[order[k]].value;
    }
    // Per resource: depths in `order` sorted by value per unit of that resource.
    let by_resource: Vec<Vec<usize>> = (0..m)
        .map(|j| {
            let mut d: Vec<usize> = (0..order.len()).collect();
            d.sort_by(|&a, &b| {
                let ra = items[order[a]].value / items[order[a]].demand[j];
                let rb = items[order[b]].value / items[order[b]].demand[j];
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            d
        })
        .collect();

    let mut search = Search {
        items,
        order: &order,
        suffix: &suffix,
        by_resource: &by_resource,
        residual: capacities.iter().map(|b| b + FEAS_TOL * b).collect(),
        current: Vec::new(),
        current_value: 0.0,
        best: Vec::new(),
        best_value: 0.0,
    };
    search.dfs(0);

    let mut chosen = search.best;
    chosen.sort_unstable();
    let value = value_of(items, &chosen);
    Ok(RoundingOutcome {
        chosen,
        value,
        iterations: 1,
        certified_lambda: lambda(value, lp_value),
        lp_value,
        fallback: false,
        seed: None,
    })
}

struct Search<'a> {
    items: &'a [Item],
    order: &'a [usize],
    suffix: &'a [f64],
    by_resource: &'a [Vec<usize>],
    residual: Vec<f64>,
    current: Vec<usize>,
    current_value: f64,
    best: Vec<usize>,
    best_value: f64,
}

impl Search<'_> {
    /// Fractional single-resource knapsack over undecided items; each one is
    /// a valid upper bound on what the remaining items can add.
    fn bound(&self, depth: usize) -> f64 {
        let mut ub = self.suffix[depth];
        for (j, list) in self.by_resource.iter().enumerate() {
            let mut room = self.residual[j];
            let mut total = 0.0;
            for &d in list {
                if d < depth {
                    continue;
                }
                let it = &self.items[self.order[d]];
                let w = it.demand[j];
                if w <= room {
                    room -= w;
                    total += it.value;
                } else {
                    total += it.value * room / w;
                    break;
                }
            }
            ub = ub.min(total);
        }
        ub
    }

    fn dfs(&mut self, depth: usize) {
        if self.current_value > self.best_value {
            self.best_value = self.current_value;
            self.best = self.current.clone();
        }
        if depth == self.order.len() {
            return;
        }
        if self.current_value + self.bound(depth) <= self.best_value * (1.0 + 1e-12) {
            return;
        }
        let i = self.order[depth];
        let it = &self.items[i];
        if it.demand.iter().zip(&self.residual).all(|(w, r)| w <= r) {
            for (r, w) in self.residual.iter_mut().zip(&it.demand) {
                *r -= w;
            }
            self.current.push(i);
            self.current_value += it.value;
            self.dfs(depth + 1);
            self.current_value -= it.value;
            self.current.pop();
            for (r, w) in self.residual.iter_mut().zip(&it.demand) {
                *r += w;
            }
        }
        self.dfs(depth + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Vec<Item> {
        vec![
            Item::new(2.0, vec![1.0, 0.0]),
            Item::new(1.0, vec![1.0, 1.0]),
            Item::new(1.0, vec![0.0, 1.0]),
        ]
    }

    fn three_small() -> Vec<Item> {
        vec![Item::new(1.0, vec![0.4]); 3]
    }

    #[test]
    fn deterministic_on_integral_lp() {
        let out = deterministic_round(&abc(), &[1.0, 1.0]).unwrap();
        assert_eq!(out.chosen, vec![0, 2]);
        assert_eq!(out.value, 3.0);
        assert_eq!(out.certified_lambda, 1.0);
    }

    #[test]
    fn deterministic_drops_fractional_item() {
        // Basic optimum (1, 1, 0.5) with V* = 2.5.
        let out = deterministic_round(&three_small(), &[1.0]).unwrap();
        assert_eq!(out.chosen.len(), 2);
        assert_eq!(out.value, 2.0);
        assert!((out.lp_value - 2.5).abs() < 1e-12);
        assert!((out.certified_lambda - 0.8).abs() < 1e-12);
    }

    #[test]
    fn exact_examples() {
        let one = exact_pack(&[Item::new(3.0, vec![0.5])], &[1.0]).unwrap();
        assert_eq!(one.chosen, vec![0]);
        let abc = exact_pack(&abc(), &[1.0, 1.0]).unwrap();
        assert_eq!(abc.chosen, vec![0, 2]);
        assert_eq!(abc.value, 3.0);
        let small = exact_pack(&three_small(), &[1.0]).unwrap();
        assert_eq!(small.chosen.len(), 2);
        assert_eq!(small.value, 2.0);
    }

    #[test]
    fn exact_refuses_oversized_input() {
        let items = vec![Item::new(1.0, vec![0.1]); 25];
        assert_eq!(
            exact_pack(&items, &[1.0]),
            Err(RoundingError::TooManyItems { count: 25, cap: 24 })
        );
    }

    #[test]
    fn randomized_with_zero_lp_accepts_empty_set() {
        let items = vec![Item::new(0.0, vec![0.5]); 3];
        let out = randomized_round(&items, &[1.0], 0.25, 9, 10).unwrap();
        assert!(out.chosen.is_empty());
        assert_eq!(out.iterations, 1);
        assert!(!out.fallback);
    }

    #[test]
    fn randomized_rejects_bad_delta() {
        assert_eq!(
            randomized_round(&abc(), &[1.0, 1.0], 1.0, 0, 10),
            Err(RoundingError::BadDelta(1.0))
        );
    }

    #[test]
    fn randomized_falls_back_when_rounds_run_out() {
        // One item filling the block: each round keeps it with probability
        // 1 − δ/2, so with δ close to 1 and a single round failures happen.
        let items = vec![Item::new(1.0, vec![1.0])];
        let fallbacks = (0..64)
            .map(|s| randomized_round(&items, &[1.0], 0.99, s, 1).unwrap())
            .filter(|o| o.fallback)
            .count();
        assert!(fallbacks > 0);
    }

    #[test]
    fn randomized_outcome_is_replayable() {
        let items: Vec<Item> = (0..40)
            .map(|i| Item::new(1.0 + i as f64 * 0.01, vec![0.05, 0.03]))
            .collect();
        let a = randomized_round(&items, &[1.0, 1.0], 0.25, 42, 400).unwrap();
        let b = randomized_round(&items, &[1.0, 1.0], 0.25, 42, 400).unwrap();
        assert_eq!(a, b);
        assert!(fits(&items, &a.chosen, &[1.0, 1.0]));
        assert!(a.value >= 0.75 * a.lp_value - 1e-12);
    }

    #[test]
    fn regime_threshold_value() {
        // δ = 0.25, m = 4: 0.0625 / (16 ln 80)
        let q = randomized_regime_q_max(4, 0.25);
        assert!((q - 0.0625 / (16.0 * 80f64.ln())).abs() < 1e-15);
        assert_eq!(default_max_iters(4, 0.25), 1600);
    }
}
