use crate::lp::{self, PackingLp};
use crate::model::{decay, Block, Transaction, FEAS_TOL};

use super::{BlockDecision, EngineError, OnlineAlgorithm, NEGLIGIBLE_VALUE};

/// Greedy fractional packing: every block solves the LP that maximizes that
/// block's value over the unscheduled fractions of the transactions seen so
/// far.
#[derive(Debug, Clone)]
pub struct GreedyFractional {
    capacities: Vec<f64>,
    pool: Vec<Pending>,
}

#[derive(Debug, Clone)]
struct Pending {
    txn: Transaction,
    scheduled: f64,
}

impl GreedyFractional {
    pub fn new(capacities: Vec<f64>) -> Self {
        GreedyFractional {
            capacities,
            pool: Vec::new(),
        }
    }

    /// The LP for block `t` together with the pool positions of its columns.
    fn block_lp(&self, t: Block) -> (PackingLp, Vec<usize>) {
        let mut cols = Vec::new();
        let mut objective = Vec::new();
        let mut upper = Vec::new();
        for (pos, p) in self.pool.iter().enumerate() {
            let remaining = 1.0 - p.scheduled;
            if remaining <= FEAS_TOL || p.txn.arrival > t {
                continue;
            }
            let v = decay(p.txn.value, p.txn.discount, t - p.txn.arrival);
            if v <= NEGLIGIBLE_VALUE * p.txn.value || v <= 0.0 {
                continue;
            }
            cols.push(pos);
            objective.push(v);
            upper.push(remaining.min(1.0));
        }
        let matrix = (0..self.capacities.len())
            .map(|j| cols.iter().map(|&p| self.pool[p].txn.demand[j]).collect())
            .collect();
        let lp = PackingLp::new(objective, matrix, self.capacities.clone(), upper)
            .expect("greedy block LP is well formed by construction");
        (lp, cols)
    }
}

impl OnlineAlgorithm for GreedyFractional {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn step(&mut self, t: Block, arrivals: &[Transaction]) -> Result<BlockDecision, EngineError> {
        self.pool.extend(arrivals.iter().map(|txn| Pending {
            txn: txn.clone(),
            scheduled: 0.0,
        }));
        let (lp, cols) = self.block_lp(t);
        if cols.is_empty() {
            return Ok(BlockDecision::empty());
        }
        let sol = lp::solve_basic_optimal(&lp);
        let mut fractions = Vec::new();
        for (k, &pos) in cols.iter().enumerate() {
            let x = sol.values[k];
            if x > FEAS_TOL {
                self.pool[pos].scheduled += x;
                fractions.push((self.pool[pos].txn.id.clone(), x));
            }
        }
        self.pool.retain(|p| 1.0 - p.scheduled > FEAS_TOL);
        Ok(BlockDecision {
            fractions,
            certified_lambda: Some(1.0),
            ..Default::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, StaticSource};
    use crate::model::Instance;

    #[test]
    fn single_item_is_scheduled_fully() {
        let mut g = GreedyFractional::new(vec![1.0]);
        let d = g
            .step(1, &[Transaction::new("x", 1, 1.0, 0.0, vec![1.0])])
            .unwrap();
        assert_eq!(d.fractions, vec![("x".into(), 1.0)]);
    }

    #[test]
    fn higher_value_takes_the_block() {
        let mut g = GreedyFractional::new(vec![1.0]);
        let d = g
            .step(
                1,
                &[
                    Transaction::new("lo", 1, 1.0, 0.0, vec![1.0]),
                    Transaction::new("hi", 1, 2.0, 0.0, vec![1.0]),
                ],
            )
            .unwrap();
        assert_eq!(d.fractions, vec![("hi".into(), 1.0)]);
    }

    #[test]
    fn takes_the_disjoint_pair() {
        let mut g = GreedyFractional::new(vec![1.0, 1.0]);
        let d = g
            .step(
                1,
                &[
                    Transaction::new("A", 1, 2.0, 0.0, vec![1.0, 0.0]),
                    Transaction::new("B", 1, 1.0, 0.0, vec![1.0, 1.0]),
                    Transaction::new("C", 1, 1.0, 0.0, vec![0.0, 1.0]),
                ],
            )
            .unwrap();
        assert_eq!(d.fractions, vec![("A".into(), 1.0), ("C".into(), 1.0)]);
    }

    #[test]
    fn fractional_leftovers_carry_over() {
        let inst = Instance::new(
            vec![1.0],
            2,
            vec![
                Transaction::new("a", 1, 3.0, 0.0, vec![0.6]),
                Transaction::new("b", 1, 2.0, 0.0, vec![0.6]),
            ],
        )
        .unwrap();
        let mut g = GreedyFractional::new(vec![1.0]);
        let out = run(&mut g, &mut StaticSource::new(&inst), 2, 0).unwrap();
        let a = out.allocation.get(&"a".into(), 1);
        let b1 = out.allocation.get(&"b".into(), 1);
        let b2 = out.allocation.get(&"b".into(), 2);
        assert_eq!(a, 1.0);
        assert!((b1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((b2 - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.report.total_welfare - 5.0).abs() < 1e-12);
    }
}
