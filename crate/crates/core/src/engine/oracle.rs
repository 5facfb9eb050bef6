use crate::model::{decay, Block, Transaction};
use crate::rounding::{
    self, default_max_iters, Item, RandomizedRounder, RoundingError, RoundingOutcome,
    EXACT_PACK_CAP,
};
use crate::seeding;

use super::{BlockDecision, EngineError, OnlineAlgorithm, NEGLIGIBLE_VALUE};

/// A single-block integral multidimensional knapsack packer.
pub trait BlockOracle {
    fn name(&self) -> &'static str;

    fn pack(
        &mut self,
        t: Block,
        items: &[Item],
        capacities: &[f64],
    ) -> Result<RoundingOutcome, RoundingError>;
}

impl<O: BlockOracle + ?Sized> BlockOracle for Box<O> {
    fn name(&self) -> &'static str {
        (**self).name()
    }

    fn pack(
        &mut self,
        t: Block,
        items: &[Item],
        capacities: &[f64],
    ) -> Result<RoundingOutcome, RoundingError> {
        (**self).pack(t, items, capacities)
    }
}

#[derive(Debug, Clone)]
pub struct ExactOracle {
    pub cap: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle {
            cap: EXACT_PACK_CAP,
        }
    }
}

impl BlockOracle for ExactOracle {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn pack(
        &mut self,
        _t: Block,
        items: &[Item],
        capacities: &[f64],
    ) -> Result<RoundingOutcome, RoundingError> {
        rounding::exact_pack_with_cap(items, capacities, self.cap)
    }
}

#[derive(Debug, Clone, Default)]
pub struct DeterministicOracle;

impl BlockOracle for DeterministicOracle {
    fn name(&self) -> &'static str {
        "det"
    }

    fn pack(
        &mut self,
        _t: Block,
        items: &[Item],
        capacities: &[f64],
    ) -> Result<RoundingOutcome, RoundingError> {
        rounding::deterministic_round(items, capacities)
    }
}

/// Randomized rounding with a per-block seed split from `seed`.
#[derive(Debug, Clone)]
pub struct RandomizedOracle {
    pub delta: f64,
    pub seed: u64,
    /// `None` uses `⌈100·m/δ⌉`.
    pub max_iters: Option<u64>,
}

impl RandomizedOracle {
    pub fn new(delta: f64, seed: u64) -> Self {
        RandomizedOracle {
            delta,
            seed,
            max_iters: None,
        }
    }
}

impl BlockOracle for RandomizedOracle {
    fn name(&self) -> &'static str {
        "rand"
    }

    fn pack(
        &mut self,
        t: Block,
        items: &[Item],
        capacities: &[f64],
    ) -> Result<RoundingOutcome, RoundingError> {
        let max_iters = self
            .max_iters
            .unwrap_or_else(|| default_max_iters(capacities.len(), self.delta));
        let rounder = RandomizedRounder::new(items, capacities, self.delta)?;
        Ok(rounder.round(seeding::split_seed(self.seed, u64::from(t)), max_iters))
    }
}

/// Integral block packing: every block hands the unscheduled transactions,
/// valued at their current effective value, to a knapsack oracle.
#[derive(Debug, Clone)]
pub struct OracleIntegral<O> {
    capacities: Vec<f64>,
    oracle: O,
    unscheduled: Vec<Transaction>,
}

impl<O: BlockOracle> OracleIntegral<O> {
    pub fn new(capacities: Vec<f64>, oracle: O) -> Self {
        OracleIntegral {
            capacities,
            oracle,
            unscheduled: Vec::new(),
        }
    }
}

impl<O: BlockOracle> OnlineAlgorithm for OracleIntegral<O> {
    fn name(&self) -> String {
        format!("oracle-{}", self.oracle.name())
    }

    fn step(&mut self, t: Block, arrivals: &[Transaction]) -> Result<BlockDecision, EngineError> {
        self.unscheduled.extend_from_slice(arrivals);
        if self.unscheduled.is_empty() {
            return Ok(BlockDecision::empty());
        }
        // Fully decayed transactions stay in the pool with value zero.
        let items: Vec<Item> = self
            .unscheduled
            .iter()
            .map(|txn| {
                let v = decay(txn.value, txn.discount, t.saturating_sub(txn.arrival));
                let v = if v <= NEGLIGIBLE_VALUE * txn.value { 0.0 } else { v };
                Item::new(v, txn.demand.clone())
            })
            .collect();
        let outcome = self
            .oracle
            .pack(t, &items, &self.capacities)
            .map_err(|source| EngineError::Oracle { block: t, source })?;
        if !rounding::fits(&items, &outcome.chosen, &self.capacities) {
            return Err(EngineError::OracleInfeasible { block: t });
        }
        let mut chosen = vec![false; items.len()];
        for &i in &outcome.chosen {
            chosen[i] = true;
        }
        let fractions = outcome
            .chosen
            .iter()
            .map(|&i| (self.unscheduled[i].id.clone(), 1.0))
            .collect();
        let mut k = 0;
        self.unscheduled.retain(|_| {
            k += 1;
            !chosen[k - 1]
        });
        Ok(BlockDecision {
            fractions,
            certified_lambda: Some(outcome.certified_lambda),
            rounding_iterations: Some(outcome.iterations),
            fallback: outcome.fallback,
        })
    }
}
