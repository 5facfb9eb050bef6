//! The online simulation loop.
//!
//! [`run`] feeds arrivals block by block to an [`OnlineAlgorithm`], checks
//! every block it emits, and stitches the blocks into one [`Allocation`].
//! Sources see the full history of earlier blocks, so adaptive adversaries
//! can react to the algorithm's choices.

mod batching;
mod greedy;
mod oracle;

use std::collections::{HashMap, HashSet};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    self, Allocation, Block, Instance, ModelError, Transaction, TxnId, Violation, FEAS_TOL,
};
use crate::rounding::RoundingError;

pub use batching::{batched_capacities, Batching};
pub use greedy::GreedyFractional;
pub use oracle::{
    BlockOracle, DeterministicOracle, ExactOracle, OracleIntegral, RandomizedOracle,
};

/// Effective values below this fraction of the base value count as zero.
pub const NEGLIGIBLE_VALUE: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("block {block}: infeasible output: {}", list(.violations))]
    Infeasible {
        block: Block,
        violations: Vec<Violation>,
    },
    #[error("block {block}: bad arrival {id}: {reason}")]
    BadArrival {
        block: Block,
        id: TxnId,
        reason: String,
    },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("oracle failed in block {block}: {source}")]
    Oracle {
        block: Block,
        #[source]
        source: RoundingError,
    },
    #[error("oracle returned a packing that exceeds capacity in block {block}")]
    OracleInfeasible { block: Block },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// What an algorithm emits for one block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockDecision {
    pub fractions: Vec<(TxnId, f64)>,
    /// Oracle value divided by the block's fractional optimum.
    pub certified_lambda: Option<f64>,
    pub rounding_iterations: Option<u64>,
    pub fallback: bool,
}

impl BlockDecision {
    pub fn empty() -> Self {
        BlockDecision::default()
    }
}

pub trait OnlineAlgorithm {
    fn name(&self) -> String;

    /// Multiple of the base capacities that one block may use.
    fn capacity_scale(&self) -> f64 {
        1.0
    }

    /// Decides block `t`. `arrivals` are the transactions with arrival `t`;
    /// earlier ones were delivered in earlier calls.
    fn step(&mut self, t: Block, arrivals: &[Transaction]) -> Result<BlockDecision, EngineError>;
}

impl<A: OnlineAlgorithm + ?Sized> OnlineAlgorithm for Box<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn capacity_scale(&self) -> f64 {
        (**self).capacity_scale()
    }

    fn step(&mut self, t: Block, arrivals: &[Transaction]) -> Result<BlockDecision, EngineError> {
        (**self).step(t, arrivals)
    }
}

pub trait ArrivalSource {
    fn capacities(&self) -> &[f64];

    /// Transactions arriving in block `t`, given all blocks before `t`.
    fn arrivals(&mut self, t: Block, history: &Allocation) -> Vec<Transaction>;
}

impl<S: ArrivalSource + ?Sized> ArrivalSource for Box<S> {
    fn capacities(&self) -> &[f64] {
        (**self).capacities()
    }

    fn arrivals(&mut self, t: Block, history: &Allocation) -> Vec<Transaction> {
        (**self).arrivals(t, history)
    }
}

/// Oblivious source replaying a fixed instance.
#[derive(Debug, Clone)]
pub struct StaticSource {
    capacities: Vec<f64>,
    by_block: HashMap<Block, Vec<Transaction>>,
}

impl StaticSource {
    pub fn new(inst: &Instance) -> Self {
        let mut by_block: HashMap<Block, Vec<Transaction>> = HashMap::new();
        for t in inst.transactions() {
            by_block.entry(t.arrival).or_default().push(t.clone());
        }
        StaticSource {
            capacities: inst.capacities().to_vec(),
            by_block,
        }
    }
}

impl ArrivalSource for StaticSource {
    fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    fn arrivals(&mut self, t: Block, _history: &Allocation) -> Vec<Transaction> {
        self.by_block.remove(&t).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub algorithm: String,
    pub horizon: Block,
    pub extension: Block,
    /// `sw_t` for blocks `1..=horizon + extension`.
    pub per_block_welfare: Vec<f64>,
    /// Welfare over `welfare_range` (inclusive).
    pub total_welfare: f64,
    pub welfare_range: (Block, Block),
    /// Block × resource usage for blocks `1..=horizon + extension`.
    pub per_resource_usage: Vec<Vec<f64>>,
    pub min_slackness: f64,
    /// Blocks after the horizon up to the last nonempty one.
    pub extension_used: Block,
    pub certified_lambda: Vec<Option<f64>>,
    pub rounding_iterations: Vec<u64>,
    pub fallbacks: usize,
}

impl RunReport {
    pub fn welfare_between(&self, from: Block, to: Block) -> f64 {
        self.per_block_welfare
            .iter()
            .enumerate()
            .filter(|(i, _)| (from..=to).contains(&(*i as Block + 1)))
            .map(|(_, w)| w)
            .sum()
    }

    pub fn mean_iterations(&self) -> Option<f64> {
        if self.rounding_iterations.is_empty() {
            None
        } else {
            let total: u64 = self.rounding_iterations.iter().sum();
            Some(total as f64 / self.rounding_iterations.len() as f64)
        }
    }

    /// `block,welfare,usage_1,…,usage_m`.
    pub fn write_blocks_csv<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_writer(writer);
        let m = self.per_resource_usage.first().map_or(0, |r| r.len());
        let mut header = vec!["block".to_owned(), "welfare".to_owned()];
        header.extend((1..=m).map(|j| format!("usage_{j}")));
        w.write_record(&header)?;
        for (i, (sw, usage)) in self
            .per_block_welfare
            .iter()
            .zip(&self.per_resource_usage)
            .enumerate()
        {
            let mut rec = vec![(i + 1).to_string(), sw.to_string()];
            rec.extend(usage.iter().map(|u| u.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub allocation: Allocation,
    pub report: RunReport,
    /// Every transaction the source delivered.
    pub instance: Instance,
}

/// Runs blocks `1..=horizon + extension`. Arrivals stop after `horizon`.
pub fn run<A, S>(
    alg: &mut A,
    src: &mut S,
    horizon: Block,
    extension: Block,
) -> Result<RunOutcome, EngineError>
where
    A: OnlineAlgorithm + ?Sized,
    S: ArrivalSource + ?Sized,
{
    if horizon < 1 {
        return Err(EngineError::ZeroHorizon);
    }
    let capacities = src.capacities().to_vec();
    let m = capacities.len();
    let last = horizon + extension;

    let mut allocation = Allocation::new();
    let mut delivered: Vec<Transaction> = Vec::new();
    let mut index: HashMap<TxnId, usize> = HashMap::new();
    let mut cumulative: Vec<f64> = Vec::new();
    let mut lambdas = Vec::with_capacity(last as usize);
    let mut iterations = Vec::new();
    let mut fallbacks = 0;
    let mut all_integral = true;

    for t in 1..=last {
        let arrivals = if t <= horizon {
            src.arrivals(t, &allocation)
        } else {
            Vec::new()
        };
        for txn in &arrivals {
            let bad = |reason: String| EngineError::BadArrival {
                block: t,
                id: txn.id.clone(),
                reason,
            };
            if txn.arrival != t {
                return Err(bad(format!("declared arrival {}", txn.arrival)));
            }
            if txn.demand.len() != m {
                return Err(bad(format!("demand has {} entries, expected {m}", txn.demand.len())));
            }
            txn.validate()?;
            if index.insert(txn.id.clone(), delivered.len()).is_some() {
                return Err(bad("duplicate id".into()));
            }
            delivered.push(txn.clone());
            cumulative.push(0.0);
        }

        let decision = alg.step(t, &arrivals)?;
        let scale = alg.capacity_scale();
        let caps: Vec<f64> = capacities.iter().map(|b| b * scale).collect();
        let block = check_block(t, &decision, &delivered, &index, &mut cumulative, &caps)?;

        for (id, x) in block {
            if x != 1.0 {
                all_integral = false;
            }
            allocation.add(&id, t, x);
        }
        lambdas.push(decision.certified_lambda);
        if let Some(it) = decision.rounding_iterations {
            iterations.push(it);
        }
        fallbacks += usize::from(decision.fallback);
    }
    allocation.set_integral_flag(all_integral && !allocation.is_empty());

    let instance = Instance::new(capacities, horizon, delivered)?;
    let per_block_welfare = model::block_welfare(&allocation, &instance, 1, last)?;
    let per_resource_usage = allocation.usage(&instance, last)?;
    let min_slackness = model::slackness_of_usage(&per_resource_usage, instance.capacities());
    let extension_used = allocation
        .last_block()
        .map_or(0, |b| b.saturating_sub(horizon));
    let report = RunReport {
        algorithm: alg.name(),
        horizon,
        extension,
        total_welfare: per_block_welfare.iter().sum(),
        welfare_range: (1, last),
        per_block_welfare,
        per_resource_usage,
        min_slackness,
        extension_used,
        certified_lambda: lambdas,
        rounding_iterations: iterations,
        fallbacks,
    };
    Ok(RunOutcome {
        allocation,
        report,
        instance,
    })
}

/// Checks one emitted block against arrivals, remaining fractions and the
/// (scaled) capacities, and merges duplicate entries.
fn check_block(
    t: Block,
    decision: &BlockDecision,
    delivered: &[Transaction],
    index: &HashMap<TxnId, usize>,
    cumulative: &mut [f64],
    caps: &[f64],
) -> Result<Vec<(TxnId, f64)>, EngineError> {
    let mut violations = Vec::new();
    let mut merged: Vec<(usize, f64)> = Vec::new();
    let mut seen: HashSet<usize> = HashSet::new();
    for (id, x) in &decision.fractions {
        let Some(&pos) = index.get(id) else {
            violations.push(Violation::UnknownTransaction { id: id.clone() });
            continue;
        };
        if !(*x >= 0.0 && *x <= 1.0 + FEAS_TOL) {
            violations.push(Violation::FractionOutOfRange {
                id: id.clone(),
                block: t,
                fraction: *x,
            });
            continue;
        }
        if delivered[pos].arrival > t {
            violations.push(Violation::BeforeArrival {
                id: id.clone(),
                block: t,
                arrival: delivered[pos].arrival,
            });
        }
        if seen.insert(pos) {
            merged.push((pos, *x));
        } else if let Some(e) = merged.iter_mut().find(|(p, _)| *p == pos) {
            e.1 += x;
        }
    }
    let mut usage = vec![0.0; caps.len()];
    for &(pos, x) in &merged {
        let total = cumulative[pos] + x;
        if total > 1.0 + FEAS_TOL {
            violations.push(Violation::OverScheduled {
                id: delivered[pos].id.clone(),
                total,
            });
        }
        for (u, w) in usage.iter_mut().zip(&delivered[pos].demand) {
            *u += x * w;
        }
    }
    for (j, (u, b)) in usage.iter().zip(caps).enumerate() {
        if *u > b + FEAS_TOL * b {
            violations.push(Violation::Capacity {
                block: t,
                resource: j,
                usage: *u,
                capacity: *b,
            });
        }
    }
    if !violations.is_empty() {
        return Err(EngineError::Infeasible {
            block: t,
            violations,
        });
    }
    Ok(merged
        .into_iter()
        .map(|(pos, x)| {
            cumulative[pos] += x;
            (delivered[pos].id.clone(), x)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<(Block, &'static str, f64)>);

    impl OnlineAlgorithm for Fixed {
        fn name(&self) -> String {
            "fixed".into()
        }

        fn step(&mut self, t: Block, _: &[Transaction]) -> Result<BlockDecision, EngineError> {
            Ok(BlockDecision {
                fractions: self
                    .0
                    .iter()
                    .filter(|(b, _, _)| *b == t)
                    .map(|(_, id, x)| (TxnId::from(*id), *x))
                    .collect(),
                ..Default::default()
            })
        }
    }

    fn inst() -> Instance {
        Instance::new(
            vec![1.0],
            3,
            vec![
                Transaction::new("a", 1, 1.0, 0.0, vec![1.0]),
                Transaction::new("b", 2, 1.0, 0.0, vec![0.5]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_source_gives_zero_welfare() {
        let empty = Instance::new(vec![1.0, 1.0], 4, vec![]).unwrap();
        let mut alg = GreedyFractional::new(vec![1.0, 1.0]);
        let out = run(&mut alg, &mut StaticSource::new(&empty), 4, 0).unwrap();
        assert!(out.allocation.is_empty());
        assert_eq!(out.report.total_welfare, 0.0);
        assert_eq!(out.report.per_block_welfare.len(), 4);
    }

    #[test]
    fn engine_rejects_capacity_overflow() {
        let mut alg = Fixed(vec![(2, "a", 1.0), (2, "b", 1.0)]);
        let err = run(&mut alg, &mut StaticSource::new(&inst()), 3, 0).unwrap_err();
        assert!(matches!(err, EngineError::Infeasible { block: 2, .. }));
    }

    #[test]
    fn engine_rejects_scheduling_before_arrival() {
        let mut alg = Fixed(vec![(1, "b", 1.0)]);
        let err = run(&mut alg, &mut StaticSource::new(&inst()), 3, 0).unwrap_err();
        // "b" is not delivered yet at block 1.
        assert!(matches!(err, EngineError::Infeasible { block: 1, .. }));
    }

    #[test]
    fn engine_rejects_double_scheduling() {
        let mut alg = Fixed(vec![(2, "b", 0.7), (3, "b", 0.7)]);
        let err = run(&mut alg, &mut StaticSource::new(&inst()), 3, 0).unwrap_err();
        match err {
            EngineError::Infeasible { block, violations } => {
                assert_eq!(block, 3);
                assert!(matches!(violations[0], Violation::OverScheduled { .. }));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn extension_blocks_receive_no_arrivals() {
        let mut alg = Fixed(vec![(4, "a", 1.0)]);
        let out = run(&mut alg, &mut StaticSource::new(&inst()), 3, 2).unwrap();
        assert_eq!(out.report.extension_used, 1);
        assert_eq!(out.report.per_block_welfare, vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(out.allocation.is_integral_flagged());
    }
}
