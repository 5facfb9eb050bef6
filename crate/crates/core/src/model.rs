//! Domain types shared by every other module: transactions, instances,
//! allocations, welfare accounting and the allocation validators.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;
/// Relative tolerance for welfare comparisons.
pub const WELFARE_RTOL: f64 = 1e-6;

/// Block index. Blocks are numbered from 1.
pub type Block = u32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("block {block} precedes arrival {arrival} of transaction {id}")]
    BeforeArrival { id: TxnId, block: Block, arrival: Block },
    #[error("unknown transaction id {0}")]
    UnknownTransaction(TxnId),
    #[error("invalid transaction {id}: {reason}")]
    InvalidTransaction { id: TxnId, reason: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("empty block range {from}..={to}")]
    EmptyRange { from: Block, to: Block },
    #[error("malformed allocation record: {0}")]
    MalformedAllocation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Opaque transaction identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxnId(pub String);

impl TxnId {
    pub fn new(s: impl Into<String>) -> Self {
        TxnId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TxnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TxnId {
    fn from(s: &str) -> Self {
        TxnId(s.to_owned())
    }
}

/// A quasi-patient transaction: base value `value` decays by a factor
/// `1 - discount` per block of waiting after `arrival`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxnId,
    pub arrival: Block,
    pub value: f64,
    pub discount: f64,
    pub demand: Vec<f64>,
}

impl Transaction {
    pub fn new(
        id: impl Into<TxnId>,
        arrival: Block,
        value: f64,
        discount: f64,
        demand: Vec<f64>,
    ) -> Self {
        Transaction {
            id: id.into(),
            arrival,
            value,
            discount,
            demand,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| {
            Err(ModelError::InvalidTransaction {
                id: self.id.clone(),
                reason: reason.to_owned(),
            })
        };
        if self.arrival < 1 {
            return bad("arrival must be at least 1");
        }
        if !(self.value >= 0.0) || !self.value.is_finite() {
            return bad("value must be a non-negative finite number");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if self.demand.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad("demand components must be non-negative and finite");
        }
        Ok(())
    }

    /// Value of scheduling this transaction in block `t`.
    pub fn effective_value(&self, t: Block) -> Result<f64, ModelError> {
        if t < self.arrival {
            return Err(ModelError::BeforeArrival {
                id: self.id.clone(),
                block: t,
                arrival: self.arrival,
            });
        }
        Ok(decay(self.value, self.discount, t - self.arrival))
    }

    pub fn is_patient(&self) -> bool {
        self.discount == 0.0
    }
}

impl From<String> for TxnId {
    fn from(s: String) -> Self {
        TxnId(s)
    }
}

/// `value * (1 - rho)^steps` by repeated multiplication. Every module computes
/// discounted values through this function so that they agree bit for bit.
pub fn decay(value: f64, rho: f64, steps: u32) -> f64 {
    if rho == 0.0 {
        return value;
    }
    let keep = 1.0 - rho;
    let mut v = value;
    for _ in 0..steps {
        v *= keep;
        if v == 0.0 {
            break;
        }
    }
    v
}

/// `value * (1 - rho)^(t - a)` for transaction `txn`.
pub fn effective_value(txn: &Transaction, t: Block) -> Result<f64, ModelError> {
    txn.effective_value(t)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceDoc {
    dimension: usize,
    capacities: Vec<f64>,
    horizon: Block,
    transactions: Vec<Transaction>,
}

/// One problem input: capacities, horizon and the transaction set.
#[derive(Debug, Clone)]
pub struct Instance {
    dimension: usize,
    capacities: Vec<f64>,
    horizon: Block,
    transactions: Vec<Transaction>,
    index: HashMap<TxnId, usize>,
}

impl Instance {
    pub fn new(
        capacities: Vec<f64>,
        horizon: Block,
        transactions: Vec<Transaction>,
    ) -> Result<Self, ModelError> {
        let dimension = capacities.len();
        Self::with_dimension(dimension, capacities, horizon, transactions)
    }

    fn with_dimension(
        dimension: usize,
        capacities: Vec<f64>,
        horizon: Block,
        transactions: Vec<Transaction>,
    ) -> Result<Self, ModelError> {
        if dimension < 1 {
            return Err(ModelError::InvalidInstance("dimension must be at least 1".into()));
        }
        if capacities.len() != dimension {
            return Err(ModelError::DimensionMismatch {
                left: dimension,
                right: capacities.len(),
            });
        }
        if capacities.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(ModelError::InvalidInstance(
                "capacities must be strictly positive".into(),
            ));
        }
        if horizon < 1 {
            return Err(ModelError::InvalidInstance("horizon must be at least 1".into()));
        }
        let mut index = HashMap::with_capacity(transactions.len());
        for (pos, txn) in transactions.iter().enumerate() {
            txn.validate()?;
            if txn.demand.len() != dimension {
                return Err(ModelError::DimensionMismatch {
                    left: dimension,
                    right: txn.demand.len(),
                });
            }
            if txn.arrival > horizon {
                return Err(ModelError::InvalidTransaction {
                    id: txn.id.clone(),
                    reason: format!("arrival {} after horizon {}", txn.arrival, horizon),
                });
            }
            if index.insert(txn.id.clone(), pos).is_some() {
                return Err(ModelError::InvalidInstance(format!(
                    "duplicate transaction id {}",
                    txn.id
                )));
            }
        }
        Ok(Instance {
            dimension,
            capacities,
            horizon,
            transactions,
            index,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    pub fn horizon(&self) -> Block {
        self.horizon
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn get(&self, id: &TxnId) -> Option<&Transaction> {
        self.index.get(id).map(|&i| &self.transactions[i])
    }

    pub fn position(&self, id: &TxnId) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Largest demand-to-capacity ratio over all transactions and resources.
    pub fn q_max(&self) -> f64 {
        self.transactions
            .iter()
            .flat_map(|t| {
                t.demand
                    .iter()
                    .zip(&self.capacities)
                    .map(|(w, b)| w / b)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_discount(&self) -> f64 {
        self.transactions.iter().map(|t| t.discount).fold(0.0, f64::max)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let doc: InstanceDoc = serde_json::from_str(s)?;
        Self::with_dimension(doc.dimension, doc.capacities, doc.horizon, doc.transactions)
    }

    pub fn to_json_string(&self) -> Result<String, ModelError> {
        let doc = InstanceDoc {
            dimension: self.dimension,
            capacities: self.capacities.clone(),
            horizon: self.horizon,
            transactions: self.transactions.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }
}

/// Sparse fractional (or integral) schedule. Keys are ordered by block, then
/// transaction id, which is also the export order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    entries: BTreeMap<(Block, TxnId), f64>,
    integral: bool,
}

impl Allocation {
    pub fn new() -> Self {
        Allocation::default()
    }

    /// An allocation that declares every stored fraction to be 0 or 1.
    pub fn integral() -> Self {
        Allocation {
            entries: BTreeMap::new(),
            integral: true,
        }
    }

    pub fn is_integral_flagged(&self) -> bool {
        self.integral
    }

    pub fn set_integral_flag(&mut self, flag: bool) {
        self.integral = flag;
    }

    /// Adds `fraction` to the entry of `(id, block)`. Amounts at or below
    /// `FEAS_TOL` are dropped.
    pub fn add(&mut self, id: &TxnId, block: Block, fraction: f64) {
        if fraction <= FEAS_TOL {
            return;
        }
        *self.entries.entry((block, id.clone())).or_insert(0.0) += fraction;
    }

    pub fn get(&self, id: &TxnId, block: Block) -> f64 {
        self.entries
            .get(&(block, id.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Block, &TxnId, f64)> + '_ {
        self.entries.iter().map(|((b, id), x)| (*b, id, *x))
    }

    pub fn block_entries(&self, block: Block) -> impl Iterator<Item = (&TxnId, f64)> + '_ {
        self.entries
            .range((block, TxnId(String::new()))..)
            .take_while(move |((b, _), _)| *b == block)
            .map(|((_, id), x)| (id, *x))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last_block(&self) -> Option<Block> {
        self.entries.keys().next_back().map(|(b, _)| *b)
    }

    /// Total fraction scheduled per transaction.
    pub fn totals(&self) -> HashMap<&TxnId, f64> {
        let mut out = HashMap::new();
        for ((_, id), x) in &self.entries {
            *out.entry(id).or_insert(0.0) += *x;
        }
        out
    }

    pub fn total_for(&self, id: &TxnId) -> f64 {
        self.entries
            .iter()
            .filter(|((_, i), _)| i == id)
            .map(|(_, x)| *x)
            .sum()
    }

    /// Allocation restricted to blocks `from..=to`.
    pub fn restrict(&self, from: Block, to: Block) -> Allocation {
        Allocation {
            entries: self
                .entries
                .iter()
                .filter(|((b, _), _)| (from..=to).contains(b))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
            integral: self.integral,
        }
    }

    /// Per-block, per-resource usage for blocks `1..=last`.
    pub fn usage(&self, inst: &Instance, last: Block) -> Result<Vec<Vec<f64>>, ModelError> {
        let m = inst.dimension();
        let mut usage = vec![vec![0.0; m]; last as usize];
        for ((b, id), x) in &self.entries {
            if *b > last || *b == 0 {
                continue;
            }
            let txn = inst
                .get(id)
                .ok_or_else(|| ModelError::UnknownTransaction(id.clone()))?;
            for (u, w) in usage[*b as usize - 1].iter_mut().zip(&txn.demand) {
                *u += x * w;
            }
        }
        Ok(usage)
    }

    /// Writes the `block,txn_id,fraction` export.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["block", "txn_id", "fraction"])?;
        for ((b, id), x) in &self.entries {
            w.write_record([b.to_string(), id.0.clone(), x.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, ModelError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["block", "txn_id", "fraction"] {
            return Err(ModelError::MalformedAllocation(format!(
                "unexpected header {:?}",
                headers
            )));
        }
        let mut alloc = Allocation::new();
        let mut integral = true;
        for rec in r.records() {
            let rec = rec?;
            let block: Block = rec[0]
                .parse()
                .map_err(|_| ModelError::MalformedAllocation(format!("bad block {}", &rec[0])))?;
            let x: f64 = rec[2]
                .parse()
                .map_err(|_| ModelError::MalformedAllocation(format!("bad fraction {}", &rec[2])))?;
            integral &= x == 1.0;
            alloc.add(&TxnId(rec[1].to_owned()), block, x);
        }
        alloc.integral = integral && !alloc.is_empty();
        Ok(alloc)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// `sw_t` for each block in `from..=to`.
pub fn block_welfare(
    alloc: &Allocation,
    inst: &Instance,
    from: Block,
    to: Block,
) -> Result<Vec<f64>, ModelError> {
    if from > to {
        return Err(ModelError::EmptyRange { from, to });
    }
    let mut out = vec![0.0; (to - from + 1) as usize];
    for (b, id, x) in alloc.iter() {
        let txn = inst
            .get(id)
            .ok_or_else(|| ModelError::UnknownTransaction(id.clone()))?;
        let v = txn.effective_value(b)?;
        if (from..=to).contains(&b) {
            out[(b - from) as usize] += x * v;
        }
    }
    Ok(out)
}

/// Social welfare of `alloc` over blocks `from..=to`.
pub fn social_welfare(
    alloc: &Allocation,
    inst: &Instance,
    from: Block,
    to: Block,
) -> Result<f64, ModelError> {
    Ok(block_welfare(alloc, inst, from, to)?.iter().sum())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownTransaction {
        id: TxnId,
    },
    Capacity {
        block: Block,
        resource: usize,
        usage: f64,
        capacity: f64,
    },
    OverScheduled {
        id: TxnId,
        total: f64,
    },
    BeforeArrival {
        id: TxnId,
        block: Block,
        arrival: Block,
    },
    NonIntegral {
        id: TxnId,
        block: Block,
        fraction: f64,
    },
    FractionOutOfRange {
        id: TxnId,
        block: Block,
        fraction: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownTransaction { id } => write!(f, "unknown transaction {id}"),
            Violation::Capacity {
                block,
                resource,
                usage,
                capacity,
            } => write!(
                f,
                "block {block} uses {usage} of resource {} (capacity {capacity})",
                resource + 1
            ),
            Violation::OverScheduled { id, total } => {
                write!(f, "transaction {id} scheduled {total} > 1 in total")
            }
            Violation::BeforeArrival { id, block, arrival } => {
                write!(f, "transaction {id} scheduled in block {block} before arrival {arrival}")
            }
            Violation::NonIntegral { id, block, fraction } => {
                write!(f, "transaction {id} has fraction {fraction} in block {block}")
            }
            Violation::FractionOutOfRange { id, block, fraction } => {
                write!(f, "transaction {id} has fraction {fraction} outside [0,1] in block {block}")
            }
        }
    }
}

fn is_zero_or_one(x: f64) -> bool {
    x == 0.0 || x == 1.0
}

/// All violations of the capacity, single-scheduling, arrival and (optionally)
/// integrality constraints. Capacities are checked against `inst`'s.
pub fn validate_feasibility(
    alloc: &Allocation,
    inst: &Instance,
    require_integral: bool,
) -> Vec<Violation> {
    validate_with_capacities(alloc, inst, inst.capacities(), require_integral)
}

/// As [`validate_feasibility`], against explicit per-block capacities.
pub fn validate_with_capacities(
    alloc: &Allocation,
    inst: &Instance,
    capacities: &[f64],
    require_integral: bool,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let m = inst.dimension();
    let mut totals: BTreeMap<&TxnId, f64> = BTreeMap::new();
    let mut current: Option<(Block, Vec<f64>)> = None;

    let flush = |cur: &mut Option<(Block, Vec<f64>)>, out: &mut Vec<Violation>| {
        if let Some((block, usage)) = cur.take() {
            for (j, (u, b)) in usage.iter().zip(capacities).enumerate() {
                if *u > b + FEAS_TOL * b {
                    out.push(Violation::Capacity {
                        block,
                        resource: j,
                        usage: *u,
                        capacity: *b,
                    });
                }
            }
        }
    };

    for (b, id, x) in alloc.iter() {
        if current.as_ref().map(|(cb, _)| *cb) != Some(b) {
            flush(&mut current, &mut out);
            current = Some((b, vec![0.0; m]));
        }
        let Some(txn) = inst.get(id) else {
            out.push(Violation::UnknownTransaction { id: id.clone() });
            continue;
        };
        if !(0.0..=1.0 + FEAS_TOL).contains(&x) {
            out.push(Violation::FractionOutOfRange {
                id: id.clone(),
                block: b,
                fraction: x,
            });
        }
        if b < txn.arrival {
            out.push(Violation::BeforeArrival {
                id: id.clone(),
                block: b,
                arrival: txn.arrival,
            });
        }
        if (require_integral || alloc.is_integral_flagged()) && !is_zero_or_one(x) {
            out.push(Violation::NonIntegral {
                id: id.clone(),
                block: b,
                fraction: x,
            });
        }
        if let Some((_, usage)) = current.as_mut() {
            for (u, w) in usage.iter_mut().zip(&txn.demand) {
                *u += x * w;
            }
        }
        *totals.entry(id).or_insert(0.0) += x;
    }
    flush(&mut current, &mut out);

    for (id, total) in totals {
        if total > 1.0 + FEAS_TOL {
            out.push(Violation::OverScheduled {
                id: id.clone(),
                total,
            });
        }
    }
    out
}

/// Smallest slackness Δ ≥ 0 such that every window of K consecutive blocks
/// uses at most (K + Δ)·B_j of every resource j.
pub fn min_slackness(alloc: &Allocation, inst: &Instance) -> Result<f64, ModelError> {
    let Some(last) = alloc.last_block() else {
        return Ok(0.0);
    };
    let usage = alloc.usage(inst, last)?;
    Ok(slackness_of_usage(&usage, inst.capacities()))
}

/// Exhaustive window scan over a block × resource usage matrix.
pub fn slackness_of_usage(usage: &[Vec<f64>], capacities: &[f64]) -> f64 {
    let n = usage.len();
    let mut worst = 0.0f64;
    for (j, b) in capacities.iter().enumerate() {
        // prefix[t] = normalized usage of blocks 1..=t
        let mut prefix = vec![0.0; n + 1];
        for t in 0..n {
            prefix[t + 1] = prefix[t] + usage[t][j] / b;
        }
        for start in 0..n {
            for end in start + 1..=n {
                let k = (end - start) as f64;
                worst = worst.max(prefix[end] - prefix[start] - k);
            }
        }
    }
    if worst <= FEAS_TOL {
        0.0
    } else {
        worst
    }
}

/// `i1` dominates `i2`: strictly higher base value and coordinatewise no
/// larger demand.
pub fn dominates(i1: &Transaction, i2: &Transaction) -> Result<bool, ModelError> {
    if i1.demand.len() != i2.demand.len() {
        return Err(ModelError::DimensionMismatch {
            left: i1.demand.len(),
            right: i2.demand.len(),
        });
    }
    Ok(i1.value > i2.value && demand_le(&i1.demand, &i2.demand))
}

fn demand_le(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MyopicViolation {
    pub dominator: TxnId,
    pub dominated: TxnId,
    pub block: Block,
}

/// Dominance pairs violated by `alloc`: a dominated transaction scheduled in
/// block `t` while its dominator, already available at `t`, was not exhausted.
///
/// Dominance at block `t` compares effective values `v^t`, so for fully
/// patient transactions it is exactly [`dominates`].
pub fn check_myopically_reasonable(
    alloc: &Allocation,
    inst: &Instance,
    tol: f64,
) -> Vec<MyopicViolation> {
    let txns = inst.transactions();
    let n = txns.len();
    let Some(last) = alloc.last_block() else {
        return Vec::new();
    };
    // cumulative[i][t-1] = Σ_{τ ≤ t} x_i^τ
    let mut per_block = vec![vec![0.0; last as usize]; n];
    for (b, id, x) in alloc.iter() {
        if let Some(i) = inst.position(id) {
            if b >= 1 {
                per_block[i][b as usize - 1] += x;
            }
        }
    }
    let cumulative: Vec<Vec<f64>> = per_block
        .iter()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    for (i2, dominated) in txns.iter().enumerate() {
        for t in 1..=last {
            if per_block[i2][t as usize - 1] <= tol || t < dominated.arrival {
                continue;
            }
            let v2 = decay(dominated.value, dominated.discount, t - dominated.arrival);
            for (i1, dominator) in txns.iter().enumerate() {
                if i1 == i2 || dominator.arrival > t {
                    continue;
                }
                let v1 = decay(dominator.value, dominator.discount, t - dominator.arrival);
                if v1 > v2
                    && demand_le(&dominator.demand, &dominated.demand)
                    && cumulative[i1][t as usize - 1] < 1.0 - tol
                {
                    out.push(MyopicViolation {
                        dominator: dominator.id.clone(),
                        dominated: dominated.id.clone(),
                        block: t,
                    });
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn txn(id: &str, a: Block, v: f64, rho: f64, w: &[f64]) -> Transaction {
        Transaction::new(id, a, v, rho, w.to_vec())
    }

    #[test]
    fn effective_value_examples() {
        assert_eq!(txn("x", 1, 2.0, 0.5, &[1.0]).effective_value(3).unwrap(), 0.5);
        assert_eq!(txn("x", 4, 7.0, 0.0, &[1.0]).effective_value(1000).unwrap(), 7.0);
        let light = txn("l1", 1, 1.0 + 2.0 * 0.01, 0.0, &[1.0, 0.0]);
        for t in [1, 2, 50] {
            assert_eq!(light.effective_value(t).unwrap(), 1.02);
        }
        assert!(matches!(
            txn("x", 5, 1.0, 0.1, &[1.0]).effective_value(4),
            Err(ModelError::BeforeArrival { .. })
        ));
    }

    #[test]
    fn instance_rejects_bad_input() {
        let ok = txn("a", 1, 1.0, 0.0, &[0.5]);
        assert!(Instance::new(vec![0.0], 3, vec![ok.clone()]).is_err());
        assert!(Instance::new(vec![1.0], 3, vec![ok.clone(), ok.clone()]).is_err());
        assert!(Instance::new(vec![1.0], 3, vec![txn("late", 4, 1.0, 0.0, &[0.5])]).is_err());
        assert!(Instance::new(vec![1.0, 1.0], 3, vec![ok.clone()]).is_err());
        assert!(Instance::new(vec![1.0], 3, vec![txn("neg", 1, -1.0, 0.0, &[0.5])]).is_err());
        assert!(Instance::new(vec![1.0], 3, vec![txn("rho", 1, 1.0, 1.5, &[0.5])]).is_err());
        assert!(Instance::new(vec![1.0], 3, vec![ok]).is_ok());
    }

    #[test]
    fn welfare_of_empty_allocation_is_zero() {
        let inst = Instance::new(vec![1.0], 2, vec![txn("a", 1, 1.0, 0.0, &[1.0])]).unwrap();
        assert_eq!(social_welfare(&Allocation::new(), &inst, 1, 2).unwrap(), 0.0);
    }

    #[test]
    fn welfare_rejects_unknown_ids() {
        let inst = Instance::new(vec![1.0], 2, vec![]).unwrap();
        let mut alloc = Allocation::new();
        alloc.add(&"ghost".into(), 1, 1.0);
        assert!(matches!(
            social_welfare(&alloc, &inst, 1, 2),
            Err(ModelError::UnknownTransaction(_))
        ));
    }

    #[test]
    fn feasibility_examples() {
        let inst = Instance::new(
            vec![1.0, 1.0],
            3,
            vec![
                txn("A", 1, 2.0, 0.0, &[1.0, 0.0]),
                txn("B", 1, 1.0, 0.0, &[1.0, 1.0]),
            ],
        )
        .unwrap();

        let mut ok = Allocation::integral();
        ok.add(&"B".into(), 1, 1.0);
        assert!(validate_feasibility(&ok, &inst, true).is_empty());

        let mut over = Allocation::new();
        for t in 1..=2 {
            over.add(&"B".into(), t, 0.6);
        }
        over.add(&"B".into(), 3, 0.6);
        let v = validate_feasibility(&over, &inst, false);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::OverScheduled { .. }));

        let mut clash = Allocation::new();
        clash.add(&"A".into(), 1, 1.0);
        clash.add(&"B".into(), 1, 1.0);
        let v = validate_feasibility(&clash, &inst, false);
        assert_eq!(
            v,
            vec![Violation::Capacity {
                block: 1,
                resource: 0,
                usage: 2.0,
                capacity: 1.0
            }]
        );

        let mut frac = Allocation::new();
        frac.add(&"A".into(), 1, 0.5);
        assert!(validate_feasibility(&frac, &inst, false).is_empty());
        assert!(matches!(
            validate_feasibility(&frac, &inst, true)[0],
            Violation::NonIntegral { .. }
        ));
    }

    #[test]
    fn feasibility_flags_early_scheduling() {
        let inst = Instance::new(vec![1.0], 5, vec![txn("a", 3, 1.0, 0.0, &[0.1])]).unwrap();
        let mut alloc = Allocation::new();
        alloc.add(&"a".into(), 2, 1.0);
        assert!(matches!(
            validate_feasibility(&alloc, &inst, false)[0],
            Violation::BeforeArrival { .. }
        ));
    }

    #[test]
    fn slackness_examples() {
        let inst = Instance::new(
            vec![1.0, 2.0],
            3,
            vec![
                txn("a", 1, 1.0, 0.0, &[1.0, 2.0]),
                txn("b", 1, 1.0, 0.0, &[1.0, 2.0]),
                txn("c", 1, 1.0, 0.0, &[1.0, 2.0]),
            ],
        )
        .unwrap();
        let mut exact = Allocation::new();
        exact.add(&"a".into(), 1, 1.0);
        exact.add(&"b".into(), 2, 1.0);
        exact.add(&"c".into(), 3, 1.0);
        assert_eq!(min_slackness(&exact, &inst).unwrap(), 0.0);

        let mut doubled = Allocation::new();
        doubled.add(&"a".into(), 2, 1.0);
        doubled.add(&"b".into(), 2, 1.0);
        assert_eq!(min_slackness(&doubled, &inst).unwrap(), 1.0);
        assert_eq!(min_slackness(&Allocation::new(), &inst).unwrap(), 0.0);
    }

    #[test]
    fn dominance_examples() {
        let eps = 0.01;
        let l2 = txn("L2", 1, 1.0 + 4.0 * eps, 0.0, &[0.0, 1.0]);
        let h2 = txn("H2", 1, 1.0 + 3.0 * eps, 0.0, &[0.0, 1.0]);
        assert!(dominates(&l2, &h2).unwrap());
        assert!(!dominates(&l2, &l2).unwrap());
        let a = txn("a", 1, 2.0, 0.0, &[1.0, 0.0]);
        let b = txn("b", 1, 1.0, 0.0, &[0.0, 1.0]);
        assert!(!dominates(&a, &b).unwrap());
        let short = txn("s", 1, 3.0, 0.0, &[1.0]);
        assert!(dominates(&short, &a).is_err());
    }

    #[test]
    fn myopic_examples() {
        let inst = Instance::new(
            vec![1.0],
            2,
            vec![txn("good", 1, 2.0, 0.0, &[1.0]), txn("bad", 1, 1.0, 0.0, &[1.0])],
        )
        .unwrap();
        let mut fine = Allocation::new();
        fine.add(&"good".into(), 1, 1.0);
        fine.add(&"bad".into(), 2, 1.0);
        assert!(check_myopically_reasonable(&fine, &inst, 1e-9).is_empty());

        let mut wrong = Allocation::new();
        wrong.add(&"bad".into(), 1, 1.0);
        let v = check_myopically_reasonable(&wrong, &inst, 1e-9);
        assert_eq!(
            v,
            vec![MyopicViolation {
                dominator: "good".into(),
                dominated: "bad".into(),
                block: 1
            }]
        );
    }

    #[test]
    fn myopic_check_ignores_dominators_not_yet_arrived() {
        let inst = Instance::new(
            vec![1.0],
            2,
            vec![txn("early", 1, 1.0, 0.0, &[1.0]), txn("late", 2, 2.0, 0.0, &[1.0])],
        )
        .unwrap();
        let mut alloc = Allocation::new();
        alloc.add(&"early".into(), 1, 1.0);
        assert!(check_myopically_reasonable(&alloc, &inst, 1e-9).is_empty());
    }

    #[test]
    fn allocation_csv_round_trip() {
        let mut alloc = Allocation::new();
        alloc.add(&"b".into(), 2, 0.25);
        alloc.add(&"a".into(), 2, 1.0 / 3.0);
        alloc.add(&"z".into(), 1, 1.0);
        let mut buf = Vec::new();
        alloc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("block,txn_id,fraction\n1,z,1\n2,a,"));
        let back = Allocation::read_csv(&buf[..]).unwrap();
        assert_eq!(back.iter().collect::<Vec<_>>(), alloc.iter().collect::<Vec<_>>());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = Instance::new(
            vec![1.0, 2.0],
            4,
            vec![txn("a", 2, 1.5, 0.25, &[0.5, 1.0])],
        )
        .unwrap();
        let text = inst.to_json_string().unwrap();
        assert!(text.contains("\"dimension\": 2"));
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(back.transactions(), inst.transactions());
        assert_eq!(back.capacities(), inst.capacities());
        assert_eq!(back.horizon(), 4);
    }

    #[test]
    fn adding_below_tolerance_is_dropped() {
        let mut alloc = Allocation::new();
        alloc.add(&"a".into(), 1, FEAS_TOL / 2.0);
        assert!(alloc.is_empty());
    }
}
