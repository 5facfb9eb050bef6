//! Offline optima and competitive ratios.
//!
//! [`offline_fractional_opt`] solves the full-horizon LP over all
//! `(transaction, block)` pairs. [`offline_integral_opt`] finds the best
//! integral schedule exhaustively for small instances.

use thiserror::Error;

use crate::engine::NEGLIGIBLE_VALUE;
use crate::lp::{self, LpError, PackingLp};
use crate::model::{
    decay, social_welfare, Allocation, Block, Instance, ModelError, Transaction, FEAS_TOL,
};

/// Default cap on the number of LP variables.
pub const LP_VAR_CAP: usize = 50_000;
/// Cap on dense tableau cells (rows × (vars + rows)).
pub const LP_CELL_CAP: usize = 25_000_000;
pub const INTEGRAL_MAX_TXNS: usize = 24;
pub const INTEGRAL_MAX_HORIZON: Block = 12;
/// Search depth up to which the integral search also prunes with the LP bound.
const LP_BOUND_DEPTH: usize = 2;

#[derive(Debug, Error)]
pub enum OfflineError {
    #[error("instance too large for the offline solver: {0}")]
    TooLarge(String),
    #[error("benchmark welfare {0} is not positive; ratio undefined")]
    UndefinedRatio(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Columns of the offline LP: transaction position and first/last block
/// covered by the column.
#[derive(Debug, Clone, Copy)]
struct Column {
    txn: usize,
    from: Block,
    to: Block,
}

struct OfflineLp {
    lp: PackingLp,
    columns: Vec<Column>,
}

/// Builds the packing LP over `segments` (inclusive block ranges). A column's
/// value is the transaction's effective value at the segment start, its
/// capacity row is `cap(segment, j)`. Returns `None` without columns.
fn build_lp(
    txns: &[&Transaction],
    segments: &[(Block, Block)],
    m: usize,
    cap: impl Fn(usize, usize) -> f64,
    var_cap: usize,
) -> Result<Option<OfflineLp>, OfflineError> {
    let mut columns = Vec::new();
    let mut objective = Vec::new();
    for (i, txn) in txns.iter().enumerate() {
        for (s, &(from, to)) in segments.iter().enumerate() {
            if from < txn.arrival {
                continue;
            }
            let v = decay(txn.value, txn.discount, from - txn.arrival);
            if v <= NEGLIGIBLE_VALUE * txn.value || v <= 0.0 {
                continue;
            }
            if (0..m).any(|j| txn.demand[j] > 0.0 && cap(s, j) <= FEAS_TOL) {
                continue;
            }
            columns.push((s, Column { txn: i, from, to }));
            objective.push(v);
            if columns.len() > var_cap {
                return Err(OfflineError::TooLarge(format!(
                    "more than {var_cap} LP variables"
                )));
            }
        }
    }
    if columns.is_empty() {
        return Ok(None);
    }
    let n = columns.len();
    let mut matrix: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for s in 0..segments.len() {
        for j in 0..m {
            let b = cap(s, j);
            if b <= FEAS_TOL {
                continue;
            }
            let row: Vec<f64> = columns
                .iter()
                .map(|(cs, c)| if *cs == s { txns[c.txn].demand[j] } else { 0.0 })
                .collect();
            if row.iter().any(|a| *a > 0.0) {
                matrix.push(row);
                rhs.push(b);
            }
        }
    }
    let mut per_txn = vec![0usize; txns.len()];
    for (_, c) in &columns {
        per_txn[c.txn] += 1;
    }
    for (i, &count) in per_txn.iter().enumerate() {
        if count > 1 {
            matrix.push(
                columns
                    .iter()
                    .map(|(_, c)| if c.txn == i { 1.0 } else { 0.0 })
                    .collect(),
            );
            rhs.push(1.0);
        }
    }
    let cells = matrix.len() * (n + matrix.len());
    if cells > LP_CELL_CAP {
        return Err(OfflineError::TooLarge(format!(
            "{} rows × {} variables exceeds the tableau cap",
            matrix.len(),
            n
        )));
    }
    let lp = PackingLp::new(objective, matrix, rhs, vec![1.0; n])?;
    Ok(Some(OfflineLp {
        lp,
        columns: columns.into_iter().map(|(_, c)| c).collect(),
    }))
}

/// Optimal fractional schedule over blocks `1..=T` and its welfare.
pub fn offline_fractional_opt(inst: &Instance) -> Result<(Allocation, f64), OfflineError> {
    offline_fractional_opt_with_cap(inst, LP_VAR_CAP)
}

/// As [`offline_fractional_opt`] with an explicit variable cap.
///
/// The result is a vertex optimum when the per-block LP fits the caps. Fully
/// patient instances that do not fit are solved over the stretches between
/// consecutive arrival times instead, with each stretch's share spread evenly
/// over its blocks; that allocation is optimal but generally not a vertex.
pub fn offline_fractional_opt_with_cap(
    inst: &Instance,
    var_cap: usize,
) -> Result<(Allocation, f64), OfflineError> {
    let horizon = inst.horizon();
    let txns: Vec<&Transaction> = inst.transactions().iter().collect();
    let caps = inst.capacities();
    let per_block: Vec<(Block, Block)> = (1..=horizon).map(|t| (t, t)).collect();
    let built = match build_lp(&txns, &per_block, inst.dimension(), |_, j| caps[j], var_cap) {
        Err(OfflineError::TooLarge(why)) => {
            if inst.max_discount() > 0.0 {
                return Err(OfflineError::TooLarge(why));
            }
            let segments = arrival_segments(inst);
            build_lp(
                &txns,
                &segments,
                inst.dimension(),
                |s, j| f64::from(segments[s].1 - segments[s].0 + 1) * caps[j],
                var_cap,
            )?
        }
        other => other?,
    };
    let mut alloc = Allocation::new();
    if let Some(OfflineLp { lp, columns }) = built {
        let sol = lp::solve_basic_optimal(&lp);
        for (c, &x) in columns.iter().zip(&sol.values) {
            if x <= 0.0 {
                continue;
            }
            let share = x / f64::from(c.to - c.from + 1);
            for t in c.from..=c.to {
                alloc.add(&txns[c.txn].id, t, share);
            }
        }
    }
    let value = social_welfare(&alloc, inst, 1, horizon)?;
    Ok((alloc, value))
}

/// Maximal block ranges starting at each distinct arrival time.
fn arrival_segments(inst: &Instance) -> Vec<(Block, Block)> {
    let mut starts: Vec<Block> = inst.transactions().iter().map(|t| t.arrival).collect();
    starts.sort_unstable();
    starts.dedup();
    let mut out = Vec::with_capacity(starts.len());
    for (k, &s) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(inst.horizon(), |next| next - 1);
        out.push((s, end));
    }
    out
}

/// `SW_[1:T+Γ](x) / SW_[1:T](y)`.
pub fn competitive_ratio(
    x: &Allocation,
    y: &Allocation,
    inst: &Instance,
    horizon: Block,
    extension: Block,
) -> Result<f64, OfflineError> {
    let bench = social_welfare(y, inst, 1, horizon)?;
    if !(bench > 0.0) {
        return Err(OfflineError::UndefinedRatio(bench));
    }
    Ok(social_welfare(x, inst, 1, horizon + extension)? / bench)
}

/// Best integral schedule over blocks `1..=T` with capacities respected
/// exactly. Refuses more than 24 transactions or a horizon beyond 12.
pub fn offline_integral_opt(inst: &Instance) -> Result<(Allocation, f64), OfflineError> {
    if inst.len() > INTEGRAL_MAX_TXNS || inst.horizon() > INTEGRAL_MAX_HORIZON {
        return Err(OfflineError::TooLarge(format!(
            "integral search is limited to {INTEGRAL_MAX_TXNS} transactions and \
             horizon {INTEGRAL_MAX_HORIZON} (got {} and {})",
            inst.len(),
            inst.horizon()
        )));
    }
    let caps = inst.capacities();
    let size = |t: &Transaction| -> f64 { t.demand.iter().zip(caps).map(|(w, b)| w / b).sum() };
    let mut order: Vec<&Transaction> = inst
        .transactions()
        .iter()
        .filter(|t| t.value > 0.0)
        .collect();
    // Density first; the remaining keys make identical transactions adjacent.
    order.sort_by(|a, b| {
        let da = a.value / (size(a) + 1e-300);
        let db = b.value / (size(b) + 1e-300);
        db.total_cmp(&da)
            .then(a.arrival.cmp(&b.arrival))
            .then(b.value.total_cmp(&a.value))
            .then(a.discount.total_cmp(&b.discount))
            .then_with(|| cmp_demand(&a.demand, &b.demand))
            .then_with(|| a.id.cmp(&b.id))
    });

    let horizon = inst.horizon();
    let items: Vec<IntItem> = order
        .iter()
        .enumerate()
        .map(|(k, t)| IntItem {
            arrival: t.arrival,
            values: (t.arrival..=horizon)
                .map(|b| decay(t.value, t.discount, b - t.arrival))
                .collect(),
            same_as_prev: k > 0 && identical(order[k - 1], t),
        })
        .collect();
    let mut suffix = vec![0.0; items.len() + 1];
    for k in (0..items.len()).rev() {
        suffix[k] = suffix[k + 1] + items[k].values[0];
    }

    let mut search = IntSearch {
        txns: &order,
        items: &items,
        suffix: &suffix,
        caps,
        horizon,
        used: vec![vec![0.0; caps.len()]; horizon as usize + 1],
        assign: vec![None; items.len()],
        value: 0.0,
        best: vec![None; items.len()],
        best_value: 0.0,
    };
    search.dfs(0);

    let mut alloc = Allocation::integral();
    for (t, b) in order.iter().zip(&search.best) {
        if let Some(b) = b {
            alloc.add(&t.id, *b, 1.0);
        }
    }
    let value = social_welfare(&alloc, inst, 1, horizon)?;
    Ok((alloc, value))
}

fn cmp_demand(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn identical(a: &Transaction, b: &Transaction) -> bool {
    a.arrival == b.arrival && a.value == b.value && a.discount == b.discount && a.demand == b.demand
}

struct IntItem {
    arrival: Block,
    /// Effective value at blocks `arrival..=T`.
    values: Vec<f64>,
    same_as_prev: bool,
}

struct IntSearch<'a> {
    txns: &'a [&'a Transaction],
    items: &'a [IntItem],
    suffix: &'a [f64],
    caps: &'a [f64],
    horizon: Block,
    /// Indexed by block; row 0 unused.
    used: Vec<Vec<f64>>,
    assign: Vec<Option<Block>>,
    value: f64,
    best: Vec<Option<Block>>,
    best_value: f64,
}

impl IntSearch<'_> {
    fn fits(&self, k: usize, t: Block) -> bool {
        let demand = &self.txns[k].demand;
        self.used[t as usize]
            .iter()
            .zip(demand)
            .zip(self.caps)
            .all(|((u, w), b)| u + w <= b + FEAS_TOL * b)
    }

    /// Per-resource fractional knapsack over the whole remaining horizon
    /// capacity, each undecided item valued at its arrival.
    fn knapsack_bound(&self, depth: usize) -> f64 {
        let mut best = f64::INFINITY;
        for (j, b) in self.caps.iter().enumerate() {
            let mut room: f64 = (1..=self.horizon as usize)
                .map(|t| (b - self.used[t][j]).max(0.0))
                .sum();
            let mut ranked: Vec<(f64, f64)> = (depth..self.items.len())
                .map(|k| (self.items[k].values[0], self.txns[k].demand[j]))
                .collect();
            ranked.sort_by(|x, y| (y.0 / y.1).total_cmp(&(x.0 / x.1)));
            let mut total = 0.0;
            for (v, w) in ranked {
                if w <= room {
                    room -= w;
                    total += v;
                } else {
                    total += v * room / w;
                    break;
                }
            }
            best = best.min(total);
        }
        best
    }

    /// LP relaxation over the undecided items and residual capacities.
    fn lp_bound(&self, depth: usize) -> f64 {
        let rest: Vec<&Transaction> = self.txns[depth..].to_vec();
        let segments: Vec<(Block, Block)> = (1..=self.horizon).map(|t| (t, t)).collect();
        let built = build_lp(
            &rest,
            &segments,
            self.caps.len(),
            |s, j| (self.caps[j] - self.used[s + 1][j]).max(0.0),
            usize::MAX,
        );
        match built {
            Ok(Some(o)) => lp::solve_basic_optimal(&o.lp).objective_value,
            Ok(None) => 0.0,
            Err(_) => f64::INFINITY,
        }
    }

    fn improves(&self, bound: f64) -> bool {
        bound > self.best_value + 1e-12 * self.best_value.max(1.0)
    }

    fn dfs(&mut self, depth: usize) {
        if depth == self.items.len() {
            if self.value > self.best_value {
                self.best_value = self.value;
                self.best = self.assign.clone();
            }
            return;
        }
        if !self.improves(self.value + self.suffix[depth]) {
            return;
        }
        if !self.improves(self.value + self.knapsack_bound(depth)) {
            return;
        }
        if depth <= LP_BOUND_DEPTH && !self.improves(self.value + self.lp_bound(depth)) {
            return;
        }
        let item = &self.items[depth];
        // Identical neighbours take non-decreasing blocks, "unscheduled" last.
        let (first, allow_any) = if item.same_as_prev {
            match self.assign[depth - 1] {
                Some(b) => (b, true),
                None => (item.arrival, false),
            }
        } else {
            (item.arrival, true)
        };
        if allow_any {
            for t in first.max(item.arrival)..=self.horizon {
                if !self.fits(depth, t) {
                    continue;
                }
                let v = item.values[(t - item.arrival) as usize];
                for (u, w) in self.used[t as usize].iter_mut().zip(&self.txns[depth].demand) {
                    *u += w;
                }
                self.assign[depth] = Some(t);
                self.value += v;
                self.dfs(depth + 1);
                self.value -= v;
                self.assign[depth] = None;
                for (u, w) in self.used[t as usize].iter_mut().zip(&self.txns[depth].demand) {
                    *u -= w;
                }
            }
        }
        self.dfs(depth + 1);
    }
}
