use crate::model::{decay, Block, Transaction};

use super::{BlockDecision, EngineError, OnlineAlgorithm};

/// `L · B`, the capacities the inner algorithm of a [`Batching`] wrapper
/// must be built with.
pub fn batched_capacities(capacities: &[f64], factor: Block) -> Vec<f64> {
    capacities.iter().map(|b| b * f64::from(factor)).collect()
}

/// Groups every `factor` consecutive blocks into one batch handled by the
/// inner algorithm against `factor`-times larger capacities. Blocks that are
/// not a multiple of `factor` stay empty.
#[derive(Debug, Clone)]
pub struct Batching<A> {
    inner: A,
    factor: Block,
    buffer: Vec<Transaction>,
}

impl<A: OnlineAlgorithm> Batching<A> {
    /// `inner` must already be configured for [`batched_capacities`].
    pub fn new(inner: A, factor: Block) -> Self {
        assert!(factor >= 1, "batching factor must be at least 1");
        Batching {
            inner,
            factor,
            buffer: Vec::new(),
        }
    }

    pub fn factor(&self) -> Block {
        self.factor
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }

    /// The transaction as seen by the inner algorithm at batch time `batch`:
    /// valued at block `t = batch · L` with discount `1 − (1 − ρ)^L`.
    fn rebatch(&self, txn: &Transaction, t: Block, batch: Block) -> Transaction {
        let discount = if self.factor == 1 {
            txn.discount
        } else {
            1.0 - decay(1.0, txn.discount, self.factor)
        };
        Transaction {
            id: txn.id.clone(),
            arrival: batch,
            value: decay(txn.value, txn.discount, t - txn.arrival),
            discount,
            demand: txn.demand.clone(),
        }
    }
}

impl<A: OnlineAlgorithm> OnlineAlgorithm for Batching<A> {
    fn name(&self) -> String {
        format!("batch{}-{}", self.factor, self.inner.name())
    }

    fn capacity_scale(&self) -> f64 {
        f64::from(self.factor) * self.inner.capacity_scale()
    }

    fn step(&mut self, t: Block, arrivals: &[Transaction]) -> Result<BlockDecision, EngineError> {
        self.buffer.extend_from_slice(arrivals);
        if t % self.factor != 0 {
            return Ok(BlockDecision::empty());
        }
        let batch = t / self.factor;
        let pending = std::mem::take(&mut self.buffer);
        let batched: Vec<Transaction> = pending
            .iter()
            .map(|txn| self.rebatch(txn, t, batch))
            .collect();
        self.inner.step(batch, &batched)
    }
}
