//! Instance sources: the two lower-bound adversaries and a seeded random
//! generator.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{ArrivalSource, StaticSource};
use crate::model::{Allocation, Block, Instance, ModelError, Transaction, TxnId};
use crate::seeding;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("horizon must be a positive even number, got {0}")]
    OddHorizon(Block),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which continuation the adaptive two-phase adversary chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// `a₁ ≤ ½`: more copies of the resource-1 item `A`.
    MoreA,
    /// `a₁ > ½`: copies of the resource-2 item `C`.
    AddC,
}

/// Adaptive two-resource adversary against algorithms without slackness.
///
/// Block 1 releases `k = T/2` copies each of `A = (2, (1,0))` and
/// `B = (1, (1,1))`. At block `k+1` it measures the average amount of `A`
/// the algorithm packed per block during the first `k` blocks, `a₁`, and
/// releases either `k` more `A` (when `a₁ ≤ ½`) or `k` copies of
/// `C = (1, (0,1))`. Either way the best integral schedule is worth `2T`.
#[derive(Debug, Clone)]
pub struct TwoPhaseAdversary {
    horizon: Block,
    k: Block,
    capacities: Vec<f64>,
    released: Vec<Transaction>,
    a1: Option<f64>,
    case: Option<Case>,
}

impl TwoPhaseAdversary {
    pub fn new(horizon: Block) -> Result<Self, AdversaryError> {
        if horizon == 0 || horizon % 2 != 0 {
            return Err(AdversaryError::OddHorizon(horizon));
        }
        Ok(TwoPhaseAdversary {
            horizon,
            k: horizon / 2,
            capacities: vec![1.0, 1.0],
            released: Vec::new(),
            a1: None,
            case: None,
        })
    }

    pub fn horizon(&self) -> Block {
        self.horizon
    }

    pub fn case(&self) -> Option<Case> {
        self.case
    }

    pub fn a1(&self) -> Option<f64> {
        self.a1
    }

    pub fn benchmark_value(&self) -> f64 {
        2.0 * f64::from(self.horizon)
    }

    fn a_id(i: Block) -> TxnId {
        TxnId(format!("A{i}"))
    }

    /// The integral schedule worth `2T` for the case taken; `None` before
    /// block `k+1` has been reached.
    pub fn benchmark_allocation(&self) -> Option<Allocation> {
        let mut y = Allocation::integral();
        let k = self.k;
        match self.case? {
            Case::MoreA => {
                for i in 1..=2 * k {
                    y.add(&Self::a_id(i), i, 1.0);
                }
            }
            Case::AddC => {
                for i in 1..=k {
                    y.add(&TxnId(format!("B{i}")), i, 1.0);
                    y.add(&Self::a_id(i), k + i, 1.0);
                    y.add(&TxnId(format!("C{i}")), k + i, 1.0);
                }
            }
        }
        Some(y)
    }

    /// Everything released so far, over the source's horizon.
    pub fn realized_instance(&self) -> Result<Instance, AdversaryError> {
        Ok(Instance::new(
            self.capacities.clone(),
            self.horizon,
            self.released.clone(),
        )?)
    }
}

impl ArrivalSource for TwoPhaseAdversary {
    fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    fn arrivals(&mut self, t: Block, history: &Allocation) -> Vec<Transaction> {
        let k = self.k;
        let out: Vec<Transaction> = if t == 1 {
            (1..=k)
                .flat_map(|i| {
                    [
                        Transaction::new(format!("A{i}"), 1, 2.0, 0.0, vec![1.0, 0.0]),
                        Transaction::new(format!("B{i}"), 1, 1.0, 0.0, vec![1.0, 1.0]),
                    ]
                })
                .collect()
        } else if t == k + 1 {
            let packed: f64 = history
                .iter()
                .filter(|(b, id, _)| *b <= k && is_phase_one_a(id, k))
                .map(|(_, _, x)| x)
                .sum();
            let a1 = packed / f64::from(k);
            self.a1 = Some(a1);
            if a1 <= 0.5 {
                self.case = Some(Case::MoreA);
                (k + 1..=2 * k)
                    .map(|i| Transaction::new(format!("A{i}"), t, 2.0, 0.0, vec![1.0, 0.0]))
                    .collect()
            } else {
                self.case = Some(Case::AddC);
                (1..=k)
                    .map(|i| Transaction::new(format!("C{i}"), t, 1.0, 0.0, vec![0.0, 1.0]))
                    .collect()
            }
        } else {
            Vec::new()
        };
        self.released.extend_from_slice(&out);
        out
    }
}

fn is_phase_one_a(id: &TxnId, k: Block) -> bool {
    id.as_str()
        .strip_prefix('A')
        .and_then(|s| s.parse::<Block>().ok())
        .is_some_and(|i| (1..=k).contains(&i))
}

/// Oblivious `m`-resource adversary against myopically reasonable
/// algorithms.
///
/// The horizon is `m` batches of `L` blocks. Batch `k` opens by releasing
/// `R = L + Δ + 1` copies of the light item `(1 + 2kε, e_k)` and of the heavy
/// item `(1 + (2k−1)ε, e_k + … + e_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseAdversary {
    m: usize,
    batch_len: Block,
    eps: f64,
    slack: Block,
}

impl StaircaseAdversary {
    /// `ε` defaults to `1/(4m²)` and the slack `Δ` to 0.
    pub fn new(m: usize, batch_len: Block) -> Result<Self, AdversaryError> {
        if m < 2 {
            return Err(AdversaryError::BadParams(format!("need m ≥ 2, got {m}")));
        }
        if batch_len < 1 {
            return Err(AdversaryError::BadParams("batch length must be positive".into()));
        }
        Ok(StaircaseAdversary {
            m,
            batch_len,
            eps: 1.0 / (4.0 * (m * m) as f64),
            slack: 0,
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self, AdversaryError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(AdversaryError::BadParams(format!("ε must be positive, got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    pub fn with_slack(mut self, slack: Block) -> Self {
        self.slack = slack;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn horizon(&self) -> Block {
        self.m as Block * self.batch_len
    }

    pub fn copies(&self) -> Block {
        self.batch_len + self.slack + 1
    }

    fn batch_start(&self, k: usize) -> Block {
        (k as Block - 1) * self.batch_len + 1
    }

    fn light_value(&self, k: usize) -> f64 {
        1.0 + 2.0 * k as f64 * self.eps
    }

    fn heavy_value(&self, k: usize) -> f64 {
        1.0 + (2.0 * k as f64 - 1.0) * self.eps
    }

    pub fn light_id(k: usize, r: Block) -> TxnId {
        TxnId(format!("L{k}_{r}"))
    }

    pub fn heavy_id(k: usize, r: Block) -> TxnId {
        TxnId(format!("H{k}_{r}"))
    }

    pub fn is_heavy(id: &TxnId) -> bool {
        id.as_str().starts_with('H')
    }

    pub fn instance(&self) -> Instance {
        let m = self.m;
        let mut txns = Vec::with_capacity(2 * m * self.copies() as usize);
        for k in 1..=m {
            let a = self.batch_start(k);
            let light: Vec<f64> = (1..=m).map(|j| f64::from(u8::from(j == k))).collect();
            let heavy: Vec<f64> = (1..=m).map(|j| f64::from(u8::from(j >= k))).collect();
            for r in 1..=self.copies() {
                txns.push(Transaction {
                    id: Self::light_id(k, r),
                    arrival: a,
                    value: self.light_value(k),
                    discount: 0.0,
                    demand: light.clone(),
                });
                txns.push(Transaction {
                    id: Self::heavy_id(k, r),
                    arrival: a,
                    value: self.heavy_value(k),
                    discount: 0.0,
                    demand: heavy.clone(),
                });
            }
        }
        Instance::new(vec![1.0; m], self.horizon(), txns)
            .expect("adversary instance is valid by construction")
    }

    pub fn source(&self) -> StaticSource {
        StaticSource::new(&self.instance())
    }

    /// One heavy per block in the first batch, then one light from the
    /// previous batch with one heavy from the current batch per block.
    pub fn benchmark_allocation(&self) -> Allocation {
        let mut y = Allocation::integral();
        for r in 1..=self.batch_len {
            y.add(&Self::heavy_id(1, r), r, 1.0);
        }
        for k in 2..=self.m {
            for r in 1..=self.batch_len {
                let t = self.batch_start(k) + r - 1;
                y.add(&Self::light_id(k - 1, r), t, 1.0);
                y.add(&Self::heavy_id(k, r), t, 1.0);
            }
        }
        y
    }

    /// Upper bound on the ratio any myopically reasonable algorithm without
    /// slackness achieves: `m(1+2mε)(L+1) / ((2m−1)L)`.
    pub fn greedy_ratio_bound(&self) -> f64 {
        let m = self.m as f64;
        let l = f64::from(self.batch_len);
        m * (1.0 + 2.0 * m * self.eps) * (l + 1.0) / ((2.0 * m - 1.0) * l)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscountDist {
    Zero,
    Uniform { lo: f64, hi: f64 },
    /// Patient with probability `patient`, else uniform on `[0, hi]`.
    Mixed { patient: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArrivalDist {
    /// Uniform over `1..=T`.
    Uniform,
    /// Everything in block 1.
    Front,
    /// Uniform over the listed blocks.
    Times(Vec<Block>),
}

/// Parameters of [`random_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub n: usize,
    pub horizon: Block,
    pub capacities: Vec<f64>,
    /// Values are uniform on `[lo, hi]`.
    pub value_range: (f64, f64),
    /// Largest demand as a fraction of capacity, at most 1.
    pub q_max: f64,
    /// Smallest nonzero demand as a fraction of `q_max`.
    pub demand_floor: f64,
    /// Probability that a resource is demanded at all.
    pub density: f64,
    pub discount: DiscountDist,
    pub arrival: ArrivalDist,
}

impl RandomParams {
    /// Unit capacities, values in `[0.5, 2]`, demands up to half a block,
    /// patient transactions arriving uniformly.
    pub fn new(n: usize, m: usize, horizon: Block) -> Self {
        RandomParams {
            n,
            horizon,
            capacities: vec![1.0; m],
            value_range: (0.5, 2.0),
            q_max: 0.5,
            demand_floor: 0.1,
            density: 1.0,
            discount: DiscountDist::Zero,
            arrival: ArrivalDist::Uniform,
        }
    }

    fn check(&self) -> Result<(), AdversaryError> {
        let bad = |s: String| Err(AdversaryError::BadParams(s));
        if self.capacities.is_empty() {
            return bad("at least one resource is required".into());
        }
        if !(self.q_max > 0.0) {
            return bad(format!("q_max must be positive, got {}", self.q_max));
        }
        if self.q_max > 1.0 {
            return bad(format!("q_max {} lets a demand exceed capacity", self.q_max));
        }
        let (lo, hi) = self.value_range;
        if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("value range [{lo}, {hi}] is invalid"));
        }
        if !(0.0..=1.0).contains(&self.demand_floor) || !(0.0..=1.0).contains(&self.density) {
            return bad("demand floor and density must lie in [0, 1]".into());
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        match &self.discount {
            DiscountDist::Zero => {}
            DiscountDist::Uniform { lo, hi } if unit(*lo) && unit(*hi) && lo <= hi => {}
            DiscountDist::Mixed { patient, hi } if unit(*patient) && unit(*hi) => {}
            d => return bad(format!("invalid discount distribution {d:?}")),
        }
        if let ArrivalDist::Times(ts) = &self.arrival {
            if ts.is_empty() || ts.iter().any(|&t| t < 1 || t > self.horizon) {
                return bad("arrival times must be nonempty and within the horizon".into());
            }
        }
        Ok(())
    }
}

/// A random instance, fully determined by `seed`. Every transaction demands
/// at least one resource.
pub fn random_instance(seed: u64, params: &RandomParams) -> Result<Instance, AdversaryError> {
    params.check()?;
    let mut rng = seeding::stream_rng(seed, seeding::INSTANCE_STREAM);
    let m = params.capacities.len();
    let (vlo, vhi) = params.value_range;
    let mut txns = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let arrival = match &params.arrival {
            ArrivalDist::Uniform => rng.random_range(1..=params.horizon),
            ArrivalDist::Front => 1,
            ArrivalDist::Times(ts) => ts[rng.random_range(0..ts.len())],
        };
        let value = vlo + (vhi - vlo) * rng.random::<f64>();
        let discount = match params.discount {
            DiscountDist::Zero => 0.0,
            DiscountDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            DiscountDist::Mixed { patient, hi } => {
                if rng.random_bool(patient) {
                    0.0
                } else {
                    hi * rng.random::<f64>()
                }
            }
        };
        let forced = rng.random_range(0..m);
        let demand = params
            .capacities
            .iter()
            .enumerate()
            .map(|(j, b)| {
                if j == forced || rng.random_bool(params.density) {
                    let frac = params.demand_floor + (1.0 - params.demand_floor) * rng.random::<f64>();
                    frac * params.q_max * b
                } else {
                    0.0
                }
            })
            .collect();
        txns.push(Transaction::new(format!("x{i}"), arrival, value, discount, demand));
    }
    Ok(Instance::new(params.capacities.clone(), params.horizon, txns)?)
}

pub fn random_source(seed: u64, params: &RandomParams) -> Result<StaticSource, AdversaryError> {
    Ok(StaticSource::new(&random_instance(seed, params)?))
}
