//! Dense bounded-variable primal simplex for packing LPs
//!
//! ```text
//! maximize  c·x   subject to  A x ≤ b,  0 ≤ x ≤ u
//! ```
//!
//! with `A ≥ 0` and `b > 0`. The all-zero point is feasible and the feasible
//! region is bounded, so the solver starts from the slack basis and never has
//! to deal with infeasibility or unboundedness. Entering and leaving variables
//! are picked by Bland's smallest-index rule, so the result is a vertex and
//! the pivot path is deterministic.

use thiserror::Error;

use crate::model::FEAS_TOL;

/// Entries below this magnitude are treated as zero when pivoting.
pub const PIVOT_TOL: f64 = 1e-10;

/// Reduced costs below `OPT_RTOL * max|c|` count as non-improving.
const OPT_RTOL: f64 = 1e-11;

const REFACTOR_EVERY: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("matrix has {rows} rows but rhs has {rhs} entries")]
    RowMismatch { rows: usize, rhs: usize },
    #[error("row {row} has {len} entries, expected {n}")]
    ColumnMismatch { row: usize, len: usize, n: usize },
    #[error("upper bounds have {len} entries, expected {n}")]
    BoundMismatch { len: usize, n: usize },
    #[error("negative or non-finite matrix entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("rhs entry {0} must be strictly positive")]
    NonPositiveRhs(usize),
    #[error("upper bound {0} must lie in [0, 1]")]
    BadUpperBound(usize),
    #[error("objective coefficient {0} is not finite")]
    BadObjective(usize),
}

/// A packing LP with per-variable caps in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PackingLp {
    objective: Vec<f64>,
    matrix: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    upper: Vec<f64>,
}

impl PackingLp {
    /// `matrix` is row-major: one row of `n` coefficients per constraint.
    pub fn new(
        objective: Vec<f64>,
        matrix: Vec<Vec<f64>>,
        rhs: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, LpError> {
        let n = objective.len();
        if matrix.len() != rhs.len() {
            return Err(LpError::RowMismatch {
                rows: matrix.len(),
                rhs: rhs.len(),
            });
        }
        if upper.len() != n {
            return Err(LpError::BoundMismatch { len: upper.len(), n });
        }
        if let Some(i) = objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::BadObjective(i));
        }
        for (r, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::ColumnMismatch {
                    row: r,
                    len: row.len(),
                    n,
                });
            }
            if let Some(c) = row.iter().position(|a| !(*a >= 0.0) || !a.is_finite()) {
                return Err(LpError::NegativeEntry { row: r, col: c });
            }
        }
        if let Some(j) = rhs.iter().position(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(LpError::NonPositiveRhs(j));
        }
        if let Some(i) = upper.iter().position(|u| !(0.0..=1.0).contains(u)) {
            return Err(LpError::BadUpperBound(i));
        }
        Ok(PackingLp {
            objective,
            matrix,
            rhs,
            upper,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `max_{i,j} A_ji / b_j`.
    pub fn q_max(&self) -> f64 {
        self.matrix
            .iter()
            .zip(&self.rhs)
            .flat_map(|(row, b)| row.iter().map(move |a| a / b))
            .fold(0.0, f64::max)
    }

    pub fn value_of(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective_value: f64,
    /// Indices strictly between their bounds (by more than `FEAS_TOL`).
    pub fractional_set: Vec<usize>,
    pub pivots: usize,
}

impl LpSolution {
    /// Indices with positive value.
    pub fn support(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, x)| **x > FEAS_TOL)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn fractional_indices(values: &[f64], upper: &[f64]) -> Vec<usize> {
    values
        .iter()
        .zip(upper)
        .enumerate()
        .filter(|(_, (x, u))| **x > FEAS_TOL && **x < **u - FEAS_TOL)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau<'a> {
    lp: &'a PackingLp,
    n: usize,
    m: usize,
    /// m × (n + m), row-major: B⁻¹ [A | I].
    tab: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<Status>,
    upper: Vec<f64>,
    reduced: Vec<f64>,
    cost: Vec<f64>,
    opt_tol: f64,
    pivots: usize,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a PackingLp) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let cols = n + m;
        let mut tab = vec![0.0; m * cols];
        for (r, row) in lp.matrix.iter().enumerate() {
            tab[r * cols..r * cols + n].copy_from_slice(row);
            tab[r * cols + n + r] = 1.0;
        }
        let mut upper = lp.upper.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut status = vec![Status::AtLower; n];
        status.extend(std::iter::repeat_n(Status::Basic, m));
        let mut cost = lp.objective.clone();
        cost.extend(std::iter::repeat_n(0.0, m));
        let cmax = lp.objective.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        Tableau {
            lp,
            n,
            m,
            tab,
            beta: lp.rhs.clone(),
            basis: (n..n + m).collect(),
            status,
            upper,
            reduced: cost.clone(),
            cost,
            opt_tol: OPT_RTOL * cmax,
            pivots: 0,
        }
    }

    fn cols(&self) -> usize {
        self.n + self.m
    }

    fn column_of(&self, j: usize, r: usize) -> f64 {
        if j < self.n {
            self.lp.matrix[r][j]
        } else if j - self.n == r {
            1.0
        } else {
            0.0
        }
    }

    /// Smallest eligible index (Bland).
    fn entering(&self) -> Option<usize> {
        (0..self.cols()).find(|&j| match self.status[j] {
            Status::AtLower => self.upper[j] > 0.0 && self.reduced[j] > self.opt_tol,
            Status::AtUpper => self.reduced[j] < -self.opt_tol,
            Status::Basic => false,
        })
    }

    /// Returns `false` once optimal.
    fn iterate(&mut self) -> bool {
        let Some(j) = self.entering() else {
            return false;
        };
        let cols = self.cols();
        let dir = if self.status[j] == Status::AtLower { 1.0 } else { -1.0 };

        let mut best = self.upper[j];
        let mut leave: Option<(usize, Status)> = None;
        for r in 0..self.m {
            let alpha = dir * self.tab[r * cols + j];
            let (limit, to) = if alpha > PIVOT_TOL {
                (self.beta[r].max(0.0) / alpha, Status::AtLower)
            } else if alpha < -PIVOT_TOL {
                let ub = self.upper[self.basis[r]];
                if ub.is_infinite() {
                    continue;
                }
                ((ub - self.beta[r]).max(0.0) / -alpha, Status::AtUpper)
            } else {
                continue;
            };
            // Ties go to the bound flip, then to the smallest basic index.
            let take = if !best.is_finite() {
                true
            } else {
                let tie = 1e-12 * (1.0 + best);
                match leave {
                    None => limit < best - tie,
                    Some((lr, _)) => {
                        limit < best - tie
                            || (limit <= best + tie && self.basis[r] < self.basis[lr])
                    }
                }
            };
            if take {
                best = limit;
                leave = Some((r, to));
            }
        }
        assert!(
            best.is_finite(),
            "simplex step unbounded on a bounded packing LP"
        );

        let step = dir * best;
        for r in 0..self.m {
            let a = self.tab[r * cols + j];
            if a != 0.0 {
                self.beta[r] -= step * a;
            }
        }

        match leave {
            None => {
                // bound flip
                self.status[j] = if dir > 0.0 { Status::AtUpper } else { Status::AtLower };
            }
            Some((r, to)) => {
                let entering_value = if dir > 0.0 { best } else { self.upper[j] - best };
                let old = self.basis[r];
                self.status[old] = to;
                self.status[j] = Status::Basic;
                self.basis[r] = j;
                self.beta[r] = entering_value;
                self.pivot(r, j);
                self.pivots += 1;
                if self.pivots % REFACTOR_EVERY == 0 {
                    self.refactor();
                }
            }
        }
        true
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols();
        let p = self.tab[r * cols + j];
        let (head, rest) = self.tab.split_at_mut(r * cols);
        let (prow, tail) = rest.split_at_mut(cols);
        for v in prow.iter_mut() {
            *v /= p;
        }
        prow[j] = 1.0;
        for row in head.chunks_exact_mut(cols).chain(tail.chunks_exact_mut(cols)) {
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[j] = 0.0;
            }
        }
        let f = self.reduced[j];
        if f != 0.0 {
            for (v, pv) in self.reduced.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.reduced[j] = 0.0;
        }
    }

    /// Rebuilds B⁻¹[A | I], the basic values and the reduced costs from the
    /// original data to stop round-off from accumulating.
    fn refactor(&mut self) {
        let m = self.m;
        let cols = self.cols();
        // Gauss-Jordan on [B | I].
        let mut aug = vec![0.0; m * 2 * m];
        for r in 0..m {
            for (k, &j) in self.basis.iter().enumerate() {
                aug[r * 2 * m + k] = self.column_of(j, r);
            }
            aug[r * 2 * m + m + r] = 1.0;
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&a, &b| {
                    aug[a * 2 * m + c]
                        .abs()
                        .total_cmp(&aug[b * 2 * m + c].abs())
                })
                .unwrap();
            if aug[piv * 2 * m + c].abs() < 1e-14 {
                // Singular basis would indicate a bug; keep the drifted tableau.
                return;
            }
            if piv != c {
                for k in 0..2 * m {
                    aug.swap(piv * 2 * m + k, c * 2 * m + k);
                }
            }
            let p = aug[c * 2 * m + c];
            for k in 0..2 * m {
                aug[c * 2 * m + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = aug[r * 2 * m + c];
                if f != 0.0 {
                    for k in 0..2 * m {
                        aug[r * 2 * m + k] -= f * aug[c * 2 * m + k];
                    }
                }
            }
        }
        // Rows of B⁻¹ are aug[r][m..2m]. Basis row k corresponds to
        // basis[k]; B⁻¹ row k gives that variable.
        let binv: Vec<f64> = (0..m)
            .flat_map(|r| aug[r * 2 * m + m..r * 2 * m + 2 * m].to_vec())
            .collect();
        let mut tab = vec![0.0; m * cols];
        for r in 0..m {
            let brow = &binv[r * m..(r + 1) * m];
            let out = &mut tab[r * cols..(r + 1) * cols];
            for (k, &bk) in brow.iter().enumerate() {
                if bk == 0.0 {
                    continue;
                }
                for (o, a) in out[..self.n].iter_mut().zip(&self.lp.matrix[k]) {
                    *o += bk * a;
                }
                out[self.n + k] += bk;
            }
        }
        // beta = B⁻¹ (b − Σ_{j at upper} A_j u_j)
        let mut rhs = self.lp.rhs.clone();
        for j in 0..self.n {
            if self.status[j] == Status::AtUpper {
                for (r, v) in rhs.iter_mut().enumerate() {
                    *v -= self.lp.matrix[r][j] * self.upper[j];
                }
            }
        }
        for r in 0..m {
            self.beta[r] = (0..m).map(|k| binv[r * m + k] * rhs[k]).sum();
        }
        // reduced = c − c_B B⁻¹ [A | I]
        let mut reduced = self.cost.clone();
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for (d, t) in reduced.iter_mut().zip(&tab[r * cols..(r + 1) * cols]) {
                    *d -= cb * t;
                }
            }
        }
        for &j in &self.basis {
            reduced[j] = 0.0;
        }
        self.tab = tab;
        self.reduced = reduced;
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (j, xj) in x.iter_mut().enumerate() {
            if self.status[j] == Status::AtUpper {
                *xj = self.upper[j];
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.beta[r];
            }
        }
        x
    }
}

/// Optimal vertex of `lp`.
pub fn solve_basic_optimal(lp: &PackingLp) -> LpSolution {
    let mut t = Tableau::new(lp);
    let limit = 50 * (t.cols() + 1) * (t.m + 1) + 10_000;
    let mut steps = 0usize;
    loop {
        while t.iterate() {
            steps += 1;
            assert!(steps < limit, "simplex exceeded {limit} iterations");
        }
        if t.pivots == 0 {
            break;
        }
        // Confirm optimality on freshly computed data.
        t.refactor();
        if t.entering().is_none() {
            break;
        }
    }

    let mut values = t.primal();
    for (x, u) in values.iter_mut().zip(&lp.upper) {
        if *x < FEAS_TOL {
            *x = 0.0;
        } else if *x > u - FEAS_TOL {
            *x = *u;
        }
    }
    LpSolution {
        objective_value: lp.value_of(&values),
        fractional_set: fractional_indices(&values, &lp.upper),
        values,
        pivots: t.pivots,
    }
}

/// Feasible (within tolerance) with at most `m` strictly fractional entries.
pub fn verify_vertex(sol: &LpSolution, lp: &PackingLp) -> bool {
    if sol.values.len() != lp.num_vars() {
        return false;
    }
    let in_box = sol
        .values
        .iter()
        .zip(&lp.upper)
        .all(|(x, u)| *x >= -FEAS_TOL && *x <= u + FEAS_TOL);
    let rows_ok = lp.matrix.iter().zip(&lp.rhs).all(|(row, b)| {
        let lhs: f64 = row.iter().zip(&sol.values).map(|(a, x)| a * x).sum();
        lhs <= b + FEAS_TOL * b
    });
    in_box && rows_ok && fractional_indices(&sol.values, &lp.upper).len() <= lp.num_rows()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: &[f64], a: &[&[f64]], b: &[f64]) -> PackingLp {
        PackingLp::new(
            c.to_vec(),
            a.iter().map(|r| r.to_vec()).collect(),
            b.to_vec(),
            vec![1.0; c.len()],
        )
        .unwrap()
    }

    #[test]
    fn dominant_item_fills_capacity() {
        let p = lp(&[2.0, 1.0], &[&[1.0, 1.0]], &[1.0]);
        let s = solve_basic_optimal(&p);
        assert_eq!(s.values, vec![1.0, 0.0]);
        assert_eq!(s.objective_value, 2.0);
        assert!(verify_vertex(&s, &p));
    }

    #[test]
    fn two_items_share_one_row() {
        // Vertices of {0.6x+0.6y ≤ 1, 0 ≤ x,y ≤ 1}: (0,0) (1,0) (0,1) (1,2/3)
        // (2/3,1); objective 3x+2y peaks at (1,2/3) with 3 + 4/3.
        let p = lp(&[3.0, 2.0], &[&[0.6, 0.6]], &[1.0]);
        let s = solve_basic_optimal(&p);
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        assert!((s.values[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.objective_value - (3.0 + 4.0 / 3.0)).abs() < 1e-12);
        assert_eq!(s.fractional_set, vec![1]);
    }

    #[test]
    fn disjoint_pair_beats_wide_item() {
        // A=(2,(1,0)) B=(1,(1,1)) C=(1,(0,1))
        let p = lp(&[2.0, 1.0, 1.0], &[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]], &[1.0, 1.0]);
        let s = solve_basic_optimal(&p);
        assert_eq!(s.values, vec![1.0, 0.0, 1.0]);
        assert_eq!(s.objective_value, 3.0);
    }

    #[test]
    fn respects_upper_bounds() {
        let p = PackingLp::new(vec![1.0, 1.0], vec![vec![1.0, 1.0]], vec![5.0], vec![0.25, 0.0])
            .unwrap();
        let s = solve_basic_optimal(&p);
        assert_eq!(s.values, vec![0.25, 0.0]);
    }

    #[test]
    fn empty_lp() {
        let p = PackingLp::new(vec![], vec![vec![]], vec![1.0], vec![]).unwrap();
        let s = solve_basic_optimal(&p);
        assert!(s.values.is_empty());
        assert_eq!(s.objective_value, 0.0);
    }

    #[test]
    fn rejects_malformed() {
        assert_eq!(
            PackingLp::new(vec![1.0], vec![vec![-1.0]], vec![1.0], vec![1.0]),
            Err(LpError::NegativeEntry { row: 0, col: 0 })
        );
        assert_eq!(
            PackingLp::new(vec![1.0], vec![vec![1.0]], vec![0.0], vec![1.0]),
            Err(LpError::NonPositiveRhs(0))
        );
        assert_eq!(
            PackingLp::new(vec![1.0], vec![vec![1.0]], vec![1.0], vec![1.5]),
            Err(LpError::BadUpperBound(0))
        );
    }

    #[test]
    fn verify_vertex_rejects_too_many_fractions() {
        let p = lp(&[1.0, 1.0], &[&[1.0, 1.0]], &[1.0]);
        let sol = LpSolution {
            values: vec![0.5, 0.5],
            objective_value: 1.0,
            fractional_set: vec![0, 1],
            pivots: 0,
        };
        assert!(!verify_vertex(&sol, &p));
    }

    #[test]
    fn verify_vertex_rejects_row_violation() {
        let p = lp(&[1.0], &[&[1.0]], &[1.0]);
        let sol = LpSolution {
            values: vec![1.0],
            objective_value: 1.0,
            fractional_set: vec![],
            pivots: 0,
        };
        assert!(verify_vertex(&sol, &p));
        let p2 = PackingLp::new(vec![1.0], vec![vec![1.0 + 2.0 * FEAS_TOL]], vec![1.0], vec![1.0])
            .unwrap();
        assert!(!verify_vertex(&sol, &p2));
    }
}
