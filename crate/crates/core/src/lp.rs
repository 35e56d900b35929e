//! Dense two-phase simplex, falling back to Bland's anti-cycling rule on degenerate runs.
//!
//! Problems are stated as `maximize c^T x` subject to rows `a_i^T x {<=, >=, =} b_i`
//! and `x >= 0`. Sizes here are small (a few hundred rows at most), so a full tableau
//! is simpler and exact enough.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;
/// Pivots between rebuilds of the tableau from the original data.
const REFACTOR_EVERY: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One dual value per constraint, in the orientation the constraint was given.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        Tableau::build(self)?.solve(self)
    }
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    original: Vec<f64>,
    basis: Vec<usize>,
    n_vars: usize,
    /// Column that starts as the identity column of each row (slack or artificial).
    init_col: Vec<usize>,
    /// Whether the row was negated to make its right-hand side nonnegative.
    flipped: Vec<bool>,
    artificial_start: usize,
    active_rows: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Result<Self> {
        let n = lp.objective.len();
        let m = lp.constraints.len();
        if lp.constraints.iter().any(|c| c.coeffs.len() != n) {
            return Err(Error::Dimension("constraint length differs from objective length".into()));
        }
        if lp.objective.iter().chain(lp.constraints.iter().flat_map(|c| c.coeffs.iter().chain([&c.rhs]))).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("linear program data".into()));
        }
        let mut rels = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        for c in &lp.constraints {
            let flip = c.rhs < 0.0;
            flipped.push(flip);
            rels.push(match (c.relation, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            });
        }
        let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
        let cols = n + n_slack + n_art;
        let width = cols + 1;
        let mut t = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut init_col = vec![0; m];
        let (mut next_slack, mut next_art) = (n, n + n_slack);
        for (i, c) in lp.constraints.iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            let row = &mut t[i * width..(i + 1) * width];
            for (dst, &a) in row[..n].iter_mut().zip(&c.coeffs) {
                *dst = sign * a;
            }
            row[cols] = sign * c.rhs;
            match rels[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    init_col[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    init_col[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    init_col[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Ok(Self {
            rows: m,
            cols,
            original: t.clone(),
            t,
            basis,
            n_vars: n,
            init_col,
            flipped,
            artificial_start: n + n_slack,
            active_rows: vec![true; m],
            pivots: 0,
        })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let piv = self.at(r, c);
        for x in &mut self.t[r * width..(r + 1) * width] {
            *x /= piv;
        }
        let prow: Vec<f64> = self.t[r * width..(r + 1) * width].to_vec();
        for i in 0..self.rows {
            if i == r || !self.active_rows[i] {
                continue;
            }
            let f = self.t[i * width + c];
            if f != 0.0 {
                for (x, &p) in self.t[i * width..(i + 1) * width].iter_mut().zip(&prow) {
                    *x -= f * p;
                }
                self.t[i * width + c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Recomputes `B^-1 [A | b]` for the active rows from the original data, discarding
    /// the rounding error accumulated by successive pivots.
    fn refactor(&mut self) {
        let width = self.cols + 1;
        let active: Vec<usize> = (0..self.rows).filter(|&i| self.active_rows[i]).collect();
        let k = active.len();
        if k == 0 {
            return;
        }
        let b = DMatrix::from_fn(k, k, |r, c| self.original[active[r] * width + self.basis[active[c]]]);
        let orig = DMatrix::from_fn(k, width, |r, c| self.original[active[r] * width + c]);
        let Some(fresh) = b.lu().solve(&orig) else { return };
        if fresh.iter().any(|x| !x.is_finite()) {
            return;
        }
        for (r, &i) in active.iter().enumerate() {
            for c in 0..width {
                self.t[i * width + c] = fresh[(r, c)];
            }
            for (c, &bi) in active.iter().enumerate() {
                self.t[i * width + self.basis[bi]] = if r == c { 1.0 } else { 0.0 };
            }
            let rhs = &mut self.t[i * width + self.cols];
            if *rhs < 0.0 && *rhs > -1e-9 {
                *rhs = 0.0;
            }
        }
    }

    /// `r_j = c_j - c_B^T B^-1 a_j` for every column.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.cols + 1;
        let mut reduced = vec![0.0; width];
        reduced[..self.cols].copy_from_slice(cost);
        for i in 0..self.rows {
            if !self.active_rows[i] {
                continue;
            }
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (r, &t) in reduced.iter_mut().zip(&self.t[i * width..(i + 1) * width]) {
                    *r -= cb * t;
                }
            }
        }
        reduced
    }

    /// Runs primal simplex for cost vector `cost` (length `cols`), never letting columns
    /// at or beyond `col_limit` enter.
    fn optimize(&mut self, cost: &[f64], col_limit: usize) -> Result<()> {
        let width = self.cols + 1;
        let mut reduced = self.reduced_costs(cost);
        let mut is_basic = vec![false; self.cols];
        for i in 0..self.rows {
            if self.active_rows[i] {
                is_basic[self.basis[i]] = true;
            }
        }
        let mut since_refactor = 0;
        let mut degenerate_run = 0;
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Lp(format!("pivot limit {MAX_PIVOTS} exceeded")));
            }
            if since_refactor >= REFACTOR_EVERY {
                self.refactor();
                reduced = self.reduced_costs(cost);
                since_refactor = 0;
            }
            // Dantzig's largest reduced cost while making progress; Bland's lowest index once
            // a run of degenerate pivots suggests stalling, which rules out cycling
            let candidates = (0..col_limit).filter(|&j| !is_basic[j] && reduced[j] > PIVOT_EPS);
            let entering = if degenerate_run >= BLAND_AFTER {
                candidates.min()
            } else {
                candidates.max_by(|&a, &b| reduced[a].total_cmp(&reduced[b]).then(b.cmp(&a)))
            };
            let Some(c) = entering else {
                if since_refactor > 0 {
                    // confirm optimality on a freshly factored tableau
                    since_refactor = REFACTOR_EVERY;
                    continue;
                }
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if !self.active_rows[i] {
                    continue;
                }
                let a = self.at(i, c);
                if a > 1e-9 {
                    let ratio = self.rhs(i) / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leaving else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            if ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            is_basic[self.basis[r]] = false;
            is_basic[c] = true;
            self.pivot(r, c);
            since_refactor += 1;
            let f = reduced[c];
            for (x, &p) in reduced.iter_mut().zip(&self.t[r * width..(r + 1) * width]) {
                *x -= f * p;
            }
            reduced[c] = 0.0;
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let has_artificials = self.artificial_start < self.cols;
        if has_artificials {
            let mut phase1 = vec![0.0; self.cols];
            phase1[self.artificial_start..].iter_mut().for_each(|c| *c = -1.0);
            self.optimize(&phase1, self.cols)?;
            let infeas: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.artificial_start)
                .map(|i| self.rhs(i))
                .sum();
            let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
            if infeas > 1e-9 * scale {
                return Err(Error::Lp(format!("infeasible (phase-one residual {infeas:e})")));
            }
            // drive remaining artificials out of the basis or drop redundant rows
            for i in 0..self.rows {
                if self.basis[i] < self.artificial_start {
                    continue;
                }
                match (0..self.artificial_start).find(|&j| self.at(i, j).abs() > 1e-9) {
                    Some(j) => self.pivot(i, j),
                    None => self.active_rows[i] = false,
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.n_vars].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.artificial_start)?;

        let mut x = vec![0.0; self.n_vars];
        for i in 0..self.rows {
            if self.active_rows[i] && self.basis[i] < self.n_vars {
                x[self.basis[i]] = self.rhs(i);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = (0..self.rows)
            .map(|k| {
                let col = self.init_col[k];
                let y: f64 = (0..self.rows)
                    .filter(|&i| self.active_rows[i])
                    .map(|i| cost[self.basis[i]] * self.at(i, col))
                    .sum();
                if self.flipped[k] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
            pivots: self.pivots,
        })
    }
}
