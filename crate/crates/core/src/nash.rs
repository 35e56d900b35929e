//! Nash equilibria of zero-sum matrix games.
//!
//! Zero-sum games are solved exactly by the simplex in [`crate::lp`]. Maximum-entropy
//! selection first identifies the Nash face with one LP, then maximizes entropy on it
//! with a barrier Newton method.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::types::EvalMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;

const NEWTON_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashMixture {
    pub probs: Vec<f64>,
    /// Most negative entry of `p^T A`.
    pub residual: f64,
    pub entropy: f64,
}

impl NashMixture {
    pub fn from_probs(a: &DMatrix<f64>, probs: Vec<f64>) -> Self {
        let residual = row_payoffs(a, &probs).into_iter().fold(f64::INFINITY, f64::min);
        let entropy = entropy(&probs);
        Self { probs, residual, entropy }
    }

    /// Indices with mass strictly above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.probs.len()).filter(|&i| self.probs[i] > threshold).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSumSolution {
    pub row_mixture: Vec<f64>,
    pub col_mixture: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub min_payoff: f64,
    pub min_prob: f64,
    pub sum_residual: f64,
    pub is_distribution: bool,
    pub passed: bool,
    pub tol: f64,
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// `p^T A` as a vector over columns.
pub fn row_payoffs(a: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| p[i] * a[(i, j)]).sum()).collect()
}

fn clean_distribution(mut p: Vec<f64>) -> Vec<f64> {
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    p
}

/// Minimax solution of the zero-sum game where the row player maximizes `p^T A q`.
pub fn solve_zero_sum(a: &DMatrix<f64>, tol: f64) -> Result<ZeroSumSolution> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::Dimension("zero-sum game needs at least one row and column".into()));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("payoff matrix".into()));
    }
    // Shift to a strictly positive matrix B, then max 1^T y st B y <= 1, y >= 0.
    // The column mixture is y / z and the row mixture comes from the row duals.
    let shift = 1.0 - a.min();
    let mut lp = LinearProgram::new(vec![1.0; n]);
    for i in 0..m {
        lp.add((0..n).map(|j| a[(i, j)] + shift).collect(), Relation::Le, 1.0);
    }
    let sol = lp.maximize()?;
    let z = sol.objective;
    if !(z > 0.0) {
        return Err(Error::Lp(format!("degenerate optimum {z}")));
    }
    let col_mixture = clean_distribution(sol.x.iter().map(|y| y / z).collect());
    let row_mixture = clean_distribution(sol.duals.iter().map(|x| x / z).collect());
    let value = 1.0 / z - shift;

    let pa = row_payoffs(a, &row_mixture);
    let aq: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a[(i, j)] * col_mixture[j]).sum()).collect();
    let worst_row = pa.iter().map(|x| value - x).fold(f64::NEG_INFINITY, f64::max);
    let worst_col = aq.iter().map(|x| x - value).fold(f64::NEG_INFINITY, f64::max);
    if worst_row > tol || worst_col > tol {
        return Err(Error::Lp(format!(
            "minimax certificate off by {:e} (rows) / {:e} (columns)",
            worst_row, worst_col
        )));
    }
    Ok(ZeroSumSolution {
        row_mixture,
        col_mixture,
        value,
    })
}

/// Some symmetric Nash equilibrium `p^T A >= 0` of an antisymmetric matrix.
pub fn solve_symmetric_nash(a: &EvalMatrix, tol: f64) -> Result<NashMixture> {
    let entries = a.entries();
    let sol = solve_zero_sum(entries, tol)?;
    // For antisymmetric A, A q <= 0 is the same as q^T A >= 0, and the primal q is the
    // more accurate of the two mixtures.
    let nash = NashMixture::from_probs(entries, sol.col_mixture);
    if nash.residual < -tol {
        return Err(Error::Lp(format!("Nash residual {:e} exceeds tolerance", nash.residual)));
    }
    Ok(nash)
}

/// The maximum-entropy member of the Nash polytope `{p : p^T A >= 0}`.
pub fn max_entropy_nash(a: &EvalMatrix, tol: f64) -> Result<NashMixture> {
    let n = a.n();
    let entries = a.entries();
    if n == 1 {
        return Ok(NashMixture::from_probs(entries, vec![1.0]));
    }
    let face = nash_face(entries, solve_symmetric_nash(a, tol)?.probs)?;
    let support = face.support;
    let strict = face.strict;
    let equal: Vec<usize> = (0..n).filter(|j| !strict.contains(j)).collect();

    let m = support.len();
    let mut probs = vec![0.0; n];
    if m == 1 {
        probs[support[0]] = 1.0;
        return finish(entries, probs, tol);
    }

    // columns of the payoff restricted to the support rows
    let col = |j: usize| DVector::from_iterator(m, support.iter().map(|&i| entries[(i, j)]));
    let eq_rows: Vec<DVector<f64>> = equal.iter().map(|&j| col(j)).collect();
    let ineq: Vec<DVector<f64>> = strict.iter().map(|&j| col(j)).collect();

    let mut c = DMatrix::zeros(eq_rows.len() + 1, m);
    for (r, v) in eq_rows.iter().enumerate() {
        c.set_row(r, &v.transpose());
    }
    c.row_mut(eq_rows.len()).fill(1.0);
    let mut rhs = DVector::zeros(eq_rows.len() + 1);
    rhs[eq_rows.len()] = 1.0;

    let free = null_space(&c).is_some();
    let c_total: f64 = support.iter().map(|&i| face.center[i]).sum();
    let mut p = DVector::from_iterator(m, support.iter().map(|&i| face.center[i] / c_total));
    // snap onto the affine hull; the LP point is already on it up to rounding
    let pinv = c.clone().pseudo_inverse(1e-12).map_err(|e| Error::Degenerate(e.to_string()))?;
    let corrected = &p - &pinv * (&c * &p - &rhs);
    if corrected.iter().all(|&x| x > 0.0) && ineq.iter().all(|g| g.dot(&corrected) > 0.0) {
        p = corrected;
    }

    if free {
        p = barrier_newton(p, &c, &ineq, tol)?;
    }
    for (k, &i) in support.iter().enumerate() {
        probs[i] = p[k];
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|x| *x /= total);
    finish(entries, probs, tol)
}

fn finish(a: &DMatrix<f64>, probs: Vec<f64>, tol: f64) -> Result<NashMixture> {
    let nash = NashMixture::from_probs(a, probs);
    if nash.residual < -tol {
        return Err(Error::NonConvergence(format!(
            "max-entropy Nash residual {:e} exceeds tolerance {tol:e}",
            nash.residual
        )));
    }
    Ok(nash)
}

struct NashFace {
    /// Strictly feasible point of the face: positive on `support`, strictly positive
    /// payoff on `strict`.
    center: Vec<f64>,
    support: Vec<usize>,
    strict: Vec<usize>,
}

const FACE_EPS: f64 = 1e-10;

/// Finds the maximal Nash support and the columns some equilibrium beats strictly.
///
/// For antisymmetric `A` every index is one or the other (strict complementarity), so
/// starting from one equilibrium each LP maximizes the total mass plus payoff over the
/// indices still unclassified, and classifies whatever turns positive. The average of
/// the LP solutions is strictly feasible for the whole face.
fn nash_face(a: &DMatrix<f64>, start: Vec<f64>) -> Result<NashFace> {
    let n = a.nrows();
    let mut points = vec![start];
    let mut in_support = vec![false; n];
    let mut in_strict = vec![false; n];
    loop {
        let last = points.last().expect("at least one point");
        let pay = row_payoffs(a, last);
        for i in 0..n {
            in_support[i] |= last[i] > FACE_EPS;
            in_strict[i] |= pay[i] > FACE_EPS;
        }
        let unknown: Vec<usize> = (0..n).filter(|&i| !in_support[i] && !in_strict[i]).collect();
        if unknown.is_empty() {
            break;
        }
        let mut objective = vec![0.0; n];
        for &u in &unknown {
            objective[u] += 1.0;
            for i in 0..n {
                objective[i] += a[(i, u)];
            }
        }
        let mut lp = LinearProgram::new(objective);
        for j in 0..n {
            lp.add((0..n).map(|i| a[(i, j)]).collect(), Relation::Ge, 0.0);
        }
        lp.add(vec![1.0; n], Relation::Eq, 1.0);
        let sol = lp.maximize()?;
        let p = clean_distribution(sol.x);
        let pay = row_payoffs(a, &p);
        if unknown.iter().all(|&u| p[u] <= FACE_EPS && pay[u] <= FACE_EPS) {
            // nothing separates from zero; leave the rest on the equality side
            break;
        }
        points.push(p);
    }
    let k = points.len() as f64;
    let center = (0..n).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / k).collect();
    Ok(NashFace {
        center,
        support: (0..n).filter(|&i| in_support[i]).collect(),
        strict: (0..n).filter(|&j| in_strict[j] && !in_support[j]).collect(),
    })
}

/// Orthonormal basis of `ker c`, or `None` when the kernel is trivial.
fn null_space(c: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let m = c.ncols();
    // pad to at least m rows so the SVD returns a full right basis
    let rows = c.nrows().max(m);
    let mut padded = DMatrix::zeros(rows, m);
    padded.view_mut((0, 0), c.shape()).copy_from(c);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let cutoff = 1e-10 * smax.max(1.0);
    let kernel: Vec<usize> = (0..m).filter(|&k| svd.singular_values[k] <= cutoff).collect();
    if kernel.is_empty() {
        return None;
    }
    let mut basis = DMatrix::zeros(m, kernel.len());
    for (col, &k) in kernel.iter().enumerate() {
        basis.set_column(col, &v_t.row(k).transpose());
    }
    Some(basis)
}

/// Maximizes entropy over `{p : C p = C p0, p > 0, g_j^T p >= 0}` by a log-barrier on
/// the inequalities, driving the barrier weight to zero.
///
/// Newton steps are taken in the variables `y = p / sqrt(p_k)` at the current iterate, where
/// the reduced Hessian is the identity plus a positive semidefinite term. In the original
/// variables it is `diag(1/p)`, which stops being factorable once some mass reaches 1e-20.
fn barrier_newton(mut p: DVector<f64>, c: &DMatrix<f64>, ineq: &[DVector<f64>], tol: f64) -> Result<DVector<f64>> {
    let k = ineq.len();
    let final_mu = if k == 0 { 0.0 } else { 0.1 * tol / k as f64 };
    let mut mu = if k == 0 { 0.0 } else { 1.0 };
    let mut steps = 0;
    let objective = |p: &DVector<f64>, mu: f64| -> Option<f64> {
        if p.iter().any(|&x| x <= 0.0) {
            return None;
        }
        let mut f: f64 = p.iter().map(|&x| x * x.ln()).sum();
        for g in ineq {
            let s = g.dot(p);
            if s <= 0.0 {
                return None;
            }
            f -= mu * s.ln();
        }
        Some(f)
    };
    loop {
        loop {
            steps += 1;
            if steps > NEWTON_CAP {
                return Err(Error::NonConvergence(format!("entropy maximization exceeded {NEWTON_CAP} Newton steps")));
            }
            let scale = p.map(f64::sqrt);
            let mut grad = p.map(|x| x.ln() + 1.0).component_mul(&scale);
            let mut hess = DMatrix::identity(p.len(), p.len());
            for g in ineq {
                let s = g.dot(&p);
                let sg = g.component_mul(&scale);
                grad.axpy(-mu / s, &sg, 1.0);
                hess.ger(mu / (s * s), &sg, &sg, 1.0);
            }
            let scaled_c = DMatrix::from_fn(c.nrows(), c.ncols(), |r, col| c[(r, col)] * scale[col]);
            let Some(basis) = null_space(&scaled_c) else { break };
            let hr = basis.transpose() * &hess * &basis;
            let gr = basis.transpose() * &grad;
            let Some(chol) = hr.cholesky() else {
                return Err(Error::NonConvergence("reduced Hessian lost definiteness".into()));
            };
            let dz = -chol.solve(&gr);
            let decrement = -gr.dot(&dz);
            if decrement / 2.0 < 1e-15 {
                break;
            }
            let dp = (basis * dz).component_mul(&scale);
            let f0 = objective(&p, mu).expect("iterate stays interior");
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let cand = &p + &dp * step;
                if let Some(f) = objective(&cand, mu) {
                    if f <= f0 - 0.25 * step * decrement {
                        p = cand;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                // no representable descent left at this barrier weight
                break;
            }
        }
        if mu <= final_mu {
            return Ok(p);
        }
        mu = (mu * 0.1).max(final_mu);
    }
}

/// Checks that `p` is a distribution with `p^T A >= -tol`.
pub fn verify_nash(a: &DMatrix<f64>, p: &[f64], tol: f64) -> Result<NashReport> {
    if p.len() != a.nrows() {
        return Err(Error::Dimension(format!("mixture has {} entries, matrix has {} rows", p.len(), a.nrows())));
    }
    let min_payoff = row_payoffs(a, p).into_iter().fold(f64::INFINITY, f64::min);
    let min_prob = p.iter().copied().fold(f64::INFINITY, f64::min);
    let sum_residual = (p.iter().sum::<f64>() - 1.0).abs();
    let is_distribution = min_prob >= -tol && sum_residual <= tol.max(1e-12);
    Ok(NashReport {
        min_payoff,
        min_prob,
        sum_residual,
        is_distribution,
        passed: is_distribution && min_payoff >= -tol,
        tol,
    })
}
