//! Agents, populations and antisymmetric evaluation matrices.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::Game;

/// A parametrized agent: a real parameter vector tagged with the game it plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub game_id: String,
    pub params: Vec<f64>,
    pub tag: String,
}

impl Agent {
    pub fn new(game_id: impl Into<String>, params: Vec<f64>, tag: impl Into<String>) -> Self {
        Self {
            game_id: game_id.into(),
            params,
            tag: tag.into(),
        }
    }

    /// Checks the parameter length against `game` and that every entry is finite.
    pub fn validate(&self, game: &dyn Game) -> Result<()> {
        if self.game_id != game.id() {
            return Err(Error::GameMismatch(self.game_id.clone(), game.id().to_string()));
        }
        if self.params.len() != game.param_dim() {
            return Err(Error::Dimension(format!(
                "agent `{}` has {} params, game `{}` expects {}",
                self.tag,
                self.params.len(),
                game.id(),
                game.param_dim()
            )));
        }
        if let Some(x) = self.params.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("agent `{}` param {x}", self.tag)));
        }
        Ok(())
    }
}

/// An ordered, non-empty list of agents playing the same game.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub game_id: String,
    pub agents: Vec<Agent>,
    pub meta: BTreeMap<String, String>,
}

impl Population {
    pub fn new(game_id: impl Into<String>, agents: Vec<Agent>) -> Result<Self> {
        let pop = Self {
            game_id: game_id.into(),
            agents,
            meta: BTreeMap::new(),
        };
        pop.check_shape()?;
        Ok(pop)
    }

    /// Builds a population from raw parameter vectors, tagging agents by index.
    pub fn from_params(game_id: &str, params: Vec<Vec<f64>>) -> Result<Self> {
        let agents = params
            .into_iter()
            .enumerate()
            .map(|(i, p)| Agent::new(game_id, p, format!("a{i}")))
            .collect();
        Self::new(game_id, agents)
    }

    fn check_shape(&self) -> Result<()> {
        if self.agents.is_empty() {
            return Err(Error::InvalidArgument("population is empty".into()));
        }
        if let Some(a) = self.agents.iter().find(|a| a.game_id != self.game_id) {
            return Err(Error::GameMismatch(a.game_id.clone(), self.game_id.clone()));
        }
        Ok(())
    }

    pub fn validate(&self, game: &dyn Game) -> Result<()> {
        self.check_shape()?;
        if self.game_id != game.id() {
            return Err(Error::GameMismatch(self.game_id.clone(), game.id().to_string()));
        }
        self.agents.iter().try_for_each(|a| a.validate(game))
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.agents.iter().map(|a| a.params.as_slice()).collect()
    }
}

/// Settings for computing payoffs. `samples` only matters for stochastic games.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { samples: 1, seed: 0 }
    }
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mean payoff of `v` against `w` over `cfg.samples` seeded evaluations.
pub fn sampled_phi(game: &dyn Game, v: &[f64], w: &[f64], cfg: &EvalConfig, pair: (usize, usize)) -> f64 {
    let samples = cfg.samples.max(1);
    let base = splitmix(cfg.seed ^ splitmix(((pair.0 as u64) << 32) | pair.1 as u64));
    let total: f64 = (0..samples)
        .map(|s| game.phi_seeded(v, w, splitmix(base.wrapping_add(s as u64))))
        .sum();
    total / samples as f64
}

/// Dense antisymmetric matrix of pairwise payoffs `A[i][j] = phi(w_i, w_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMatrix {
    entries: DMatrix<f64>,
    tol: f64,
}

impl EvalMatrix {
    /// Wraps `entries` after checking squareness, finiteness and antisymmetry within `tol`.
    pub fn new(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension(format!(
                "evaluation matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if !(tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {tol} must be nonnegative")));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("evaluation matrix entry".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in i..n {
                let gap = (entries[(i, j)] + entries[(j, i)]).abs();
                if gap > tol {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not antisymmetric at ({i},{j}): |a_ij + a_ji| = {gap:e} > {tol:e}"
                    )));
                }
            }
        }
        Ok(Self { entries, tol })
    }

    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must all have length n".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), tol)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
            tol: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// Principal submatrix on `idx`, in the given order.
    pub fn submatrix(&self, idx: &[usize]) -> EvalMatrix {
        let m = idx.len();
        Self {
            entries: DMatrix::from_fn(m, m, |a, b| self.entries[(idx[a], idx[b])]),
            tol: self.tol,
        }
    }

    /// Appends agents whose payoffs against the existing ones are `cross[k][j] = phi(new_k, old_j)`
    /// and among themselves `inner[k][l] = phi(new_k, new_l)` (upper triangle used).
    pub fn extended(&self, cross: &[Vec<f64>], inner: &[Vec<f64>]) -> Result<EvalMatrix> {
        let n = self.n();
        let k = cross.len();
        if cross.iter().any(|r| r.len() != n) || inner.len() != k || inner.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("extension blocks have the wrong shape".into()));
        }
        let mut m = DMatrix::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&self.entries);
        for (a, row) in cross.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m[(n + a, j)] = x;
                m[(j, n + a)] = -x;
            }
        }
        for a in 0..k {
            for b in (a + 1)..k {
                m[(n + a, n + b)] = inner[a][b];
                m[(n + b, n + a)] = -inner[a][b];
            }
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("payoff in matrix extension".into()));
        }
        Ok(Self { entries: m, tol: self.tol })
    }

    /// Writes the full matrix as CSV, one row per line, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_matrix_csv(&self.entries, out)
    }

    pub fn read_csv<R: Read>(input: R, tol: f64) -> Result<Self> {
        Self::new(read_matrix_csv(input)?, tol)
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes any dense matrix as headerless CSV with 17 significant digits per entry.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.nrows() {
        wtr.write_record(m.row(i).iter().map(|&x| fmt_f64(x)))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad matrix entry `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged CSV matrix".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Returns `(M - M^T) / 2` as an exactly antisymmetric evaluation matrix.
pub fn antisymmetrize(m: &DMatrix<f64>) -> Result<EvalMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("expected square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("antisymmetrize input".into()));
    }
    let n = m.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = (m[(i, j)] - m[(j, i)]) / 2.0;
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    Ok(EvalMatrix { entries: a, tol: 0.0 })
}

/// Builds the evaluation matrix of `pop` under `game`.
///
/// Only pairs `i < j` are evaluated; the lower triangle is the exact negation and the
/// diagonal is zero, so the result is antisymmetric bit-for-bit.
pub fn build_eval_matrix(game: &dyn Game, pop: &Population, cfg: &EvalConfig) -> Result<EvalMatrix> {
    pop.validate(game)?;
    let n = pop.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| sampled_phi(game, &pop.agents[i].params, &pop.agents[j].params, cfg, (i, j)))
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for (&(i, j), &x) in pairs.iter().zip(&vals) {
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("payoff phi(w_{i}, w_{j}) = {x}")));
        }
        a[(i, j)] = x;
        a[(j, i)] = -x;
    }
    Ok(EvalMatrix { entries: a, tol: 0.0 })
}

/// Rectangular payoff matrix `phi(v, w)` for `v` in `p`, `w` in `q`.
pub fn cross_eval_matrix(game: &dyn Game, p: &Population, q: &Population, cfg: &EvalConfig) -> Result<DMatrix<f64>> {
    p.validate(game)?;
    q.validate(game)?;
    let (m, n) = (p.len(), q.len());
    let vals: Vec<f64> = (0..m * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            sampled_phi(game, &p.agents[i].params, &q.agents[j].params, cfg, (i, j))
        })
        .collect();
    if let Some(x) = vals.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("cross payoff {x}")));
    }
    Ok(DMatrix::from_row_slice(m, n, &vals))
}

/// Appends `new_agents` to a population's evaluation matrix, evaluating only the new
/// rows and columns.
pub fn extend_eval_matrix(
    game: &dyn Game,
    eval: &EvalMatrix,
    existing: &[Agent],
    new_agents: &[Agent],
    cfg: &EvalConfig,
) -> Result<EvalMatrix> {
    if existing.len() != eval.n() {
        return Err(Error::Dimension("existing agents do not match matrix size".into()));
    }
    for a in new_agents {
        a.validate(game)?;
    }
    let n = existing.len();
    let cross: Vec<Vec<f64>> = new_agents
        .par_iter()
        .enumerate()
        .map(|(k, a)| {
            existing
                .iter()
                .enumerate()
                .map(|(j, b)| sampled_phi(game, &a.params, &b.params, cfg, (n + k, j)))
                .collect()
        })
        .collect();
    let inner: Vec<Vec<f64>> = new_agents
        .iter()
        .enumerate()
        .map(|(k, a)| {
            new_agents
                .iter()
                .enumerate()
                .map(|(l, b)| {
                    if l > k {
                        sampled_phi(game, &a.params, &b.params, cfg, (n + k, n + l))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    eval.extended(&cross, &inner)
}
