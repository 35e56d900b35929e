//! Differentiable Lotto: agents spread unit mass over `k` servers in the plane and
//! customers are softly assigned to the nearest servers of both agents.
//!
//! Agent parameters are `k` mass logits followed by the `2k` server coordinates
//! `(x_1, y_1, ..., x_k, y_k)`. Masses are the softmax of the logits.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::blotto::softmax;
use super::Game;
use crate::error::{Error, Result};
use crate::types::fmt_f64;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct LottoConfig {
    pub customers: Vec<Point>,
    pub servers_per_agent: usize,
}

impl LottoConfig {
    pub fn new(customers: Vec<Point>, servers_per_agent: usize) -> Result<Self> {
        if customers.is_empty() {
            return Err(Error::InvalidArgument("lotto needs at least one customer".into()));
        }
        if servers_per_agent == 0 {
            return Err(Error::InvalidArgument("lotto agents need at least one server".into()));
        }
        if customers.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("customer coordinate".into()));
        }
        Ok(Self {
            customers,
            servers_per_agent,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LottoAgentView {
    pub masses: Vec<f64>,
    pub positions: Vec<Point>,
}

impl LottoAgentView {
    pub fn new(masses: Vec<f64>, positions: Vec<Point>) -> Result<Self> {
        if masses.len() != positions.len() || masses.is_empty() {
            return Err(Error::Dimension("masses and positions must be non-empty and of equal length".into()));
        }
        let total: f64 = masses.iter().sum();
        if masses.iter().any(|&m| m < 0.0 || !m.is_finite()) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("masses must be a distribution (sum {total})")));
        }
        Ok(Self { masses, positions })
    }

    pub fn from_params(params: &[f64], k: usize) -> Self {
        Self {
            masses: softmax(&params[..k]),
            positions: params[k..3 * k].chunks_exact(2).map(|c| [c[0], c[1]]).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.masses.len()
    }

    pub fn barycenter(&self) -> Point {
        self.masses
            .iter()
            .zip(&self.positions)
            .fold([0.0, 0.0], |acc, (m, p)| [acc[0] + m * p[0], acc[1] + m * p[1]])
    }
}

/// Mass-weighted mean distance of the servers from their barycenter.
pub fn lotto_width(a: &LottoAgentView) -> f64 {
    let c = a.barycenter();
    a.masses
        .iter()
        .zip(&a.positions)
        .map(|(m, p)| m * (p[0] - c[0]).hypot(p[1] - c[1]))
        .sum()
}

/// Rescales server positions about the barycenter so the agent has width one.
pub fn lotto_project_width(a: &LottoAgentView) -> Result<LottoAgentView> {
    let width = lotto_width(a);
    if !(width > 1e-12) {
        return Err(Error::Degenerate(format!("lotto agent has width {width}; servers coincide")));
    }
    let c = a.barycenter();
    let positions = a
        .positions
        .iter()
        .map(|p| [c[0] + (p[0] - c[0]) / width, c[1] + (p[1] - c[1]) / width])
        .collect();
    Ok(LottoAgentView {
        masses: a.masses.clone(),
        positions,
    })
}

fn sq_dist(a: &Point, b: &Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Joint softmax over `-|c - s|^2` for all servers of both agents.
fn assignment(c: &Point, a: &LottoAgentView, b: &LottoAgentView) -> Vec<f64> {
    let logits: Vec<f64> = a
        .positions
        .iter()
        .chain(&b.positions)
        .map(|s| -sq_dist(c, s))
        .collect();
    softmax(&logits)
}

/// Payoff `sum_{i,j} (p_j v_ij - q_j w_ij)`.
pub fn lotto_phi(a: &LottoAgentView, b: &LottoAgentView, cfg: &LottoConfig) -> f64 {
    let k = a.k();
    cfg.customers
        .iter()
        .map(|c| {
            let s = assignment(c, a, b);
            let mine: f64 = a.masses.iter().zip(&s[..k]).map(|(p, v)| p * v).sum();
            let theirs: f64 = b.masses.iter().zip(&s[k..]).map(|(q, w)| q * w).sum();
            mine - theirs
        })
        .sum()
}

/// Gradient of `lotto_phi(a, b)` with respect to `a`'s raw parameters (logits, coordinates).
fn lotto_grad(params: &[f64], other: &[f64], cfg: &LottoConfig) -> Vec<f64> {
    let k = cfg.servers_per_agent;
    let a = LottoAgentView::from_params(params, k);
    let b = LottoAgentView::from_params(other, k);
    let mut g = vec![0.0; 3 * k];
    for c in &cfg.customers {
        let s = assignment(c, &a, &b);
        let weights: Vec<f64> = a.masses.iter().copied().chain(b.masses.iter().map(|q| -q)).collect();
        let phi_i: f64 = weights.iter().zip(&s).map(|(u, x)| u * x).sum();
        let mean_share: f64 = a.masses.iter().zip(&s[..k]).map(|(p, v)| p * v).sum();
        for l in 0..k {
            g[l] += a.masses[l] * (s[l] - mean_share);
            // d phi_i / d z_l = s_l (p_l - phi_i) and d z_l / d x_l = -2 (x_l - c)
            let coef = -2.0 * s[l] * (a.masses[l] - phi_i);
            g[k + 2 * l] += coef * (a.positions[l][0] - c[0]);
            g[k + 2 * l + 1] += coef * (a.positions[l][1] - c[1]);
        }
    }
    g
}

/// `c` customers drawn uniformly from `[-1, 1]^2`, reproducible from `seed`.
pub fn sample_customers(c: usize, seed: u64) -> Result<Vec<Point>> {
    if c == 0 {
        return Err(Error::InvalidArgument("need at least one customer".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..c)
        .map(|_| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
        .collect())
}

pub fn write_customers_csv<W: Write>(points: &[Point], out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for p in points {
        wtr.write_record([fmt_f64(p[0]), fmt_f64(p[1])])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_customers_csv<R: Read>(input: R) -> Result<Vec<Point>> {
    let m = crate::types::read_matrix_csv(input)?;
    if m.ncols() != 2 {
        return Err(Error::Dimension(format!("customer file needs 2 columns, got {}", m.ncols())));
    }
    Ok((0..m.nrows()).map(|i| [m[(i, 0)], m[(i, 1)]]).collect())
}

#[derive(Debug, Clone)]
pub struct LottoGame {
    id: String,
    cfg: LottoConfig,
}

impl LottoGame {
    pub fn with_id(id: impl Into<String>, cfg: LottoConfig) -> Self {
        Self { id: id.into(), cfg }
    }

    pub fn config(&self) -> &LottoConfig {
        &self.cfg
    }
}

impl Game for LottoGame {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        3 * self.cfg.servers_per_agent
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        let k = self.cfg.servers_per_agent;
        lotto_phi(
            &LottoAgentView::from_params(v, k),
            &LottoAgentView::from_params(w, k),
            &self.cfg,
        )
    }

    fn grad(&self, v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(lotto_grad(v, w, &self.cfg))
    }

    fn project(&self, params: &mut [f64]) -> Result<()> {
        let k = self.cfg.servers_per_agent;
        let projected = lotto_project_width(&LottoAgentView::from_params(params, k))?;
        for (slot, p) in params[k..].chunks_exact_mut(2).zip(&projected.positions) {
            slot.copy_from_slice(p);
        }
        Ok(())
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = self.cfg.servers_per_agent;
        loop {
            let mut p: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
            p.extend((0..2 * k).map(|_| rng.random_range(-1.0..=1.0)));
            if k == 1 || self.project(&mut p).is_ok() {
                return p;
            }
        }
    }
}
