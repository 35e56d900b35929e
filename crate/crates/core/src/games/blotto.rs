use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Game;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlottoConfig {
    pub areas: usize,
    pub coins: u32,
}

impl BlottoConfig {
    pub fn new(areas: usize, coins: u32) -> Result<Self> {
        if areas == 0 || coins == 0 {
            return Err(Error::InvalidArgument(format!(
                "blotto needs at least one area and one coin, got a={areas} c={coins}"
            )));
        }
        Ok(Self { areas, coins })
    }
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Maps logits to an integer allocation summing to `coins`.
///
/// `softmax(logits) * coins` is floored, then the leftover coins go one each to the
/// largest fractional parts, ties going to the lowest index.
pub fn blotto_discretize(logits: &[f64], coins: u32) -> Vec<u32> {
    if logits.is_empty() {
        return Vec::new();
    }
    let shares: Vec<f64> = softmax(logits).into_iter().map(|p| p * coins as f64).collect();
    let mut alloc: Vec<u32> = shares.iter().map(|s| s.floor() as u32).collect();
    let assigned: u32 = alloc.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    let frac = |i: usize| shares[i] - shares[i].floor();
    // stable sort keeps lower indices first among equal remainders
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)));
    for &i in order.iter().take(coins.saturating_sub(assigned) as usize) {
        alloc[i] += 1;
    }
    alloc
}

/// Area-averaged score of allocation `x` against `y`: `(areas won - areas lost) / areas`.
pub fn blotto_phi_allocations(x: &[u32], y: &[u32]) -> f64 {
    let net: i64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| match a.cmp(b) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
        })
        .sum();
    net as f64 / x.len() as f64
}

pub fn blotto_phi(v: &[f64], w: &[f64], cfg: &BlottoConfig) -> f64 {
    blotto_phi_allocations(&blotto_discretize(v, cfg.coins), &blotto_discretize(w, cfg.coins))
}

#[derive(Debug, Clone)]
pub struct BlottoGame {
    id: String,
    cfg: BlottoConfig,
}

impl BlottoGame {
    pub fn new(cfg: BlottoConfig) -> Self {
        Self {
            id: format!("blotto:{}:{}", cfg.areas, cfg.coins),
            cfg,
        }
    }

    pub fn config(&self) -> &BlottoConfig {
        &self.cfg
    }
}

impl Game for BlottoGame {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        self.cfg.areas
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        blotto_phi(v, w, &self.cfg)
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.cfg.areas).map(|_| StandardNormal.sample(rng)).collect()
    }
}
