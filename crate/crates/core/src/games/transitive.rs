use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Game;
use crate::error::{Error, Result};
use crate::types::EvalMatrix;

/// Logistic function `1 / (1 + exp(-alpha x))`.
pub fn sigmoid(x: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + (-alpha * x).exp())
}

/// `sigmoid(x) - 1/2`, written as `tanh(alpha x / 2) / 2` so that it is exactly odd.
fn centered_sigmoid(x: f64, alpha: f64) -> f64 {
    0.5 * (0.5 * alpha * x).tanh()
}

/// Elo evaluation matrix `A[i][j] = sigmoid(f_i - f_j) - 1/2`.
pub fn elo_game(ratings: &[f64], alpha: f64) -> Result<EvalMatrix> {
    if ratings.iter().any(|r| !r.is_finite()) {
        return Err(Error::NonFinite("Elo rating".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let n = ratings.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let x = centered_sigmoid(ratings[i] - ratings[j], alpha);
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    EvalMatrix::new(a, 0.0)
}

/// Monotonic game on scalar ratings with Elo's logistic link.
#[derive(Debug, Clone)]
pub struct EloGame {
    id: String,
    alpha: f64,
}

impl EloGame {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let id = if alpha == 1.0 { "elo".to_string() } else { format!("elo:{alpha}") };
        Ok(Self { id, alpha })
    }
}

impl Game for EloGame {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        centered_sigmoid(v[0] - w[0], self.alpha)
    }

    fn grad(&self, v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        let s = sigmoid(v[0] - w[0], self.alpha);
        Some(vec![self.alpha * s * (1.0 - s)])
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random_range(-1.0..=1.0)]
    }
}

/// Purely transitive game `phi(v, w) = f(v) - f(w)` with `f` the scalar parameter.
#[derive(Debug, Clone, Copy)]
pub struct TransitiveGame;

impl Game for TransitiveGame {
    fn id(&self) -> &str {
        "transitive"
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        v[0] - w[0]
    }

    fn grad(&self, _v: &[f64], _w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random_range(-1.0..=1.0)]
    }
}
