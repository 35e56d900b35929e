use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{Agent, EvalMatrix, Population};

/// Rock, paper and scissors as disc-game agents at angles 0, 2pi/3, 4pi/3.
///
/// The radius `eps * sqrt(2/sqrt(3))` makes every off-diagonal payoff exactly `±eps^2`:
/// two agents at radius `r` and angle gap `2pi/3` score `r^2 sin(2pi/3)`.
pub fn rps_embedding(eps: f64) -> Result<Population> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps must lie in [0, 1], got {eps}")));
    }
    let radius = eps * (2.0 / 3f64.sqrt()).sqrt();
    let agents = ["rock", "paper", "scissors"]
        .iter()
        .enumerate()
        .map(|(k, tag)| {
            let angle = 2.0 * PI * k as f64 / 3.0;
            Agent::new("disc", vec![radius * angle.cos(), radius * angle.sin()], *tag)
        })
        .collect();
    let mut pop = Population::new("disc", agents)?;
    pop.meta.insert("construction".into(), format!("rps-embedding eps={eps}"));
    Ok(pop)
}

/// Unit rock-paper-scissors: rock beats scissors, paper beats rock, scissors beats paper,
/// written with row 0 = rock beating row 1.
pub fn unit_rps() -> EvalMatrix {
    long_cycle_matrix(3).expect("n = 3 is valid")
}

/// Evaluation matrix of `n` agents in a cycle where agent `i` beats agent `i+1 (mod n)`.
pub fn long_cycle_matrix(n: usize) -> Result<EvalMatrix> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("a long cycle needs n >= 3, got {n}")));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        a[(i, j)] = 1.0;
        a[(j, i)] = -1.0;
    }
    EvalMatrix::new(a, 0.0)
}
