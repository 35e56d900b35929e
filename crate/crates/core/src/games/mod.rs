//! Concrete functional-form games and the registry that resolves game ids.
//!
//! Every game is a pure antisymmetric payoff `phi(v, w) = -phi(w, v)` over real parameter
//! vectors. Ids follow the registry grammar:
//!
//! | id                                  | agent params                         |
//! |-------------------------------------|--------------------------------------|
//! | `disc`, `disc:<k>`                  | point in the plane (ball `|x|^2<=k`) |
//! | `symplectic:<d>`                    | vector in `R^{2d}`                   |
//! | `elo`, `elo:<alpha>`                | scalar rating                        |
//! | `transitive`                        | scalar rating, `phi = f(v) - f(w)`   |
//! | `blotto:<a>:<c>`                    | `a` allocation logits                |
//! | `lotto:<k>:<customer-file>`         | `k` mass logits then `2k` coordinates|
//! | `lotto:<k>:random:<c>:<seed>`       | as above, customers sampled by seed  |

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

mod blotto;
mod cycles;
mod disc;
mod lotto;
mod transitive;

pub use blotto::{blotto_discretize, blotto_phi, blotto_phi_allocations, BlottoConfig, BlottoGame};
pub use cycles::{long_cycle_matrix, rps_embedding, unit_rps};
pub use disc::{disc_phi, symplectic_phi, DeformedSymplectic, DeformedTerm, DiscGame, SymplecticGame};
pub use lotto::{
    lotto_phi, lotto_project_width, lotto_width, read_customers_csv, sample_customers, write_customers_csv,
    LottoAgentView, LottoConfig, LottoGame,
};
pub use transitive::{elo_game, sigmoid, EloGame, TransitiveGame};

/// A symmetric zero-sum functional-form game.
pub trait Game: Send + Sync {
    fn id(&self) -> &str;

    fn param_dim(&self) -> usize;

    /// Payoff of `v` against `w`; antisymmetric in its arguments.
    fn phi(&self, v: &[f64], w: &[f64]) -> f64;

    /// Seeded payoff for stochastic games. Deterministic games ignore the seed.
    fn phi_seeded(&self, v: &[f64], w: &[f64], _seed: u64) -> f64 {
        self.phi(v, w)
    }

    /// Analytic gradient of `phi(., w)` at `v`, if the game provides one.
    fn grad(&self, _v: &[f64], _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Maps parameters back onto the feasible agent set after an unconstrained update.
    fn project(&self, _params: &mut [f64]) -> Result<()> {
        Ok(())
    }

    /// Draws a random valid agent.
    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

pub type GameDefinition = Arc<dyn Game>;

fn parse_num<T: std::str::FromStr>(id: &str, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::UnknownGame(id.to_string()))
}

/// Resolves a registry id into a game.
pub fn game_from_id(id: &str) -> Result<GameDefinition> {
    let mut parts = id.splitn(3, ':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let game: GameDefinition = match (head, rest.as_slice()) {
        ("disc", []) => Arc::new(DiscGame::unbounded()),
        ("disc", [k]) => Arc::new(DiscGame::ball(parse_num(id, k)?)?),
        ("symplectic", [d]) => Arc::new(SymplecticGame::new(parse_num(id, d)?)?),
        ("elo", []) => Arc::new(EloGame::new(1.0)?),
        ("elo", [alpha]) => Arc::new(EloGame::new(parse_num(id, alpha)?)?),
        ("transitive", []) => Arc::new(TransitiveGame),
        ("blotto", [a, c]) => Arc::new(BlottoGame::new(BlottoConfig::new(parse_num(id, a)?, parse_num(id, c)?)?)),
        ("lotto", [k, source]) => {
            let k: usize = parse_num(id, k)?;
            let customers = match source.strip_prefix("random:") {
                Some(spec) => {
                    let (c, seed) = spec.split_once(':').ok_or_else(|| Error::UnknownGame(id.to_string()))?;
                    sample_customers(parse_num(id, c)?, parse_num(id, seed)?)?
                }
                None => read_customers_csv(std::fs::File::open(source)?)?,
            };
            Arc::new(LottoGame::with_id(id, LottoConfig::new(customers, k)?))
        }
        _ => return Err(Error::UnknownGame(id.to_string())),
    };
    Ok(game)
}
