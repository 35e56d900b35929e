//! Open-ended learning in symmetric zero-sum functional-form games.
//!
//! Game definitions, exact Nash solving, population metrics, Hodge decomposition,
//! gamescape analytics, best-response oracles and the PSRO training family.

pub mod error;
pub mod games;
pub mod gamescape;
pub mod hodge;
pub mod lp;
pub mod metrics;
pub mod nash;
pub mod harness;
pub mod oracles;
pub mod psro;
pub mod types;

pub use error::{Error, Result};
pub use games::{game_from_id, Game, GameDefinition};
pub use types::{build_eval_matrix, Agent, EvalConfig, EvalMatrix, Population};
