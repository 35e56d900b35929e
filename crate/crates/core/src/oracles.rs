//! Approximate best-response oracles over weighted mixtures of opponents.
//!
//! Every objective or gradient evaluation counts as one oracle query.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameDefinition;
use crate::types::{Agent, Population};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_STEPS: usize = 50;
pub const FD_STEP: f64 = 1e-5;

/// `v -> sum_i weights[i] * phi(v, w_i)`, optionally with each payoff clamped at zero.
#[derive(Clone)]
pub struct MixtureObjective {
    game: GameDefinition,
    opponents: Vec<Vec<f64>>,
    weights: Vec<f64>,
    rectified: bool,
}

impl std::fmt::Debug for MixtureObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixtureObjective")
            .field("game", &self.game.id())
            .field("weights", &self.weights)
            .field("rectified", &self.rectified)
            .finish()
    }
}

pub fn mixture_objective(pop: &Population, weights: &[f64], rectified: bool, game: GameDefinition) -> Result<MixtureObjective> {
    MixtureObjective::new(game, pop, weights.to_vec(), rectified)
}

impl MixtureObjective {
    pub fn new(game: GameDefinition, pop: &Population, weights: Vec<f64>, rectified: bool) -> Result<Self> {
        if weights.len() != pop.len() {
            return Err(Error::Dimension(format!("{} weights for {} opponents", weights.len(), pop.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument(format!("mixture weight {w} is not a nonnegative number")));
        }
        if !rectified && (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("unrectified mixture weights must sum to one".into()));
        }
        if pop.game_id != game.id() {
            return Err(Error::GameMismatch(pop.game_id.clone(), game.id().to_string()));
        }
        pop.validate(game.as_ref())?;
        Ok(Self {
            opponents: pop.agents.iter().map(|a| a.params.clone()).collect(),
            game,
            weights,
            rectified,
        })
    }

    pub fn game(&self) -> &GameDefinition {
        &self.game
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_rectified(&self) -> bool {
        self.rectified
    }

    fn terms(&self) -> impl Iterator<Item = (f64, &Vec<f64>)> {
        self.weights.iter().copied().zip(&self.opponents).filter(|(w, _)| *w > 0.0)
    }

    pub fn evaluate(&self, v: &[f64]) -> f64 {
        self.terms()
            .map(|(w, o)| {
                let x = self.game.phi(v, o);
                w * if self.rectified { x.max(0.0) } else { x }
            })
            .sum()
    }

    /// Analytic gradient when the game provides one, central differences otherwise.
    /// Rectified terms with `phi < 0` contribute nothing; a tie takes the `x` branch of the
    /// rectifier, so an agent facing only itself still gets the self-play direction.
    pub fn gradient(&self, v: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; v.len()];
        for (w, o) in self.terms() {
            if self.rectified && self.game.phi(v, o) < 0.0 {
                continue;
            }
            let g = self.game.grad(v, o).unwrap_or_else(|| central_difference(|x| self.game.phi(x, o), v));
            total.iter_mut().zip(g).for_each(|(t, x)| *t += w * x);
        }
        total
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, v: &[f64]) -> Vec<f64> {
    let mut x = v.to_vec();
    (0..v.len())
        .map(|k| {
            let orig = x[k];
            x[k] = orig + FD_STEP;
            let up = f(&x);
            x[k] = orig - FD_STEP;
            let down = f(&x);
            x[k] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBudget {
    pub queries_used: u64,
    pub step_count: usize,
    pub step_size: f64,
    pub epsilon: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            queries_used: 0,
            step_count: DEFAULT_STEPS,
            step_size: DEFAULT_LEARNING_RATE,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl OracleBudget {
    fn charge(&mut self, queries: u64) {
        self.queries_used += queries;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub params: Vec<f64>,
    pub start_value: f64,
    pub end_value: f64,
    /// Whether the objective rose by more than the budget's epsilon.
    pub improved: bool,
}

/// Projected gradient ascent with a fixed step size.
pub fn gradient_ascent_oracle(v: &Agent, obj: &MixtureObjective, budget: &mut OracleBudget) -> Result<OracleOutcome> {
    let game = obj.game();
    v.validate(game.as_ref())?;
    let mut x = v.params.clone();
    let start_value = obj.evaluate(&x);
    budget.charge(1);
    for _ in 0..budget.step_count {
        let g = obj.gradient(&x);
        budget.charge(1);
        if g.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("oracle gradient".into()));
        }
        x.iter_mut().zip(&g).for_each(|(p, d)| *p += budget.step_size * d);
        game.project(&mut x)?;
    }
    let end_value = obj.evaluate(&x);
    budget.charge(1);
    Ok(OracleOutcome {
        improved: end_value > start_value + budget.epsilon,
        params: x,
        start_value,
        end_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsSettings {
    pub offspring: usize,
    pub sigma0: f64,
    /// Generations without strict improvement before the mutation scale halves.
    pub patience: usize,
}

impl Default for EsSettings {
    fn default() -> Self {
        Self {
            offspring: 8,
            sigma0: 0.5,
            patience: 10,
        }
    }
}

/// (1+lambda) evolution strategy with isotropic Gaussian mutations; ties replace the
/// parent. Runs `budget.step_count` generations.
pub fn evolutionary_oracle(v: &Agent, obj: &MixtureObjective, budget: &mut OracleBudget, es: &EsSettings, seed: u64) -> Result<OracleOutcome> {
    let game = obj.game();
    v.validate(game.as_ref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parent = v.params.clone();
    let start_value = obj.evaluate(&parent);
    budget.charge(1);
    let mut best = start_value;
    let mut sigma = es.sigma0;
    let mut stagnant = 0;
    for _ in 0..budget.step_count {
        let mut gen_best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..es.offspring {
            let mut child: Vec<f64> = parent
                .iter()
                .map(|p| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    p + sigma * z
                })
                .collect();
            game.project(&mut child)?;
            let f = obj.evaluate(&child);
            budget.charge(1);
            if gen_best.as_ref().is_none_or(|(b, _)| f > *b) {
                gen_best = Some((f, child));
            }
        }
        if let Some((f, child)) = gen_best {
            if f > best {
                stagnant = 0;
            } else {
                stagnant += 1;
            }
            if f >= best {
                best = f;
                parent = child;
            }
        }
        if stagnant >= es.patience {
            sigma *= 0.5;
            stagnant = 0;
        }
    }
    Ok(OracleOutcome {
        improved: best > start_value + budget.epsilon,
        params: parent,
        start_value,
        end_value: best,
    })
}

/// Oracle choice and hyperparameters as they appear in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    Gradient {
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Evolution {
        #[serde(default = "default_generations")]
        generations: usize,
        #[serde(default = "default_offspring")]
        offspring: usize,
        #[serde(default = "default_sigma0")]
        sigma0: f64,
        #[serde(default = "default_patience")]
        patience: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_lr() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn default_steps() -> usize {
    DEFAULT_STEPS
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_generations() -> usize {
    DEFAULT_STEPS
}
fn default_offspring() -> usize {
    EsSettings::default().offspring
}
fn default_sigma0() -> f64 {
    EsSettings::default().sigma0
}
fn default_patience() -> usize {
    EsSettings::default().patience
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self::Gradient {
            learning_rate: DEFAULT_LEARNING_RATE,
            steps: DEFAULT_STEPS,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl OracleConfig {
    pub fn evolution() -> Self {
        Self::Evolution {
            generations: DEFAULT_STEPS,
            offspring: default_offspring(),
            sigma0: default_sigma0(),
            patience: default_patience(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Self::Gradient { epsilon, .. } | Self::Evolution { epsilon, .. } => *epsilon,
        }
    }

    /// Queries one call spends.
    pub fn queries_per_call(&self) -> u64 {
        match self {
            Self::Gradient { steps, .. } => *steps as u64 + 2,
            Self::Evolution { generations, offspring, .. } => (*generations * *offspring) as u64 + 1,
        }
    }

    pub fn budget(&self) -> OracleBudget {
        match self {
            Self::Gradient { learning_rate, steps, epsilon } => OracleBudget {
                queries_used: 0,
                step_count: *steps,
                step_size: *learning_rate,
                epsilon: *epsilon,
            },
            Self::Evolution { generations, sigma0, epsilon, .. } => OracleBudget {
                queries_used: 0,
                step_count: *generations,
                step_size: *sigma0,
                epsilon: *epsilon,
            },
        }
    }

    /// Runs the configured oracle from `v`; `seed` drives stochastic oracles.
    pub fn run(&self, v: &Agent, obj: &MixtureObjective, seed: u64) -> Result<(OracleOutcome, u64)> {
        let mut budget = self.budget();
        let outcome = match self {
            Self::Gradient { .. } => gradient_ascent_oracle(v, obj, &mut budget)?,
            Self::Evolution { offspring, sigma0, patience, .. } => {
                let es = EsSettings {
                    offspring: *offspring,
                    sigma0: *sigma0,
                    patience: *patience,
                };
                evolutionary_oracle(v, obj, &mut budget, &es, seed)?
            }
        };
        Ok((outcome, budget.queries_used))
    }
}
