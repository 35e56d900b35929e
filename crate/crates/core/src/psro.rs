//! Training loops: fixed-opponent optimization, self-play, and the PSRO family
//! (response to the Nash, to the uniform mixture, and to the rectified Nash).
//!
//! Populations only ever grow. Every oracle call is charged against the run's query
//! counter, and an optional budget stops a run before a call that would overrun it.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::GameDefinition;
use crate::gamescape::schur_hull_area;
use crate::harness::RunConfig;
use crate::metrics::{diversity_with, perf_from_matrix};
use crate::nash::{max_entropy_nash, NashMixture};
use crate::oracles::{MixtureObjective, OracleConfig, OracleOutcome};
use crate::types::{build_eval_matrix, extend_eval_matrix, splitmix, Agent, EvalConfig, EvalMatrix, Population};

/// Nash mass above this counts as support when choosing agents to train.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;
/// A new row this close (sup norm) to an earlier row is flagged as a duplicate.
pub const DUPLICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    SelfPlay,
    PsroN,
    PsroU,
    PsroRn,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::SelfPlay => "self_play",
            Self::PsroN => "psro_n",
            Self::PsroU => "psro_u",
            Self::PsroRn => "psro_rn",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "self_play" => Ok(Self::SelfPlay),
            "psro_n" => Ok(Self::PsroN),
            "psro_u" => Ok(Self::PsroU),
            "psro_rn" => Ok(Self::PsroRn),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Seed for the oracle call that trains from `parent` at `iteration`.
pub fn oracle_seed(run_seed: u64, iteration: usize, parent: usize) -> u64 {
    splitmix(run_seed ^ splitmix(((iteration as u64) << 32) | parent as u64))
}

fn single_opponent(game: &GameDefinition, w: &Agent) -> Result<MixtureObjective> {
    let pop = Population::new(game.id(), vec![w.clone()])?;
    MixtureObjective::new(game.clone(), &pop, vec![1.0], false)
}

/// Runs `t` oracle calls against the fixed objective `phi(., opponent)`. Returns the
/// final agent and the queries spent.
pub fn train_fixed(game: &GameDefinition, opponent: &Agent, init: &Agent, oracle: &OracleConfig, t: usize, seed: u64) -> Result<(Agent, u64)> {
    let obj = single_opponent(game, opponent)?;
    init.validate(game.as_ref())?;
    let mut v = init.clone();
    let mut queries = 0;
    for step in 0..t {
        let (out, used) = oracle.run(&v, &obj, oracle_seed(seed, step + 1, 0))?;
        queries += used;
        v.params = out.params;
    }
    Ok((v, queries))
}

/// Self-play from `init`: each iterate is trained against the previous one. Returns every
/// iterate `v_1..v_{t+1}` in order, plus the queries spent.
pub fn self_play(game: &GameDefinition, init: &Agent, oracle: &OracleConfig, t: usize, seed: u64) -> Result<(Population, u64)> {
    init.validate(game.as_ref())?;
    let mut agents = vec![init.clone()];
    let mut queries = 0;
    for step in 0..t {
        let last = agents.last().expect("population is never empty");
        let obj = single_opponent(game, last)?;
        let (out, used) = oracle.run(last, &obj, oracle_seed(seed, step + 1, step))?;
        queries += used;
        agents.push(Agent::new(game.id(), out.params, format!("sp{}", step + 1)));
    }
    Ok((Population::new(game.id(), agents)?, queries))
}

/// Everything a step needs besides the state.
#[derive(Clone)]
pub struct Trainer {
    pub game: GameDefinition,
    pub oracle: OracleConfig,
    pub eval: EvalConfig,
    /// Nash solver tolerance.
    pub tol: f64,
    pub support_threshold: f64,
    pub seed: u64,
    /// Total queries allowed across the run, counted against `PsroState::queries`.
    pub query_budget: Option<u64>,
}

impl Trainer {
    pub fn new(game: GameDefinition, oracle: OracleConfig, seed: u64) -> Self {
        Self {
            game,
            oracle,
            eval: EvalConfig::default(),
            tol: crate::nash::DEFAULT_TOL,
            support_threshold: SUPPORT_THRESHOLD,
            seed,
            query_budget: None,
        }
    }

    /// Oracle calls the remaining budget still pays for.
    fn affordable_calls(&self, used: u64) -> usize {
        match self.query_budget {
            None => usize::MAX,
            Some(b) => (b.saturating_sub(used) / self.oracle.queries_per_call().max(1)) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsroState {
    pub population: Population,
    pub eval: EvalMatrix,
    /// Maximum-entropy Nash of `eval`.
    pub nash: NashMixture,
    pub iteration: usize,
    pub queries: u64,
}

impl PsroState {
    pub fn new(trainer: &Trainer, population: Population) -> Result<Self> {
        let eval = build_eval_matrix(trainer.game.as_ref(), &population, &trainer.eval)?;
        let nash = max_entropy_nash(&eval, trainer.tol)?;
        Ok(Self {
            population,
            eval,
            nash,
            iteration: 0,
            queries: 0,
        })
    }

    /// Nash-supported agents, in index order.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.nash.support(threshold)
    }
}

/// What one step did, indexed by the agents it trained.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Index of the agent each oracle call started from.
    pub parents: Vec<usize>,
    pub start_values: Vec<f64>,
    pub end_values: Vec<f64>,
    pub improved: Vec<bool>,
    /// Whether the appended row nearly equals an earlier row.
    pub duplicate: Vec<bool>,
    /// Queries spent by this step alone.
    pub step_queries: u64,
    /// Every oracle call failed to improve by epsilon.
    pub converged: bool,
    /// The budget could not pay for every call this step wanted.
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone)]
pub struct Step {
    pub state: PsroState,
    pub record: StepRecord,
}

/// Trains from each parent against `obj`, appends the results, and re-solves.
fn advance(state: &PsroState, trainer: &Trainer, parents: &[usize], obj: &MixtureObjective) -> Result<Step> {
    let iteration = state.iteration + 1;
    let calls = trainer.affordable_calls(state.queries);
    let budget_exhausted = calls < parents.len();
    let parents = &parents[..parents.len().min(calls)];
    if parents.is_empty() {
        return Ok(Step {
            state: PsroState {
                iteration,
                ..state.clone()
            },
            record: StepRecord {
                budget_exhausted,
                ..Default::default()
            },
        });
    }

    let outcomes: Vec<(OracleOutcome, u64)> = parents
        .par_iter()
        .map(|&j| trainer.oracle.run(&state.population.agents[j], obj, oracle_seed(trainer.seed, iteration, j)))
        .collect::<Result<_>>()?;

    let game = trainer.game.as_ref();
    let new_agents: Vec<Agent> = parents
        .iter()
        .zip(&outcomes)
        .map(|(&j, (out, _))| Agent::new(game.id(), out.params.clone(), format!("t{iteration}.{j}")))
        .collect();
    let eval = extend_eval_matrix(game, &state.eval, &state.population.agents, &new_agents, &trainer.eval)?;
    let nash = max_entropy_nash(&eval, trainer.tol)?;
    let n = state.population.len();
    let duplicate = (n..eval.n())
        .map(|k| (0..k).any(|j| (0..eval.n()).all(|c| (eval.get(k, c) - eval.get(j, c)).abs() <= DUPLICATE_TOL)))
        .collect();
    let queries: u64 = outcomes.iter().map(|(_, q)| q).sum();
    let improved: Vec<bool> = outcomes.iter().map(|(o, _)| o.improved).collect();

    let mut population = state.population.clone();
    population.agents.extend(new_agents);
    Ok(Step {
        state: PsroState {
            population,
            eval,
            nash,
            iteration,
            queries: state.queries + queries,
        },
        record: StepRecord {
            parents: parents.to_vec(),
            start_values: outcomes.iter().map(|(o, _)| o.start_value).collect(),
            end_values: outcomes.iter().map(|(o, _)| o.end_value).collect(),
            converged: improved.iter().all(|x| !x),
            improved,
            duplicate,
            step_queries: queries,
            budget_exhausted,
        },
    })
}

fn latest(state: &PsroState) -> usize {
    state.population.len() - 1
}

/// One self-play step inside a population: the newest agent trains against itself.
pub fn self_play_step(state: &PsroState, trainer: &Trainer) -> Result<Step> {
    let last = latest(state);
    let obj = single_opponent(&trainer.game, &state.population.agents[last])?;
    advance(state, trainer, &[last], &obj)
}

/// Response to the Nash: the newest agent trains against the Nash mixture.
pub fn psro_step_nash(state: &PsroState, trainer: &Trainer) -> Result<Step> {
    let obj = MixtureObjective::new(trainer.game.clone(), &state.population, state.nash.probs.clone(), false)?;
    advance(state, trainer, &[latest(state)], &obj)
}

/// Response to the uniform mixture over the current population.
pub fn psro_step_uniform(state: &PsroState, trainer: &Trainer) -> Result<Step> {
    let n = state.population.len();
    let obj = MixtureObjective::new(trainer.game.clone(), &state.population, vec![1.0 / n as f64; n], false)?;
    advance(state, trainer, &[latest(state)], &obj)
}

/// Rectified objective `v -> sum_i p_i max(phi(v, w_i), 0)` for the state's Nash.
pub fn rectified_objective(state: &PsroState, game: &GameDefinition) -> Result<MixtureObjective> {
    MixtureObjective::new(game.clone(), &state.population, state.nash.probs.clone(), true)
}

/// Response to the rectified Nash: a copy of every supported agent trains against the
/// agents it beats or ties, weighted by the Nash. Parents stay in the population.
pub fn psro_step_rectified(state: &PsroState, trainer: &Trainer) -> Result<Step> {
    let obj = rectified_objective(state, &trainer.game)?;
    advance(state, trainer, &state.support(trainer.support_threshold), &obj)
}

pub fn step(algorithm: Algorithm, state: &PsroState, trainer: &Trainer) -> Result<Step> {
    match algorithm {
        Algorithm::SelfPlay => self_play_step(state, trainer),
        Algorithm::PsroN => psro_step_nash(state, trainer),
        Algorithm::PsroU => psro_step_uniform(state, trainer),
        Algorithm::PsroRn => psro_step_rectified(state, trainer),
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// The population after this iteration is the first `population_size` agents of the
    /// final population.
    pub population_size: usize,
    pub nash: Vec<f64>,
    pub diversity: f64,
    pub hull_area: f64,
    pub queries: u64,
    /// Value of the current population against the initial one.
    pub perf_vs_initial: f64,
    #[serde(flatten)]
    pub step: StepRecord,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PsroRunLog {
    pub records: Vec<IterationRecord>,
}

impl PsroRunLog {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in input.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self { records })
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

fn record(state: &PsroState, initial: usize, step: StepRecord, tol: f64) -> Result<IterationRecord> {
    let n = state.eval.n();
    let cross = state.eval.entries().columns(0, initial).into_owned();
    Ok(IterationRecord {
        iteration: state.iteration,
        population_size: n,
        nash: state.nash.probs.clone(),
        diversity: diversity_with(&state.eval, &state.nash.probs),
        hull_area: schur_hull_area(&state.eval, crate::gamescape::DEFAULT_RANK_TOL)?,
        queries: state.queries,
        perf_vs_initial: perf_from_matrix(&cross, tol)?.value,
        step,
    })
}

#[derive(Debug, Clone)]
pub struct PsroRun {
    pub log: PsroRunLog,
    pub state: PsroState,
}

fn at(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

/// Runs `trainer` from `init` for up to `iterations` steps, stopping early on convergence
/// or when the budget runs out.
pub fn run_from(algorithm: Algorithm, trainer: &Trainer, init: Population, iterations: usize) -> Result<PsroRun> {
    let mut state = PsroState::new(trainer, init).map_err(at(0))?;
    let initial = state.population.len();
    let mut log = PsroRunLog {
        records: vec![record(&state, initial, StepRecord::default(), trainer.tol).map_err(at(0))?],
    };
    for t in 1..=iterations {
        let Step { state: next, record: rec } = step(algorithm, &state, trainer).map_err(at(t))?;
        let stop = rec.converged || rec.budget_exhausted;
        if rec.parents.is_empty() {
            // nothing trained; keep the log strictly increasing only with real iterations
            if let Some(last) = log.records.last_mut() {
                last.step.budget_exhausted = true;
            }
            break;
        }
        state = next;
        log.records.push(record(&state, initial, rec, trainer.tol).map_err(at(t))?);
        if stop {
            break;
        }
    }
    Ok(PsroRun { log, state })
}

/// Builds the game, trainer and initial population from `config` and runs it.
pub fn run_psro(config: &RunConfig) -> Result<PsroRun> {
    let trainer = config.trainer()?;
    let init = config.init.build(&trainer.game, config.seed)?;
    run_from(config.algorithm, &trainer, init, config.iterations)
}
