//! Run configs, population files and the command implementations behind the CLI.
//!
//! Matrices and metrics are written as CSV, reports as JSON, run logs as JSON lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{game_from_id, rps_embedding, GameDefinition};
use crate::gamescape::{embed, is_redundant, numerical_rank, schur_hull_area, synth_payoff, write_points_csv, EmbeddingMethod, EmbeddingSidecar, SynthSpec};
use crate::hodge::hodge_decompose;
use crate::metrics::{diversity_with, relative_performance};
use crate::nash::{max_entropy_nash, DEFAULT_TOL};
use crate::oracles::OracleConfig;
use crate::psro::{run_psro, Algorithm, PsroRun, Trainer, SUPPORT_THRESHOLD};
use crate::types::{build_eval_matrix, cross_eval_matrix, fmt_f64, write_matrix_csv, Agent, EvalConfig, EvalMatrix, Population};

pub const POPULATION_FORMAT_VERSION: u32 = 1;

/// How a run's first population is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// `count` agents drawn from the game's sampler, seeded by the run seed.
    Random {
        #[serde(default = "one")]
        count: usize,
    },
    Params {
        agents: Vec<Vec<f64>>,
    },
    /// Rock, paper and scissors in the disc game.
    Rps {
        #[serde(default = "unit")]
        eps: f64,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl Default for InitSpec {
    fn default() -> Self {
        Self::Random { count: 1 }
    }
}

impl InitSpec {
    pub fn build(&self, game: &GameDefinition, seed: u64) -> Result<Population> {
        let pop = match self {
            Self::Random { count } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let params = (0..*count).map(|_| game.random_params(&mut rng)).collect();
                Population::from_params(game.id(), params)?
            }
            Self::Params { agents } => Population::from_params(game.id(), agents.clone())?,
            Self::Rps { eps } => rps_embedding(*eps)?,
            Self::File { path } => PopulationFile::read(path)?.into_population()?,
        };
        pop.validate(game.as_ref())?;
        Ok(pop)
    }
}

/// A training run as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub game: String,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub query_budget: Option<u64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_threshold")]
    pub support_threshold: f64,
    /// Artifact directory; the CLI's `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_threshold() -> f64 {
    SUPPORT_THRESHOLD
}

impl RunConfig {
    pub fn new(game: impl Into<String>, algorithm: Algorithm, iterations: usize, seed: u64) -> Self {
        Self {
            game: game.into(),
            algorithm,
            oracle: OracleConfig::default(),
            iterations,
            seed,
            eval: EvalConfig::default(),
            init: InitSpec::default(),
            query_budget: None,
            tol: DEFAULT_TOL,
            support_threshold: SUPPORT_THRESHOLD,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn trainer(&self) -> Result<Trainer> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        let game = game_from_id(&self.game).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Trainer {
            game,
            oracle: self.oracle.clone(),
            eval: self.eval,
            tol: self.tol,
            support_threshold: self.support_threshold,
            seed: self.seed,
            query_budget: self.query_budget,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub tag: String,
    pub params: Vec<f64>,
}

/// On-disk population document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationFile {
    pub format_version: u32,
    pub game_id: String,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

impl PopulationFile {
    pub fn from_population(pop: &Population) -> Self {
        Self {
            format_version: POPULATION_FORMAT_VERSION,
            game_id: pop.game_id.clone(),
            agents: pop
                .agents
                .iter()
                .map(|a| AgentEntry {
                    tag: a.tag.clone(),
                    params: a.params.clone(),
                })
                .collect(),
            meta: pop.meta.clone(),
        }
    }

    pub fn into_population(self) -> Result<Population> {
        if self.format_version != POPULATION_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported population format version {}", self.format_version)));
        }
        let agents = self
            .agents
            .into_iter()
            .map(|a| Agent::new(self.game_id.clone(), a.params, a.tag))
            .collect();
        let mut pop = Population::new(self.game_id, agents)?;
        pop.meta = self.meta;
        Ok(pop)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }
}

pub fn read_population(path: &Path) -> Result<Population> {
    PopulationFile::read(path)?.into_population()
}

pub fn write_population(pop: &Population, path: &Path) -> Result<()> {
    PopulationFile::from_population(pop).write(path)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub const METRICS_HEADER: &str = "iteration,population_size,diversity,hull_area,queries,perf_vs_initial";

/// Runs `config` and writes into `out`:
///
/// - `config.json`: the resolved config
/// - `run_log.jsonl`: one record per iteration
/// - `metrics.csv`: iteration, population size, diversity, hull area, queries, performance
///   against the initial population
/// - `population.json`: the final population
/// - `eval/iter_<t>.csv`: the evaluation matrix after each iteration
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<PsroRun> {
    let run = run_psro(config)?;
    std::fs::create_dir_all(out.join("eval"))?;
    write_json(config, &out.join("config.json"))?;
    run.log.write_jsonl(BufWriter::new(File::create(out.join("run_log.jsonl"))?))?;
    let mut metrics = BufWriter::new(File::create(out.join("metrics.csv"))?);
    writeln!(metrics, "{METRICS_HEADER}")?;
    for r in &run.log.records {
        writeln!(
            metrics,
            "{},{},{},{},{},{}",
            r.iteration,
            r.population_size,
            fmt_f64(r.diversity),
            fmt_f64(r.hull_area),
            r.queries,
            fmt_f64(r.perf_vs_initial)
        )?;
        let idx: Vec<usize> = (0..r.population_size).collect();
        let sub = run.state.eval.submatrix(&idx);
        sub.write_csv(File::create(out.join("eval").join(format!("iter_{:04}.csv", r.iteration)))?)?;
    }
    metrics.flush()?;
    write_population(&run.state.population, &out.join("population.json"))?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub game_id: String,
    pub value: f64,
    pub row_mixture: Vec<f64>,
    pub col_mixture: Vec<f64>,
    /// `phi(v, w)` for `v` in the first population and `w` in the second.
    pub cross_matrix: Vec<Vec<f64>>,
}

pub fn cmd_compare(p: &Population, q: &Population, eval: &EvalConfig, tol: f64) -> Result<CompareReport> {
    if p.game_id != q.game_id {
        return Err(Error::GameMismatch(p.game_id.clone(), q.game_id.clone()));
    }
    let game = game_from_id(&p.game_id)?;
    let perf = relative_performance(p, q, game.as_ref(), eval, tol)?;
    let cross = cross_eval_matrix(game.as_ref(), p, q, eval)?;
    Ok(CompareReport {
        game_id: p.game_id.clone(),
        value: perf.value,
        row_mixture: perf.row_mixture,
        col_mixture: perf.col_mixture,
        cross_matrix: cross.row_iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub n: usize,
    pub nash: Vec<f64>,
    pub nash_entropy: f64,
    pub diversity: f64,
    pub rank: usize,
    pub transitive_norm: f64,
    pub cyclic_norm: f64,
    pub ratings: Vec<f64>,
    pub hull_area: f64,
    pub embedding: EmbeddingSidecar,
    pub redundant: Vec<bool>,
}

/// Loads a matrix CSV, or builds the evaluation matrix of a population file (`.json`).
pub fn load_matrix(path: &Path, eval: &EvalConfig, tol: f64) -> Result<EvalMatrix> {
    if path.extension().is_some_and(|e| e == "json") {
        let pop = read_population(path)?;
        let game = game_from_id(&pop.game_id)?;
        build_eval_matrix(game.as_ref(), &pop, eval)
    } else {
        EvalMatrix::read_csv(File::open(path)?, tol)
    }
}

/// Nash, diversity, rank, Hodge split, a 2-D embedding, hull area and per-agent
/// redundancy of `a`. With `out`, also writes `analysis.json`, `embedding.csv`,
/// `embedding.json` and the Hodge parts.
pub fn cmd_analyze(a: &EvalMatrix, method: EmbeddingMethod, tol: f64, out: Option<&Path>) -> Result<AnalyzeReport> {
    let n = a.n();
    let nash = max_entropy_nash(a, tol)?;
    let hodge = hodge_decompose(a);
    let dims = match method {
        EmbeddingMethod::Schur => 2,
        _ => n.min(2),
    };
    let embedding = embed(a, method, dims, crate::gamescape::DEFAULT_RANK_TOL)?;
    let redundant = (0..n).map(|i| is_redundant(a, i, tol)).collect::<Result<Vec<_>>>()?;
    let report = AnalyzeReport {
        n,
        nash_entropy: nash.entropy,
        diversity: diversity_with(a, &nash.probs),
        nash: nash.probs,
        rank: numerical_rank(a, crate::gamescape::DEFAULT_RANK_TOL)?,
        transitive_norm: hodge.transitive_norm(),
        cyclic_norm: hodge.cyclic_norm(),
        ratings: hodge.ratings.clone(),
        hull_area: schur_hull_area(a, crate::gamescape::DEFAULT_RANK_TOL)?,
        embedding: embedding.sidecar(),
        redundant,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        write_json(&report, &dir.join("analysis.json"))?;
        embedding.write_csv(File::create(dir.join("embedding.csv"))?)?;
        write_json(&embedding.sidecar(), &dir.join("embedding.json"))?;
        write_points_csv(&crate::gamescape::convex_hull(&embedding.points_2d()), File::create(dir.join("hull.csv"))?)?;
        hodge.write_csv(&dir.join("hodge"))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub transitive_norm: f64,
    pub cyclic_norm: f64,
}

/// Generates a synthetic payoff matrix, writing it to `out` as CSV when given.
pub fn cmd_synth(spec: &SynthSpec, out: Option<&Path>) -> Result<(EvalMatrix, SynthReport)> {
    let a = synth_payoff(spec)?;
    let h = hodge_decompose(&a);
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        write_matrix_csv(a.entries(), File::create(path)?)?;
    }
    Ok((
        a,
        SynthReport {
            transitive_norm: h.transitive_norm(),
            cyclic_norm: h.cyclic_norm(),
        },
    ))
}
