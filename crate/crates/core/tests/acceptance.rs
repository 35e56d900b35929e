//! Acceptance criteria A1-A9. Each test writes one `A<k> PASS|FAIL` line to stderr
//! (outside the test harness's capture) and then asserts.

use std::io::Write;
use std::time::Instant;

use gamescape::games::{game_from_id, long_cycle_matrix, rps_embedding, unit_rps};
use gamescape::gamescape::{is_redundant, numerical_rank, schur_embedding, schur_hull_area, symplectic_gram, DEFAULT_RANK_TOL};
use gamescape::harness::{cmd_run, InitSpec, RunConfig};
use gamescape::hodge::{curl_of, divergence, grad_flow, hodge_decompose};
use gamescape::metrics::{diversity_l11, diversity_with, effective_diversity, nash_reweight, relative_performance, rps_reduce};
use gamescape::nash::{max_entropy_nash, solve_zero_sum, DEFAULT_TOL};
use gamescape::oracles::OracleConfig;
use gamescape::psro::{psro_step_nash, psro_step_rectified, run_psro, self_play_step, Algorithm, PsroRun, PsroState, Trainer};
use gamescape::types::antisymmetrize;
use gamescape::{Agent, EvalConfig, EvalMatrix, Population};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "{id} {verdict}: {detail}");
}

fn random_antisymmetric(n: usize, rng: &mut ChaCha8Rng) -> EvalMatrix {
    antisymmetrize(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[test]
fn a1_exact_small_cases() {
    let start = Instant::now();
    let rps = unit_rps();
    let nash = max_entropy_nash(&rps, DEFAULT_TOL).unwrap();
    let nash_err = nash.probs.iter().map(|p| (p - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    let div_err = (effective_diversity(&rps, DEFAULT_TOL).unwrap() - 1.0 / 3.0).abs();

    let disc = game_from_id("disc").unwrap();
    let mut eps_err: f64 = 0.0;
    for eps in [0.25, 0.5, 1.0] {
        let a = gamescape::build_eval_matrix(disc.as_ref(), &rps_embedding(eps).unwrap(), &EvalConfig::default()).unwrap();
        eps_err = eps_err.max((effective_diversity(&a, DEFAULT_TOL).unwrap() - eps * eps / 3.0).abs());
    }

    let mut rank_mismatch = Vec::new();
    for n in 3..=12 {
        let expected = if n % 2 == 0 { n - 2 } else { n - 1 };
        let got = numerical_rank(&long_cycle_matrix(n).unwrap(), DEFAULT_RANK_TOL).unwrap();
        if got != expected {
            rank_mismatch.push((n, got, expected));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();

    let pass = nash_err <= 1e-6 && div_err <= 1e-9 && eps_err <= 1e-9 && rank_mismatch.is_empty() && elapsed < 1.0;
    report(
        "A1",
        pass,
        format!("nash err {nash_err:.1e}, diversity err {div_err:.1e}, eps-rps err {eps_err:.1e}, rank mismatches {rank_mismatch:?}, {elapsed:.3}s"),
    );
    assert!(pass);
}

#[test]
fn a2_hodge_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA2);
    let (mut residual, mut ortho, mut div_cyc, mut pyth, mut curl_grad): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..100 {
        let n = rng.random_range(2..=64);
        let a = random_antisymmetric(n, &mut rng);
        let h = hodge_decompose(&a);
        residual = residual.max(max_abs(&(&h.transitive + &h.cyclic - a.entries())));
        ortho = ortho.max(h.transitive.dot(&h.cyclic).abs());
        let cyc = EvalMatrix::new(h.cyclic.clone(), 1e-12).unwrap();
        div_cyc = div_cyc.max(divergence(&cyc).iter().fold(0.0, |m, d| m.max(d.abs())));
        let total = a.entries().norm_squared();
        pyth = pyth.max((total - h.transitive.norm_squared() - h.cyclic.norm_squared()).abs() / total);
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        curl_grad = curl_grad.max(curl_of(&grad_flow(&r)).max_abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = residual <= 1e-10 && ortho <= 1e-10 && div_cyc <= 1e-10 && pyth <= 1e-8 && curl_grad <= 1e-12 && elapsed < 5.0;
    report(
        "A2",
        pass,
        format!("residual {residual:.1e}, orthogonality {ortho:.1e}, div(cyclic) {div_cyc:.1e}, pythagoras {pyth:.1e}, curl(grad) {curl_grad:.1e}, {elapsed:.2}s"),
    );
    assert!(pass);
}

#[test]
fn a3_nash_reweighting_and_rps_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA3);
    let (mut sums, mut l11): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let n = rng.random_range(2..=20);
        let a = random_antisymmetric(n, &mut rng);
        let p = max_entropy_nash(&a, DEFAULT_TOL).unwrap();
        let w = nash_reweight(&a, &p, DEFAULT_TOL).unwrap();
        for i in 0..n {
            sums = sums.max(w.row(i).sum().abs()).max(w.column(i).sum().abs());
        }
        l11 = l11.max((diversity_with(&a, &p.probs) - diversity_l11(&a, &p)).abs());
    }

    let (mut instances, mut draws) = (0, 0);
    let (mut row_sum, mut magnitude): (f64, f64) = (0.0, 0.0);
    while instances < 50 {
        draws += 1;
        let n = rng.random_range(3..=12);
        let a = random_antisymmetric(n, &mut rng);
        let p = max_entropy_nash(&a, DEFAULT_TOL).unwrap();
        let support = p.support(1e-6);
        if support.len() < 3 {
            continue;
        }
        instances += 1;
        let m = rps_reduce(&a, &p, support[0], 1e-6).unwrap().meta_matrix;
        for row in &m {
            row_sum = row_sum.max(row.iter().sum::<f64>().abs());
        }
        magnitude = magnitude.max((m[0][1].abs() - m[1][2].abs()).abs()).max((m[0][1].abs() - m[2][0].abs()).abs());
    }
    let pass = sums <= 1e-9 && l11 <= 1e-12 && row_sum <= 1e-9 && magnitude <= 1e-9;
    report(
        "A3",
        pass,
        format!("reweighted sums {sums:.1e}, l11 identity {l11:.1e}, meta row sums {row_sum:.1e}, off-diagonal spread {magnitude:.1e} ({instances} instances from {draws} draws)"),
    );
    assert!(pass);
}

#[test]
fn a4_gamescape_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    let mut recon: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(2..=40);
        let a = random_antisymmetric(n, &mut rng);
        let d = n - n % 2;
        let e = schur_embedding(&a, d, 0.0).unwrap();
        recon = recon.max((symplectic_gram(&e.coords) - a.entries()).norm());
    }

    let dup = EvalMatrix::from_rows(
        &[
            vec![0.0, 1.0, -1.0, -1.0],
            vec![-1.0, 0.0, 1.0, 1.0],
            vec![1.0, -1.0, 0.0, 0.0],
            vec![1.0, -1.0, 0.0, 0.0],
        ],
        0.0,
    )
    .unwrap();
    let hull_gap = (schur_hull_area(&dup, DEFAULT_RANK_TOL).unwrap() - schur_hull_area(&unit_rps(), DEFAULT_RANK_TOL).unwrap()).abs();

    // randomized response-to-Nash steps in the disc game
    let game = game_from_id("disc").unwrap();
    let oracle = OracleConfig::Gradient {
        learning_rate: 0.1,
        steps: 10,
        epsilon: 1e-6,
    };
    let (mut improving, mut violations) = (0, 0);
    for k in 0..100u64 {
        let trainer = Trainer::new(game.clone(), oracle.clone(), k);
        let n = rng.random_range(1..=8);
        let params: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let state = PsroState::new(&trainer, Population::from_params("disc", params).unwrap()).unwrap();
        let step = psro_step_nash(&state, &trainer).unwrap();
        if step.record.end_values[0] > 1e-6 {
            improving += 1;
            if is_redundant(&step.state.eval, n, 1e-9).unwrap() {
                violations += 1;
            }
        }
    }
    let pass = recon <= 1e-8 && hull_gap <= 1e-9 && violations == 0;
    report(
        "A4",
        pass,
        format!("full-rank reconstruction {recon:.1e}, duplicate-scissors hull gap {hull_gap:.1e}, {violations} redundant of {improving} improving Nash responses"),
    );
    assert!(pass);
}

/// Value of `max_p min_j (p^T A)_j` by enumerating every vertex of
/// `{(p, v) : A^T p >= v 1, p >= 0, 1^T p = 1}`.
fn brute_force_value(a: &DMatrix<f64>) -> f64 {
    let (m, n) = a.shape();
    // constraint k < n: (A^T p)_k - v >= 0; k >= n: p_{k-n} >= 0
    let row = |k: usize| -> Vec<f64> {
        let mut r = vec![0.0; m + 1];
        if k < n {
            for i in 0..m {
                r[i] = a[(i, k)];
            }
            r[m] = -1.0;
        } else {
            r[k - n] = 1.0;
        }
        r
    };
    let mut best = f64::NEG_INFINITY;
    let total = n + m;
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let mut sys = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = nalgebra::DVector::zeros(m + 1);
        let mut r = 0;
        for k in 0..total {
            if mask & (1 << k) != 0 {
                sys.set_row(r, &nalgebra::RowDVector::from_vec(row(k)));
                r += 1;
            }
        }
        for i in 0..m {
            sys[(m, i)] = 1.0;
        }
        rhs[m] = 1.0;
        let Some(x) = sys.lu().solve(&rhs) else { continue };
        let feasible = (0..total).all(|k| {
            let r = row(k);
            (0..=m).map(|i| r[i] * x[i]).sum::<f64>() >= -1e-10
        });
        if feasible && x.iter().all(|v| v.is_finite()) {
            best = best.max(x[m]);
        }
    }
    best
}

#[test]
fn a5_lp_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (m, n) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let lp = solve_zero_sum(&a, DEFAULT_TOL).unwrap().value;
        worst = worst.max((lp - brute_force_value(&a)).abs());
    }
    let pass = worst <= 1e-8;
    report("A5", pass, format!("largest value gap {worst:.1e} over 200 games"));
    assert!(pass);
}

#[test]
fn a6_degenerate_cases() {
    let oracle = OracleConfig::Gradient {
        learning_rate: 0.1,
        steps: 20,
        epsilon: 1e-6,
    };
    let transitive = game_from_id("transitive").unwrap();
    let trainer = Trainer::new(transitive.clone(), oracle.clone(), 11);
    // the newest agent is the strongest, so the Nash is a point mass on it
    let pop = Population::from_params("transitive", vec![vec![-0.5], vec![0.25], vec![1.0]]).unwrap();
    let state = PsroState::new(&trainer, pop).unwrap();
    let point_mass = state.nash.probs == vec![0.0, 0.0, 1.0];
    let nash_step = psro_step_nash(&state, &trainer).unwrap();
    let sp_step = self_play_step(&state, &trainer).unwrap();
    let same_objective = nash_step.record.start_values == sp_step.record.start_values
        && nash_step.record.end_values == sp_step.record.end_values
        && nash_step.state.population.agents[3].params == sp_step.state.population.agents[3].params;

    let mut rng = ChaCha8Rng::seed_from_u64(0xA6);
    let mut trained_counts = Vec::new();
    for game_id in ["transitive", "elo", "elo:3"] {
        let game = game_from_id(game_id).unwrap();
        let trainer = Trainer::new(game.clone(), oracle.clone(), 5);
        for _ in 0..5 {
            let n = rng.random_range(2..=8);
            let params: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
            let state = PsroState::new(&trainer, Population::from_params(game_id, params).unwrap()).unwrap();
            trained_counts.push(psro_step_rectified(&state, &trainer).unwrap().record.parents.len());
        }
    }
    let pass = point_mass && same_objective && trained_counts.iter().all(|&c| c == 1);
    report(
        "A6",
        pass,
        format!("point-mass Nash {point_mass}, Nash step equals self-play step {same_objective}, agents trained per rectified step {trained_counts:?}"),
    );
    assert!(pass);
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const T: usize = 20;

/// Runs `algorithm` for up to `T` iterations with a budget of `T` oracle calls, so every
/// population ends with the same number of trained agents.
fn budgeted_run(game: &str, algorithm: Algorithm, oracle: &OracleConfig, seed: u64) -> PsroRun {
    let mut cfg = RunConfig::new(game, algorithm, T, seed);
    cfg.oracle = oracle.clone();
    cfg.init = InitSpec::Random { count: 1 };
    cfg.query_budget = Some(T as u64 * oracle.queries_per_call());
    run_psro(&cfg).unwrap()
}

#[test]
fn a7_lotto_desk_scale() {
    let start = Instant::now();
    let oracle = OracleConfig::default();
    let mut vs_self_play = Vec::new();
    let mut vs_nash = Vec::new();
    let mut monotone = Vec::new();
    let mut equal_budget = true;
    for seed in SEEDS {
        let game_id = format!("lotto:4:random:9:{seed}");
        let game = game_from_id(&game_id).unwrap();
        let rn = budgeted_run(&game_id, Algorithm::PsroRn, &oracle, seed);
        let n = budgeted_run(&game_id, Algorithm::PsroN, &oracle, seed);
        let sp = budgeted_run(&game_id, Algorithm::SelfPlay, &oracle, seed);
        equal_budget &= rn.state.queries == n.state.queries && n.state.queries == sp.state.queries;
        let perf = |p: &PsroRun, q: &PsroRun| {
            relative_performance(&p.state.population, &q.state.population, game.as_ref(), &EvalConfig::default(), DEFAULT_TOL)
                .unwrap()
                .value
        };
        vs_self_play.push(perf(&rn, &sp));
        vs_nash.push(perf(&rn, &n));
        let areas: Vec<f64> = rn.log.records.iter().map(|r| r.hull_area).collect();
        monotone.push(areas.windows(2).all(|w| w[1] >= w[0]));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let positive = vs_self_play.iter().filter(|&&v| v > 0.0).count();
    let mut sorted = vs_nash.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let growing = monotone.iter().filter(|&&m| m).count();
    let pass = equal_budget && positive >= 4 && median >= 0.0 && growing >= 4 && elapsed < 600.0;
    report(
        "A7",
        pass,
        format!(
            "equal queries {equal_budget}, perf(rN, self-play) {vs_self_play:?} ({positive}/5 > 0), median perf(rN, N) {median:.3e} from {vs_nash:?}, hull non-decreasing in {growing}/5, {elapsed:.1}s"
        ),
    );
    assert!(pass);
}

#[test]
fn a8_blotto_desk_scale() {
    let start = Instant::now();
    let oracle = OracleConfig::evolution();
    let game_id = "blotto:3:10";
    let game = game_from_id(game_id).unwrap();
    let mut values = Vec::new();
    for seed in SEEDS {
        let rn = budgeted_run(game_id, Algorithm::PsroRn, &oracle, seed);
        let sp = budgeted_run(game_id, Algorithm::SelfPlay, &oracle, seed);
        let last: Agent = sp.state.population.agents.last().unwrap().clone();
        let final_agent = Population::new(game_id, vec![last]).unwrap();
        values.push(relative_performance(&rn.state.population, &final_agent, game.as_ref(), &EvalConfig::default(), DEFAULT_TOL).unwrap().value);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    let pass = positive >= 4 && elapsed < 600.0;
    report("A8", pass, format!("perf(rN, final self-play agent) {values:.4?} ({positive}/5 > 0), {elapsed:.1}s"));
    assert!(pass);
}

#[test]
fn a9_run_artifacts_are_deterministic() {
    let mut cfg = RunConfig::new("lotto:4:random:9:7", Algorithm::PsroRn, 4, 7);
    cfg.oracle = OracleConfig::Gradient {
        learning_rate: 0.1,
        steps: 10,
        epsilon: 1e-6,
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_run(&cfg, a.path()).unwrap();
    cmd_run(&cfg, b.path()).unwrap();
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let metrics_equal = read(&a, "metrics.csv") == read(&b, "metrics.csv");
    let log_equal = read(&a, "run_log.jsonl") == read(&b, "run_log.jsonl");
    let pop_equal = read(&a, "population.json") == read(&b, "population.json");
    let pass = metrics_equal && log_equal && pop_equal;
    report("A9", pass, format!("metrics identical {metrics_equal}, log identical {log_equal}, population identical {pop_equal}"));
    assert!(pass);
}
