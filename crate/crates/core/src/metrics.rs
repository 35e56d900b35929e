use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::Game;
use crate::nash::{max_entropy_nash, solve_zero_sum, NashMixture};
use crate::types::{cross_eval_matrix, EvalConfig, EvalMatrix, Population};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub value: f64,
    pub row_mixture: Vec<f64>,
    pub col_mixture: Vec<f64>,
}

/// Relative performance of `p` against `q`: the value of the zero-sum game on the
/// cross evaluation matrix `A[v][w] = phi(v, w)`.
pub fn relative_performance(p: &Population, q: &Population, game: &dyn Game, cfg: &EvalConfig, tol: f64) -> Result<PerfReport> {
    if p.game_id != q.game_id {
        return Err(Error::GameMismatch(p.game_id.clone(), q.game_id.clone()));
    }
    perf_from_matrix(&cross_eval_matrix(game, p, q, cfg)?, tol)
}

pub fn perf_from_matrix(a: &DMatrix<f64>, tol: f64) -> Result<PerfReport> {
    let sol = solve_zero_sum(a, tol)?;
    let value = bilinear(a, &sol.row_mixture, &sol.col_mixture);
    Ok(PerfReport {
        value,
        row_mixture: sol.row_mixture,
        col_mixture: sol.col_mixture,
    })
}

fn bilinear(a: &DMatrix<f64>, p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..a.nrows() {
        if p[i] == 0.0 {
            continue;
        }
        let row: f64 = (0..a.ncols()).map(|j| a[(i, j)] * q[j]).sum();
        total += p[i] * row;
    }
    total
}

/// `sum_ij max(A_ij, 0) p_i p_j` for a given mixture.
pub fn diversity_with(a: &EvalMatrix, p: &[f64]) -> f64 {
    let n = a.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a.get(i, j);
            if x > 0.0 {
                total += x * p[i] * p[j];
            }
        }
    }
    total
}

/// Effective diversity under the maximum-entropy Nash.
pub fn effective_diversity(a: &EvalMatrix, tol: f64) -> Result<f64> {
    Ok(diversity_with(a, &max_entropy_nash(a, tol)?.probs))
}

fn check_nash(a: &EvalMatrix, p: &NashMixture, tol: f64) -> Result<()> {
    if p.probs.len() != a.n() {
        return Err(Error::Dimension(format!("mixture has {} entries, matrix is {}x{}", p.probs.len(), a.n(), a.n())));
    }
    let fresh = NashMixture::from_probs(a.entries(), p.probs.clone());
    if fresh.residual < -tol {
        return Err(Error::InvalidArgument(format!("mixture is not a Nash equilibrium (residual {:e})", fresh.residual)));
    }
    Ok(())
}

/// `A[i][j] p_i p_j`; every row and column sums to zero when `p` is Nash.
pub fn nash_reweight(a: &EvalMatrix, p: &NashMixture, tol: f64) -> Result<DMatrix<f64>> {
    check_nash(a, p, tol)?;
    let w = &p.probs;
    Ok(DMatrix::from_fn(a.n(), a.n(), |i, j| a.get(i, j) * w[i] * w[j]))
}

/// Half the entrywise l1 norm of the Nash-reweighted matrix.
pub fn diversity_l11(a: &EvalMatrix, p: &NashMixture) -> f64 {
    let n = a.n();
    let w = &p.probs;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += (a.get(i, j) * w[i] * w[j]).abs();
        }
    }
    0.5 * total
}

/// Three-way split of the Nash mass around an anchor agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpsReduction {
    pub weights_r: Vec<f64>,
    pub weights_p: Vec<f64>,
    pub weights_s: Vec<f64>,
    /// Payoffs between the three (unnormalized) mixtures, in order r, p, s.
    pub meta_matrix: [[f64; 3]; 3],
    pub alpha: f64,
}

/// Groups the Nash support into the anchor, the supported agents the anchor beats, and
/// the remaining supported agents (ties included), then plays the groups against each
/// other. The resulting 3x3 game is `alpha` times rock-paper-scissors.
pub fn rps_reduce(a: &EvalMatrix, p: &NashMixture, anchor: usize, support_threshold: f64) -> Result<RpsReduction> {
    let n = a.n();
    if p.probs.len() != n {
        return Err(Error::Dimension(format!("mixture has {} entries, matrix is {n}x{n}", p.probs.len())));
    }
    let support = p.support(support_threshold);
    if support.len() < 3 {
        return Err(Error::InvalidArgument(format!("Nash support has {} agents, need at least 3", support.len())));
    }
    if !support.contains(&anchor) {
        return Err(Error::InvalidArgument(format!("anchor {anchor} carries no Nash mass")));
    }
    let mut weights_r = vec![0.0; n];
    let mut weights_p = vec![0.0; n];
    let mut weights_s = vec![0.0; n];
    for &i in &support {
        if i == anchor {
            weights_r[i] = p.probs[i];
        } else if a.get(anchor, i) > 0.0 {
            weights_p[i] = p.probs[i];
        } else {
            weights_s[i] = p.probs[i];
        }
    }
    let groups = [&weights_r, &weights_p, &weights_s];
    let mut meta_matrix = [[0.0; 3]; 3];
    for (x, gx) in groups.iter().enumerate() {
        for (y, gy) in groups.iter().enumerate() {
            meta_matrix[x][y] = bilinear(a.entries(), gx, gy);
        }
    }
    let alpha = meta_matrix[0][1];
    Ok(RpsReduction {
        weights_r,
        weights_p,
        weights_s,
        meta_matrix,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{game_from_id, rps_embedding, unit_rps};
    use crate::nash::DEFAULT_TOL;
    use crate::types::antisymmetrize;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform(n: usize) -> NashMixture {
        NashMixture::from_probs(&DMatrix::zeros(n, n), vec![1.0 / n as f64; n])
    }

    #[test]
    fn perf_examples() {
        let g = game_from_id("transitive").unwrap();
        let p = Population::from_params("transitive", vec![vec![1.0], vec![3.0]]).unwrap();
        let q = Population::from_params("transitive", vec![vec![2.0]]).unwrap();
        let r = relative_performance(&p, &q, g.as_ref(), &EvalConfig::default(), DEFAULT_TOL).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.row_mixture, vec![0.0, 1.0]);
        assert!(relative_performance(&p, &p, g.as_ref(), &EvalConfig::default(), DEFAULT_TOL).unwrap().value.abs() < 1e-12);

        let rock_only = unit_rps().entries().rows(0, 1).into_owned();
        assert!((perf_from_matrix(&rock_only, DEFAULT_TOL).unwrap().value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn perf_rejects_mixed_games() {
        let g = game_from_id("transitive").unwrap();
        let p = Population::from_params("transitive", vec![vec![1.0]]).unwrap();
        let q = Population::from_params("elo", vec![vec![1.0]]).unwrap();
        assert!(matches!(
            relative_performance(&p, &q, g.as_ref(), &EvalConfig::default(), DEFAULT_TOL),
            Err(Error::GameMismatch(..))
        ));
    }

    #[test]
    fn diversity_examples() {
        assert!((effective_diversity(&unit_rps(), DEFAULT_TOL).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let g = game_from_id("disc").unwrap();
        for eps in [0.25, 0.5, 1.0] {
            let a = crate::types::build_eval_matrix(g.as_ref(), &rps_embedding(eps).unwrap(), &EvalConfig::default()).unwrap();
            assert!((effective_diversity(&a, DEFAULT_TOL).unwrap() - eps * eps / 3.0).abs() < 1e-12);
        }
        let dominant = crate::games::elo_game(&[2.0, 0.0, 1.0], 1.0).unwrap();
        assert_eq!(effective_diversity(&dominant, DEFAULT_TOL).unwrap(), 0.0);
    }

    #[test]
    fn reweight_examples() {
        let rps = unit_rps();
        let w = nash_reweight(&rps, &uniform(3), DEFAULT_TOL).unwrap();
        assert!((w - rps.entries() / 9.0).abs().max() < 1e-15);

        let dominant = crate::games::elo_game(&[2.0, 0.0, 1.0], 1.0).unwrap();
        let point = NashMixture::from_probs(dominant.entries(), vec![1.0, 0.0, 0.0]);
        assert!(nash_reweight(&dominant, &point, DEFAULT_TOL).unwrap().iter().all(|&x| x == 0.0));

        assert!(nash_reweight(&rps, &NashMixture::from_probs(rps.entries(), vec![1.0, 0.0, 0.0]), DEFAULT_TOL).is_err());
        assert!((diversity_l11(&rps, &uniform(3)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(diversity_l11(&EvalMatrix::zeros(4), &uniform(4)), 0.0);
    }

    #[test]
    fn rps_reduction_of_unit_rps() {
        let r = rps_reduce(&unit_rps(), &uniform(3), 0, 1e-6).unwrap();
        // the anchor beats index 1 in this orientation
        assert_eq!(r.weights_p, vec![0.0, 1.0 / 3.0, 0.0]);
        assert_eq!(r.weights_s, vec![0.0, 0.0, 1.0 / 3.0]);
        assert!((r.alpha - 1.0 / 9.0).abs() < 1e-15);
        let expected = unit_rps().to_rows();
        for x in 0..3 {
            for y in 0..3 {
                assert!((r.meta_matrix[x][y] - expected[x][y] / 9.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rps_reduction_preconditions() {
        let rps = unit_rps();
        let two = NashMixture::from_probs(rps.entries(), vec![0.5, 0.5, 0.0]);
        assert!(rps_reduce(&rps, &two, 0, 1e-6).is_err());
        let a = EvalMatrix::zeros(4);
        let p = NashMixture::from_probs(a.entries(), vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0]);
        assert!(rps_reduce(&a, &p, 3, 1e-6).is_err());
    }

    fn random_antisymmetric(n: usize, rng: &mut ChaCha8Rng) -> EvalMatrix {
        antisymmetrize(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn diversity_is_half_l11_norm(n in 1usize..13, seed in any::<u64>()) {
            let a = random_antisymmetric(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let p = max_entropy_nash(&a, DEFAULT_TOL).unwrap();
            prop_assert!((effective_diversity(&a, DEFAULT_TOL).unwrap() - diversity_l11(&a, &p)).abs() <= 1e-12);
        }

        #[test]
        fn reweighted_matrix_is_balanced(n in 1usize..13, seed in any::<u64>()) {
            let a = random_antisymmetric(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let p = max_entropy_nash(&a, DEFAULT_TOL).unwrap();
            let w = nash_reweight(&a, &p, DEFAULT_TOL).unwrap();
            prop_assert!((&w + w.transpose()).abs().max() <= 1e-15);
            for k in 0..n {
                prop_assert!(w.row(k).sum().abs() <= 1e-9);
                prop_assert!(w.column(k).sum().abs() <= 1e-9);
            }
        }

        #[test]
        fn perf_is_permutation_invariant(m in 1usize..6, n in 1usize..6, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let mut rows: Vec<usize> = (0..m).collect();
            rows.shuffle(&mut rng);
            let b = DMatrix::from_fn(m, n, |i, j| a[(rows[i], j)]);
            let (va, vb) = (perf_from_matrix(&a, DEFAULT_TOL).unwrap().value, perf_from_matrix(&b, DEFAULT_TOL).unwrap().value);
            prop_assert!((va - vb).abs() <= 1e-9);
        }

        #[test]
        fn growing_the_population_never_hurts(np in 1usize..4, extra in 1usize..4, nr in 1usize..5, seed in any::<u64>()) {
            let game = game_from_id("disc").unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |k: usize| (0..k).map(|_| game.random_params(&mut rng)).collect::<Vec<_>>();
            let small = draw(np);
            let mut big = small.clone();
            big.extend(draw(extra));
            let other = draw(nr);
            let pop = |v: Vec<Vec<f64>>| Population::from_params("disc", v).unwrap();
            let (p, q, r) = (pop(small), pop(big), pop(other));
            let cfg = EvalConfig::default();
            let perf = |x: &Population, y: &Population| relative_performance(x, y, game.as_ref(), &cfg, DEFAULT_TOL).unwrap().value;
            prop_assert!(perf(&p, &q) <= 1e-9);
            prop_assert!(perf(&p, &r) <= perf(&q, &r) + 1e-9);
        }

        #[test]
        fn rps_reduction_has_rps_form(n in 3usize..12, seed in any::<u64>()) {
            let a = random_antisymmetric(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let p = max_entropy_nash(&a, DEFAULT_TOL).unwrap();
            let support = p.support(1e-6);
            prop_assume!(support.len() >= 3);
            let r = rps_reduce(&a, &p, support[0], 1e-6).unwrap();
            let m = r.meta_matrix;
            for row in &m {
                prop_assert!(row.iter().sum::<f64>().abs() <= 1e-9);
            }
            prop_assert!((m[0][1].abs() - m[1][2].abs()).abs() <= 1e-9);
            prop_assert!((m[0][1].abs() - m[2][0].abs()).abs() <= 1e-9);
            prop_assert!(r.alpha > 0.0);
            let total: Vec<f64> = (0..n).map(|i| r.weights_r[i] + r.weights_p[i] + r.weights_s[i]).collect();
            for i in 0..n {
                let expected = if p.probs[i] > 1e-6 { p.probs[i] } else { 0.0 };
                prop_assert_eq!(total[i], expected);
            }
        }
    }
}
