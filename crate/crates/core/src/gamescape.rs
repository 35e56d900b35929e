//! Empirical gamescape analytics: rank, low-dimensional embeddings, hull area,
//! redundancy, and synthetic payoff generation.

use std::io::Write;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hodge::grad_flow;
use crate::lp::{LinearProgram, Relation};
use crate::types::{fmt_f64, EvalMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Paired spectrum of an antisymmetric matrix: `A a_k = l_k b_k`, `A b_k = -l_k a_k`,
/// with `l_k >= 0` decreasing and `(a_k, b_k)` orthonormal.
struct SkewSpectrum {
    lambdas: Vec<f64>,
    a: Vec<DVector<f64>>,
    b: Vec<DVector<f64>>,
}

/// Diagonalizes the Hermitian matrix `iA`; each eigenpair `(l, x + iy)` with `l > 0`
/// gives the real plane `a = sqrt2 x`, `b = sqrt2 y`.
fn skew_spectrum(a: &DMatrix<f64>) -> Result<SkewSpectrum> {
    let n = a.nrows();
    let h = DMatrix::from_fn(n, n, |i, j| Complex::new(0.0, a[(i, j)]));
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NonConvergence("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));
    let pairs = n / 2;
    let mut lambdas = Vec::with_capacity(pairs);
    let mut av = Vec::with_capacity(pairs);
    let mut bv = Vec::with_capacity(pairs);
    for &k in order.iter().take(pairs) {
        let mut u = eig.eigenvectors.column(k).into_owned();
        // fix the phase: the largest-modulus component becomes real positive
        let pivot = (0..n).max_by(|&x, &y| u[x].norm().total_cmp(&u[y].norm())).unwrap_or(0);
        let phase = u[pivot].conj() / u[pivot].norm().max(f64::MIN_POSITIVE);
        u *= phase;
        let x = DVector::from_iterator(n, u.iter().map(|c| c.re * std::f64::consts::SQRT_2));
        let y = DVector::from_iterator(n, u.iter().map(|c| c.im * std::f64::consts::SQRT_2));
        lambdas.push(eig.eigenvalues[k].max(0.0));
        av.push(x);
        bv.push(y);
    }
    Ok(SkewSpectrum { lambdas, a: av, b: bv })
}

fn significant_pairs(lambdas: &[f64], tol: f64) -> usize {
    let max = lambdas.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    lambdas.iter().filter(|&&l| l > tol * max).count()
}

/// Numerical rank: singular values above `tol` times the largest. Singular values of an
/// antisymmetric matrix come in equal pairs, so the count is taken pairwise and is even.
pub fn numerical_rank(a: &EvalMatrix, tol: f64) -> Result<usize> {
    if a.n() < 2 {
        return Ok(0);
    }
    Ok(2 * significant_pairs(&skew_spectrum(a.entries())?.lambdas, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingMethod {
    Schur,
    Pca,
    Svd,
}

impl std::str::FromStr for EmbeddingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schur" => Ok(Self::Schur),
            "pca" => Ok(Self::Pca),
            "svd" => Ok(Self::Svd),
            other => Err(Error::InvalidArgument(format!("unknown embedding `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// One row per agent.
    pub coords: DMatrix<f64>,
    pub method: EmbeddingMethod,
    pub recon_error: f64,
    /// Orthonormal directions in payoff space, one column per coordinate.
    pub basis: DMatrix<f64>,
    /// Per-block eigenvalues (Schur) or per-component singular values (PCA, SVD).
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSidecar {
    pub method: EmbeddingMethod,
    pub recon_error: f64,
    pub dims: usize,
    pub scales: Vec<f64>,
}

impl Embedding {
    pub fn dims(&self) -> usize {
        self.coords.ncols()
    }

    pub fn points_2d(&self) -> Vec<[f64; 2]> {
        (0..self.coords.nrows())
            .map(|i| {
                let x = if self.dims() > 0 { self.coords[(i, 0)] } else { 0.0 };
                let y = if self.dims() > 1 { self.coords[(i, 1)] } else { 0.0 };
                [x, y]
            })
            .collect()
    }

    pub fn sidecar(&self) -> EmbeddingSidecar {
        EmbeddingSidecar {
            method: self.method,
            recon_error: self.recon_error,
            dims: self.dims(),
            scales: self.scales.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        crate::types::write_matrix_csv(&self.coords, out)
    }
}

/// Symplectic coordinates from the real Schur form `A = W J W^T`.
///
/// Block `k` puts agent `i` at `sqrt(l_k) * (b_k[i], a_k[i])`, so that summing the 2-D
/// cross products of all blocks recovers `A[i][j]`. Under these coordinates the hull area
/// is invariant to appending agents that are convex mixtures of existing ones. Blocks are
/// ordered by decreasing eigenvalue; blocks below `tol` relative are zero.
pub fn schur_embedding(a: &EvalMatrix, d: usize, tol: f64) -> Result<Embedding> {
    let n = a.n();
    if d % 2 != 0 {
        return Err(Error::InvalidArgument(format!("Schur embedding needs an even dimension, got {d}")));
    }
    if d > n.max(2) {
        return Err(Error::InvalidArgument(format!("dimension {d} exceeds population size {n}")));
    }
    let spec = if n >= 2 {
        skew_spectrum(a.entries())?
    } else {
        SkewSpectrum { lambdas: vec![], a: vec![], b: vec![] }
    };
    let keep = significant_pairs(&spec.lambdas, tol);
    let blocks = d / 2;
    let mut coords = DMatrix::zeros(n, d);
    let mut basis = DMatrix::zeros(n, d);
    let mut scales = vec![0.0; blocks];
    for k in 0..blocks.min(keep) {
        let l = spec.lambdas[k];
        let (mut av, mut bv) = (spec.a[k].clone(), spec.b[k].clone());
        // sign: first clearly nonzero entry of the block's first column is positive
        let cutoff = 1e-12 * bv.amax().max(f64::MIN_POSITIVE);
        if let Some(first) = bv.iter().find(|x| x.abs() > cutoff) {
            if *first < 0.0 {
                av = -av;
                bv = -bv;
            }
        }
        let s = l.sqrt();
        coords.set_column(2 * k, &(&bv * s));
        coords.set_column(2 * k + 1, &(&av * s));
        basis.set_column(2 * k, &av);
        basis.set_column(2 * k + 1, &bv);
        scales[k] = l;
    }
    let approx = symplectic_gram(&coords);
    let recon_error = (a.entries() - approx).norm();
    Ok(Embedding {
        coords,
        method: EmbeddingMethod::Schur,
        recon_error,
        basis,
        scales,
    })
}

/// `sum_k x_i^k cross x_j^k` over coordinate pairs.
pub fn symplectic_gram(coords: &DMatrix<f64>) -> DMatrix<f64> {
    let n = coords.nrows();
    let blocks = coords.ncols() / 2;
    DMatrix::from_fn(n, n, |i, j| {
        (0..blocks)
            .map(|k| coords[(i, 2 * k)] * coords[(j, 2 * k + 1)] - coords[(i, 2 * k + 1)] * coords[(j, 2 * k)])
            .sum()
    })
}

fn svd_embedding_of(data: &DMatrix<f64>, d: usize, method: EmbeddingMethod) -> Result<Embedding> {
    let n = data.nrows();
    if d == 0 || d > n {
        return Err(Error::InvalidArgument(format!("dimension must lie in 1..={n}, got {d}")));
    }
    let svd = data.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or_else(|| Error::NonConvergence("SVD failed".into()))?;
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::NonConvergence("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]).then(x.cmp(&y)));
    let mut coords = DMatrix::zeros(n, d);
    let mut basis = DMatrix::zeros(data.ncols(), d);
    let mut scales = vec![0.0; d];
    for (c, &k) in order.iter().take(d).enumerate() {
        let s = svd.singular_values[k];
        let mut col = u.column(k) * s;
        let mut dir = v_t.row(k).transpose();
        // orient so the largest coordinate is positive
        if let Some(m) = (0..n).max_by(|&x, &y| col[x].abs().total_cmp(&col[y].abs())) {
            if col[m] < 0.0 {
                col = -col;
                dir = -dir;
            }
        }
        coords.set_column(c, &col);
        basis.set_column(c, &dir);
        scales[c] = s;
    }
    let recon_error = (data - &coords * basis.transpose()).norm();
    Ok(Embedding {
        coords,
        method,
        recon_error,
        basis,
        scales,
    })
}

/// Rows of `A` as centered data points, projected onto the top `d` principal axes.
pub fn pca_embedding(a: &EvalMatrix, d: usize) -> Result<Embedding> {
    let mut data = a.entries().clone();
    let mean = data.row_mean();
    for mut row in data.row_iter_mut() {
        row -= &mean;
    }
    svd_embedding_of(&data, d, EmbeddingMethod::Pca)
}

/// Rows of `A` projected onto the top `d` right singular vectors, uncentered.
pub fn svd_embedding(a: &EvalMatrix, d: usize) -> Result<Embedding> {
    svd_embedding_of(a.entries(), d, EmbeddingMethod::Svd)
}

pub fn embed(a: &EvalMatrix, method: EmbeddingMethod, d: usize, tol: f64) -> Result<Embedding> {
    match method {
        EmbeddingMethod::Schur => schur_embedding(a, d, tol),
        EmbeddingMethod::Pca => pca_embedding(a, d),
        EmbeddingMethod::Svd => svd_embedding(a, d),
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull in counter-clockwise order (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Area of the convex hull, zero for fewer than three non-collinear points.
pub fn hull_area_2d(points: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..hull.len())
        .map(|k| {
            let (p, q) = (hull[k], hull[(k + 1) % hull.len()]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum();
    0.5 * twice.abs()
}

/// Hull area of the 2-D Schur embedding; zero below three agents.
pub fn schur_hull_area(a: &EvalMatrix, tol: f64) -> Result<f64> {
    if a.n() < 3 {
        return Ok(0.0);
    }
    Ok(hull_area_2d(&schur_embedding(a, 2, tol)?.points_2d()))
}

/// Smallest sup-norm distance from row `i` to the convex hull of the other rows.
pub fn redundancy_gap(a: &EvalMatrix, i: usize) -> Result<f64> {
    let n = a.n();
    if n < 2 {
        return Err(Error::InvalidArgument("redundancy needs at least two agents".into()));
    }
    if i >= n {
        return Err(Error::Dimension(format!("row {i} out of range for {n} agents")));
    }
    let others: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let m = others.len();
    // variables: alpha (m), t; maximize -t
    let mut objective = vec![0.0; m + 1];
    objective[m] = -1.0;
    let mut lp = LinearProgram::new(objective);
    for j in 0..n {
        let mut upper: Vec<f64> = others.iter().map(|&k| a.get(k, j)).collect();
        let mut lower: Vec<f64> = upper.iter().map(|x| -x).collect();
        upper.push(-1.0);
        lower.push(-1.0);
        lp.add(upper, Relation::Le, a.get(i, j));
        lp.add(lower, Relation::Le, -a.get(i, j));
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.add(simplex, Relation::Eq, 1.0);
    let sol = lp.maximize()?;
    Ok(sol.x[m].max(0.0))
}

/// Whether row `i` lies within `tol` (sup norm) of a convex mixture of the other rows.
pub fn is_redundant(a: &EvalMatrix, i: usize, tol: f64) -> Result<bool> {
    Ok(redundancy_gap(a, i)? <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    Random,
    AlmostTransitive,
    AlmostCyclic,
    Mixed,
    AlmostMonotonic,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "almost_transitive" => Ok(Self::AlmostTransitive),
            "almost_cyclic" => Ok(Self::AlmostCyclic),
            "mixed" => Ok(Self::Mixed),
            "almost_monotonic" => Ok(Self::AlmostMonotonic),
            other => Err(Error::InvalidArgument(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub seed: u64,
    /// Noiseless ratings are equally spaced on `[-rating_span, rating_span]`.
    #[serde(default = "default_span")]
    pub rating_span: f64,
}

fn default_sigma() -> f64 {
    0.02
}

fn default_span() -> f64 {
    1.0
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n: usize, sigma: f64, seed: u64) -> Self {
        Self {
            kind,
            n,
            sigma,
            seed,
            rating_span: 1.0,
        }
    }
}

pub const MIXED_TRANSITIVE_WEIGHT: f64 = 0.65;
pub const MIXED_CYCLIC_WEIGHT: f64 = 0.35;

fn transitive_base(n: usize, span: f64) -> DMatrix<f64> {
    let ratings: Vec<f64> = (0..n).map(|i| span * (2.0 * i as f64 / (n - 1) as f64 - 1.0)).collect();
    grad_flow(&ratings)
}

/// `Q B Q^T` with `B` block-diagonal rotation generators of random angles and `Q` an
/// orthonormal basis of the complement of `1`, so every row sums to zero. Scaled to the
/// Frobenius norm of `target_norm`.
fn cyclic_base(n: usize, target_norm: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut raw = DMatrix::from_fn(n, n, |_, _| normal.sample(rng));
    raw.set_column(0, &DVector::from_element(n, 1.0));
    let q = raw.qr().q();
    let dims = n - 1;
    let mut b = DMatrix::zeros(dims, dims);
    for k in 0..dims / 2 {
        let angle: f64 = rand::Rng::random_range(rng, 0.0..std::f64::consts::PI);
        b[(2 * k, 2 * k + 1)] = angle;
        b[(2 * k + 1, 2 * k)] = -angle;
    }
    let qc = q.columns(1, dims);
    let c = &qc * b * qc.transpose();
    let c = (&c - c.transpose()) * 0.5;
    let norm = c.norm();
    if norm == 0.0 {
        c
    } else {
        c * (target_norm / norm)
    }
}

/// Synthetic antisymmetric payoffs, deterministic per seed.
pub fn synth_payoff(spec: &SynthSpec) -> Result<EvalMatrix> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("synthetic payoffs need n >= 2, got {n}")));
    }
    if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be nonnegative, got {}", spec.sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let trans = transitive_base(n, spec.rating_span);
    let base = match spec.kind {
        SynthKind::Random => DMatrix::zeros(n, n),
        SynthKind::AlmostTransitive => trans,
        SynthKind::AlmostCyclic => {
            let norm = trans.norm();
            cyclic_base(n, norm, &mut rng)
        }
        SynthKind::Mixed => {
            let cyc = cyclic_base(n, trans.norm(), &mut rng);
            trans * MIXED_TRANSITIVE_WEIGHT + cyc * MIXED_CYCLIC_WEIGHT
        }
        SynthKind::AlmostMonotonic => trans.map(|x| if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 }),
    };
    let noise = if spec.sigma > 0.0 {
        let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let e = DMatrix::from_fn(n, n, |_, _| normal.sample(&mut rng));
        (&e - e.transpose()) * 0.5
    } else {
        DMatrix::zeros(n, n)
    };
    let m = base + noise;
    // exact antisymmetry, zero diagonal
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i < j {
            m[(i, j)]
        } else if i > j {
            -m[(j, i)]
        } else {
            0.0
        }
    });
    EvalMatrix::new(m, 0.0)
}

/// Writes `x,y` rows for a set of plane points.
pub fn write_points_csv<W: Write>(points: &[[f64; 2]], out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for p in points {
        writeln!(out, "{},{}", fmt_f64(p[0]), fmt_f64(p[1]))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{long_cycle_matrix, unit_rps};
    use crate::hodge::hodge_decompose;
    use crate::types::antisymmetrize;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_mixture_row(a: &EvalMatrix, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = a.n();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        (0..n).map(|j| (0..n).map(|k| w[k] / total * a.get(k, j)).sum()).collect()
    }

    fn random_antisymmetric(n: usize, seed: u64) -> EvalMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        antisymmetrize(&DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(numerical_rank(&unit_rps(), DEFAULT_RANK_TOL).unwrap(), 2);
        assert_eq!(numerical_rank(&long_cycle_matrix(4).unwrap(), DEFAULT_RANK_TOL).unwrap(), 2);
        assert_eq!(numerical_rank(&long_cycle_matrix(5).unwrap(), DEFAULT_RANK_TOL).unwrap(), 4);
        assert_eq!(numerical_rank(&EvalMatrix::zeros(4), DEFAULT_RANK_TOL).unwrap(), 0);
        assert_eq!(numerical_rank(&EvalMatrix::zeros(1), DEFAULT_RANK_TOL).unwrap(), 0);
    }

    #[test]
    fn rank_agrees_with_singular_values() {
        // oracle: count singular values from an ordinary real SVD
        for seed in 0..10 {
            let n = 3 + seed as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
            let low = &f.column(0) * f.column(1).transpose();
            let a = antisymmetrize(&(low * 2.0)).unwrap();
            let sv = a.entries().clone().svd(false, false).singular_values;
            let max = sv.max();
            let expected = sv.iter().filter(|&&s| s > 1e-10 * max).count();
            assert_eq!(numerical_rank(&a, DEFAULT_RANK_TOL).unwrap(), expected);
        }
    }

    #[test]
    fn rps_schur_cross_products_reproduce_payoffs() {
        let e = schur_embedding(&unit_rps(), 2, DEFAULT_RANK_TOL).unwrap();
        let pts = e.points_2d();
        for i in 0..3 {
            for j in 0..3 {
                let c = pts[i][0] * pts[j][1] - pts[i][1] * pts[j][0];
                assert!((c - unit_rps().get(i, j)).abs() < 1e-8);
            }
        }
        assert!(e.recon_error < 1e-8);
        assert!((e.scales[0] - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn duplicate_scissors_keeps_hull_area() {
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
        let a3 = schur_hull_area(&unit_rps(), DEFAULT_RANK_TOL).unwrap();
        let a4 = schur_hull_area(&dup, DEFAULT_RANK_TOL).unwrap();
        // three points with pairwise cross product 1 span a triangle of area 3/2
        assert!((a3 - 1.5).abs() < 1e-12);
        assert!((a3 - a4).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_embeds_at_origin() {
        let z = EvalMatrix::zeros(4);
        for m in [EmbeddingMethod::Schur, EmbeddingMethod::Pca, EmbeddingMethod::Svd] {
            let e = embed(&z, m, 2, DEFAULT_RANK_TOL).unwrap();
            assert!(e.coords.iter().all(|&x| x == 0.0), "{m:?}");
        }
        assert!(schur_embedding(&z, 3, DEFAULT_RANK_TOL).is_err());
        assert!(schur_embedding(&z, 6, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn svd_and_pca_examples() {
        let a = unit_rps();
        let e = svd_embedding(&a, 2).unwrap();
        assert!(e.recon_error < 1e-8);
        let b = random_antisymmetric(7, 3);
        assert!(svd_embedding(&b, 7).unwrap().recon_error < 1e-10);
        assert!(pca_embedding(&b, 7).unwrap().recon_error < 1e-10);
        assert!(svd_embedding(&b, 0).is_err());
        assert!(pca_embedding(&b, 8).is_err());
    }

    #[test]
    fn hull_examples() {
        assert_eq!(hull_area_2d(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), 1.0);
        assert_eq!(hull_area_2d(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), 0.5);
        assert_eq!(hull_area_2d(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]), 0.0);
        assert_eq!(hull_area_2d(&[[0.5, 0.5]]), 0.0);
        assert_eq!(hull_area_2d(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [0.5, 0.5]]), 2.0);
    }

    #[test]
    fn redundancy_examples() {
        let rps = unit_rps();
        for i in 0..3 {
            assert!(!is_redundant(&rps, i, 1e-9).unwrap());
        }
        let dup = rps.submatrix(&[0, 1, 2, 2]);
        assert!(is_redundant(&dup, 3, 1e-9).unwrap());
        // midpoint of rock and paper, as a mixed agent
        let rows = rps.to_rows();
        let mid: Vec<f64> = (0..3).map(|j| 0.5 * (rows[0][j] + rows[1][j])).collect();
        let ext = rps.extended(&[mid], &[vec![0.0]]).unwrap();
        assert!(is_redundant(&ext, 3, 1e-9).unwrap());
        assert!(is_redundant(&EvalMatrix::zeros(1), 0, 1e-9).is_err());
    }

    #[test]
    fn synth_examples() {
        for kind in [SynthKind::Random, SynthKind::AlmostTransitive, SynthKind::AlmostCyclic, SynthKind::Mixed, SynthKind::AlmostMonotonic] {
            let a = synth_payoff(&SynthSpec::new(kind, 12, 0.02, 4)).unwrap();
            let m = a.entries();
            assert!((m + m.transpose()).abs().max() <= 1e-12);
            assert_eq!(synth_payoff(&SynthSpec::new(kind, 12, 0.02, 4)).unwrap(), a);
        }
        let t = synth_payoff(&SynthSpec::new(SynthKind::AlmostTransitive, 10, 0.0, 1)).unwrap();
        assert!(hodge_decompose(&t).cyclic.abs().max() < 1e-12);
        let c = synth_payoff(&SynthSpec::new(SynthKind::AlmostCyclic, 10, 0.0, 1)).unwrap();
        assert!(hodge_decompose(&c).transitive.abs().max() < 1e-12);
        let m = hodge_decompose(&synth_payoff(&SynthSpec::new(SynthKind::Mixed, 10, 0.0, 1)).unwrap());
        let ratio = m.transitive_norm() / m.cyclic_norm();
        assert!((ratio - 0.65 / 0.35).abs() < 1e-9);
        assert!(synth_payoff(&SynthSpec::new(SynthKind::Random, 1, 0.02, 0)).is_err());
        assert!(synth_payoff(&SynthSpec::new(SynthKind::Random, 5, -1.0, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn rank_is_even(n in 1usize..20, r in 1usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = DMatrix::from_fn(n, r.min(n), |_, _| rng.random_range(-1.0..1.0));
            let g = DMatrix::from_fn(n, r.min(n), |_, _| rng.random_range(-1.0..1.0));
            let a = antisymmetrize(&(&f * g.transpose())).unwrap();
            prop_assert_eq!(numerical_rank(&a, DEFAULT_RANK_TOL).unwrap() % 2, 0);
        }

        #[test]
        fn full_schur_reconstructs(n in 2usize..30, seed in any::<u64>()) {
            let a = random_antisymmetric(n, seed);
            let rank = numerical_rank(&a, DEFAULT_RANK_TOL).unwrap();
            let e = schur_embedding(&a, rank, DEFAULT_RANK_TOL).unwrap();
            prop_assert!(e.recon_error <= 1e-8);
            let basis_gram = e.basis.transpose() * &e.basis;
            prop_assert!((basis_gram - DMatrix::identity(rank, rank)).abs().max() <= 1e-8);
        }

        #[test]
        fn hull_area_is_rigid_invariant(pts in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 0..25), theta in 0.0f64..6.3, shift in 0usize..25) {
            let p: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
            let area = hull_area_2d(&p);
            let mut rotated: Vec<[f64; 2]> = p.iter().map(|q| [q[0] * theta.cos() - q[1] * theta.sin(), q[0] * theta.sin() + q[1] * theta.cos()]).collect();
            if !rotated.is_empty() {
                let k = shift % rotated.len();
                rotated.rotate_left(k);
            }
            prop_assert!((hull_area_2d(&rotated) - area).abs() <= 1e-12 * (1.0 + area));
        }

        #[test]
        fn mixtures_are_redundant(n in 3usize..9, seed in any::<u64>()) {
            let a = random_antisymmetric(n, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let mix = random_mixture_row(&a, &mut rng);
            let ext = a.extended(&[mix], &[vec![0.0]]).unwrap();
            prop_assert!(is_redundant(&ext, n, 1e-9).unwrap());
        }

        #[test]
        fn redundant_agent_keeps_rank_two_hull(n in 3usize..12, seed in any::<u64>()) {
            // disc-game populations have rank two, so the 2-D Schur embedding is full rank
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
            let a = EvalMatrix::new(DMatrix::from_fn(n, n, |i, j| crate::games::disc_phi(&pts[i], &pts[j])), 1e-12).unwrap();
            let mix = random_mixture_row(&a, &mut rng);
            let ext = a.extended(&[mix], &[vec![0.0]]).unwrap();
            let before = schur_hull_area(&a, DEFAULT_RANK_TOL).unwrap();
            let after = schur_hull_area(&ext, DEFAULT_RANK_TOL).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
            // the embedding recovers the agents up to an area-preserving map
            prop_assert!((before - hull_area_2d(&pts)).abs() < 1e-9);
        }
    }
}
