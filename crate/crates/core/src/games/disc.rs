use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Game;
use crate::error::{Error, Result};

/// Disc game payoff `v1*w2 - v2*w1`.
pub fn disc_phi(v: &[f64; 2], w: &[f64; 2]) -> f64 {
    v[0] * w[1] - v[1] * w[0]
}

/// Sum of disc games over consecutive coordinate pairs: `v^T Omega w`.
pub fn symplectic_phi(v: &[f64], w: &[f64]) -> Result<f64> {
    if v.len() % 2 != 0 || v.len() != w.len() {
        return Err(Error::Dimension(format!(
            "symplectic payoff needs equal even dimensions, got {} and {}",
            v.len(),
            w.len()
        )));
    }
    Ok(v.chunks_exact(2)
        .zip(w.chunks_exact(2))
        .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
        .sum())
}

/// `Omega w`, the gradient of `v^T Omega w` in `v`.
fn omega_times(w: &[f64]) -> Vec<f64> {
    w.chunks_exact(2).flat_map(|b| [b[1], -b[0]]).collect()
}

fn project_ball(params: &mut [f64], radius_sq: f64) {
    let norm_sq: f64 = params.iter().map(|x| x * x).sum();
    if norm_sq > radius_sq {
        let s = (radius_sq / norm_sq).sqrt();
        params.iter_mut().for_each(|x| *x *= s);
    }
}

fn random_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let r2: f64 = x.iter().map(|t| t * t).sum();
        if r2 <= 1.0 {
            return x.into_iter().map(|t| t * radius).collect();
        }
    }
}

/// The disc game on the plane, optionally restricted to the ball `|x|^2 <= k`.
#[derive(Debug, Clone)]
pub struct DiscGame {
    id: String,
    radius_sq: Option<f64>,
}

impl DiscGame {
    pub fn unbounded() -> Self {
        Self {
            id: "disc".into(),
            radius_sq: None,
        }
    }

    pub fn ball(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("disc radius^2 must be positive, got {k}")));
        }
        Ok(Self {
            id: format!("disc:{k}"),
            radius_sq: Some(k),
        })
    }
}

impl Game for DiscGame {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        disc_phi(&[v[0], v[1]], &[w[0], w[1]])
    }

    fn grad(&self, _v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(omega_times(w))
    }

    fn project(&self, params: &mut [f64]) -> Result<()> {
        if let Some(r2) = self.radius_sq {
            project_ball(params, r2);
        }
        Ok(())
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        random_in_ball(rng, 2, self.radius_sq.map_or(1.0, f64::sqrt))
    }
}

/// `phi(v, w) = v^T Omega_{2d} w` on `R^{2d}`.
#[derive(Debug, Clone)]
pub struct SymplecticGame {
    id: String,
    d: usize,
}

impl SymplecticGame {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("symplectic dimension must be positive".into()));
        }
        Ok(Self {
            id: format!("symplectic:{d}"),
            d,
        })
    }
}

impl Game for SymplecticGame {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        2 * self.d
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        v.chunks_exact(2)
            .zip(w.chunks_exact(2))
            .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
            .sum()
    }

    fn grad(&self, _v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
        Some(omega_times(w))
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        random_in_ball(rng, 2 * self.d, 1.0)
    }
}

type FeatureMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type OddFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One summand `g(f(v)^T Omega f(w))` of a deformed symplectic game. `odd` must satisfy
/// `g(-x) = -g(x)` and `map` must return an even-length vector.
#[derive(Clone)]
pub struct DeformedTerm {
    pub map: FeatureMap,
    pub odd: OddFn,
}

impl DeformedTerm {
    pub fn new(
        map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        odd: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            map: Arc::new(map),
            odd: Arc::new(odd),
        }
    }
}

/// `phi(v, w) = sum_i g_i(f_i(v)^T Omega f_i(w))` for user-supplied maps and odd functions.
#[derive(Clone)]
pub struct DeformedSymplectic {
    id: String,
    param_dim: usize,
    terms: Vec<DeformedTerm>,
}

impl DeformedSymplectic {
    pub fn new(id: impl Into<String>, param_dim: usize, terms: Vec<DeformedTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("deformed symplectic game needs at least one term".into()));
        }
        Ok(Self {
            id: id.into(),
            param_dim,
            terms,
        })
    }

    /// Identity map and identity odd function: the plain symplectic game.
    pub fn identity(d: usize) -> Result<Self> {
        Self::new(format!("deformed-symplectic:{d}"), 2 * d, vec![DeformedTerm::new(|v| v.to_vec(), |x| x)])
    }
}

impl Game for DeformedSymplectic {
    fn id(&self) -> &str {
        &self.id
    }

    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn phi(&self, v: &[f64], w: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let inner = symplectic_phi(&(t.map)(v), &(t.map)(w)).unwrap_or(f64::NAN);
                (t.odd)(inner)
            })
            .sum()
    }

    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        random_in_ball(rng, self.param_dim, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn disc_examples() {
        assert_eq!(disc_phi(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(disc_phi(&[0.7, -0.3], &[0.7, -0.3]), 0.0);
        assert_eq!(disc_phi(&[2.0, 3.0], &[4.0, 5.0]), -2.0);
    }

    #[test]
    fn symplectic_examples() {
        let (v, w) = ([0.3, -1.2], [2.0, 0.5]);
        assert_eq!(symplectic_phi(&v, &w).unwrap(), disc_phi(&v, &w));
        assert_eq!(symplectic_phi(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(), 0.0);
        assert_eq!(symplectic_phi(&[1.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 1.0]).unwrap(), 2.0);
        assert!(symplectic_phi(&[1.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn symplectic_gradient_matches_difference() {
        let g = SymplecticGame::new(2).unwrap();
        let v = [0.3, -0.1, 0.8, 0.2];
        let w = [1.0, -2.0, 0.5, 0.7];
        let grad = g.grad(&v, &w).unwrap();
        for i in 0..4 {
            let mut e = v;
            e[i] += 1.0;
            // phi is linear in v, so a unit step recovers the partial exactly
            assert!((g.phi(&e, &w) - g.phi(&v, &w) - grad[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_projection() {
        let g = DiscGame::ball(4.0).unwrap();
        let mut p = [3.0, 4.0];
        g.project(&mut p).unwrap();
        assert!((p[0] - 1.2).abs() < 1e-12 && (p[1] - 1.6).abs() < 1e-12);
        let mut q = [0.5, 0.5];
        g.project(&mut q).unwrap();
        assert_eq!(q, [0.5, 0.5]);
    }

    #[test]
    fn deformed_game_is_antisymmetric() {
        let identity = DeformedSymplectic::identity(2).unwrap();
        let plain = SymplecticGame::new(2).unwrap();
        let bent = DeformedSymplectic::new(
            "bent",
            3,
            vec![
                DeformedTerm::new(|v| vec![v[0].sin(), v[1] * v[2], v[2], v[0] + v[1]], f64::tanh),
                DeformedTerm::new(|v| vec![v[0] * v[0], v[1]], |x| x * x * x),
            ],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let v = identity.random_params(&mut rng);
            let w = identity.random_params(&mut rng);
            assert!((identity.phi(&v, &w) - plain.phi(&v, &w)).abs() < 1e-15);
            let (a, b) = (bent.random_params(&mut rng), bent.random_params(&mut rng));
            assert!((bent.phi(&a, &b) + bent.phi(&b, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn disc_payoff_integrates_to_zero_over_the_disc() {
        let g = DiscGame::ball(1.0).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = g.random_params(&mut rng);
            let samples: Vec<f64> = (0..20_000).map(|_| g.phi(&v, &g.random_params(&mut rng))).collect();
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!(mean.abs() <= 3.0 * (var / n).sqrt(), "mean {mean} too far from zero");
        }
    }
}
