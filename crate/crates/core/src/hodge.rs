//! Combinatorial Hodge decomposition of antisymmetric matrices under the uniform
//! measure: `A = grad(div A) + cyclic`.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{fmt_f64, write_matrix_csv, EvalMatrix};

/// Largest population for which [`curl`] materializes the full tensor.
pub const CURL_MATERIALIZE_MAX: usize = 64;

/// `(1/n) A 1`.
pub fn divergence(a: &EvalMatrix) -> Vec<f64> {
    let n = a.n() as f64;
    a.entries().row_iter().map(|r| r.sum() / n).collect()
}

/// `r 1^T - 1 r^T`.
pub fn grad_flow(r: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), r.len(), |i, j| r[i] - r[j])
}

/// Curl `T[i][j][k] = A[i][j] + A[j][k] - A[i][k]`.
#[derive(Debug, Clone)]
pub enum Curl {
    Dense { n: usize, values: Vec<f64> },
    /// Entries evaluated on demand for large populations.
    Lazy(DMatrix<f64>),
}

impl Curl {
    pub fn n(&self) -> usize {
        match self {
            Curl::Dense { n, .. } => *n,
            Curl::Lazy(a) => a.nrows(),
        }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        match self {
            Curl::Dense { n, values } => values[(i * n + j) * n + k],
            Curl::Lazy(a) => curl_entry(a, i, j, k),
        }
    }

    /// Largest absolute entry; `O(n^3)` either way.
    pub fn max_abs(&self) -> f64 {
        match self {
            Curl::Dense { values, .. } => values.iter().fold(0.0, |m, x| m.max(x.abs())),
            Curl::Lazy(a) => {
                let n = a.nrows();
                let mut m: f64 = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            m = m.max(curl_entry(a, i, j, k).abs());
                        }
                    }
                }
                m
            }
        }
    }
}

fn curl_entry(a: &DMatrix<f64>, i: usize, j: usize, k: usize) -> f64 {
    a[(i, j)] + a[(j, k)] - a[(i, k)]
}

pub fn curl(a: &EvalMatrix) -> Curl {
    curl_of(a.entries())
}

pub fn curl_of(a: &DMatrix<f64>) -> Curl {
    let n = a.nrows();
    if n > CURL_MATERIALIZE_MAX {
        return Curl::Lazy(a.clone());
    }
    let mut values = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                values.push(curl_entry(a, i, j, k));
            }
        }
    }
    Curl::Dense { n, values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HodgeParts {
    pub transitive: DMatrix<f64>,
    pub cyclic: DMatrix<f64>,
    /// The divergence of the input, i.e. the ratings generating the transitive part.
    pub ratings: Vec<f64>,
}

impl HodgeParts {
    pub fn transitive_norm(&self) -> f64 {
        self.transitive.norm()
    }

    pub fn cyclic_norm(&self) -> f64 {
        self.cyclic.norm()
    }

    /// Writes `transitive.csv`, `cyclic.csv` and `ratings.csv` into `dir`.
    pub fn write_csv(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_matrix_csv(&self.transitive, std::fs::File::create(dir.join("transitive.csv"))?)?;
        write_matrix_csv(&self.cyclic, std::fs::File::create(dir.join("cyclic.csv"))?)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join("ratings.csv"))?);
        for r in &self.ratings {
            writeln!(out, "{}", fmt_f64(*r))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn hodge_decompose(a: &EvalMatrix) -> HodgeParts {
    let ratings = divergence(a);
    let transitive = grad_flow(&ratings);
    let cyclic = a.entries() - &transitive;
    HodgeParts {
        transitive,
        cyclic,
        ratings,
    }
}

/// Decomposes a plain matrix after checking antisymmetry at `tol`.
pub fn hodge_decompose_matrix(a: &DMatrix<f64>, tol: f64) -> Result<HodgeParts> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    Ok(hodge_decompose(&EvalMatrix::new(a.clone(), tol)?))
}
