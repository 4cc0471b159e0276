//! Principal component projection.
//!
//! Small inputs use a dense covariance eigendecomposition; larger ones use
//! block subspace iteration on the centred data, which never forms the
//! `D × D` covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Inputs up to this dimension use the dense eigensolver.
const DENSE_LIMIT: usize = 512;
const OVERSAMPLE: usize = 10;
const MAX_ITERS: usize = 200;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    mean: Vec<f64>,
    /// `k` unit-norm components of length `D`, by decreasing variance.
    components: Vec<Vec<f64>>,
    variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub pca: Pca,
    pub warnings: Vec<String>,
}

impl Pca {
    /// Fits `k` components on the rows of `data`. Each component's
    /// largest-magnitude entry is made positive so the fit is deterministic.
    pub fn fit(data: &[Vec<f64>], k: usize, seed: u64) -> Result<PcaFit> {
        let n = data.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = data[0].len();
        if let Some(bad) = data.iter().find(|r| r.len() != d) {
            return Err(Error::shape("PCA row length", d, bad.len()));
        }
        if k == 0 || k > d {
            return Err(Error::InvalidArgument(format!(
                "cannot fit {k} components to {d}-dimensional data"
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PCA input contains a non-finite value".into()));
        }
        let mut mean = vec![0.0; d];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let centred = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);

        let (mut components, variances) = if d <= DENSE_LIMIT {
            dense_components(&centred, k)
        } else {
            subspace_components(&centred, k, seed)
        };
        for c in &mut components {
            let pivot = c
                .iter()
                .copied()
                .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
            if pivot < 0.0 {
                for v in c.iter_mut() {
                    *v = -*v;
                }
            }
        }

        let mut warnings = Vec::new();
        let total: f64 = variances.iter().sum();
        let scale = total.max(f64::MIN_POSITIVE);
        for (i, &v) in variances.iter().enumerate() {
            if v <= 1e-12 * scale || v <= f64::EPSILON {
                warnings.push(format!("principal component {i} has zero variance"));
            }
        }
        Ok(PcaFit {
            pca: Self {
                mean,
                components,
                variances,
            },
            warnings,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub(crate) fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.mean
            .iter()
            .chain(self.components.iter().flatten())
            .chain(&self.variances)
            .copied()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::shape("PCA input length", self.input_dim(), x.len()));
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((ci, xi), mi)| ci * (xi - mi))
                    .sum()
            })
            .collect())
    }
}

fn sorted_top(values: &[f64], vectors: &DMatrix<f64>, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let comps = order[..k]
        .iter()
        .map(|&i| vectors.column(i).iter().copied().collect())
        .collect();
    let vars = order[..k].iter().map(|&i| values[i].max(0.0)).collect();
    (comps, vars)
}

fn dense_components(centred: &DMatrix<f64>, k: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = centred.nrows() as f64;
    let cov = centred.tr_mul(centred) / n;
    let eig = SymmetricEigen::new(cov);
    sorted_top(eig.eigenvalues.as_slice(), &eig.eigenvectors, k)
}

fn subspace_components(centred: &DMatrix<f64>, k: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = centred.nrows() as f64;
    let d = centred.ncols();
    let b = (k + OVERSAMPLE).min(d);
    let mut rng = rng_from_seed(seed);
    let start = DMatrix::from_fn(d, b, |_, _| rng.gen::<f64>() - 0.5);
    let mut q = start.qr().q();
    let mut prev: Option<Vec<f64>> = None;
    let mut ritz = (Vec::new(), Vec::new());
    for _ in 0..MAX_ITERS {
        // Covariance applied as Xᵀ(XQ)/n.
        let z = centred.tr_mul(&(centred * &q)) / n;
        q = z.qr().q();
        let cz = centred.tr_mul(&(centred * &q)) / n;
        let small = q.tr_mul(&cz);
        let eig = SymmetricEigen::new(small);
        let rotated = &q * &eig.eigenvectors;
        ritz = sorted_top(eig.eigenvalues.as_slice(), &rotated, k);
        let converged = prev.as_ref().is_some_and(|p| {
            p.iter()
                .zip(&ritz.1)
                .all(|(a, b)| (a - b).abs() <= RESIDUAL_TOL * b.abs().max(1e-300))
        });
        if converged {
            break;
        }
        prev = Some(ritz.1.clone());
    }
    ritz
}
