//! Regression over formula space.
//!
//! Every method sees formulae only through the kernel: fitting consumes a
//! Gram matrix over the training corpus and prediction consumes the raw
//! kernel values between a query formula and each training formula, taken on
//! the same trajectory sample.
//!
//! | method | Gram kind | prediction |
//! |--------|-----------|------------|
//! | NW  | Gaussian(σ) | `Σ w_i y_i / Σ w_i`, `w_i = g(φ, x_i)` |
//! | KNN | any         | mean target of the `k` nearest under `d² = k'(φ,φ) + k'(x,x) - 2k'(φ,x)` (cosine distance `2 - 2k` for normalized kinds), ties to the lower index |
//! | KRR | Gaussian(σ) | `Σ α_i g(φ, x_i)` with `(G + λI)α = y` |
//! | SVR | Gaussian(σ) | `Σ (α_i - α*_i) g(φ, x_i) + b` |
//!
//! Satisfaction-probability predictions are clamped to `[0, 1]`.

pub mod krr;
pub mod svr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{Embedding, GramKind, GramMatrix, KernelError, KernelSample, Target, DEGENERATE_EPS};
use crate::par::{self, Execution};
use crate::rng::stream_rng;
use crate::stl::Formula;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("{0} targets for {1} formulas")]
    LengthMismatch(usize, usize),
    #[error("target {0} is not finite")]
    NonFiniteTarget(usize),
    #[error("satisfaction probability target {0} lies outside [0, 1]")]
    ProbabilityRange(usize),
    #[error("{method} needs a Gaussian Gram matrix, got {kind}")]
    WrongKind { method: &'static str, kind: &'static str },
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("ridge system is not positive definite, even after jitter")]
    NotPositiveDefinite,
    #[error("SVR did not converge in {iterations} iterations (KKT violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("query formula is degenerate on the kernel sample")]
    DegenerateQuery,
    #[error("query has {0} kernel values, model was trained on {1} formulas")]
    QueryLength(usize, usize),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub formulas: Vec<Formula>,
    pub targets: Vec<f64>,
    pub target: Target,
}

impl TrainingSet {
    pub fn new(formulas: Vec<Formula>, targets: Vec<f64>, target: Target) -> Result<Self, RegressionError> {
        validate_targets(&targets, formulas.len(), target)?;
        Ok(TrainingSet {
            formulas,
            targets,
            target,
        })
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> TrainingSet {
        TrainingSet {
            formulas: indices.iter().map(|i| self.formulas[*i].clone()).collect(),
            targets: indices.iter().map(|i| self.targets[*i]).collect(),
            target: self.target,
        }
    }
}

fn validate_targets(targets: &[f64], n: usize, target: Target) -> Result<(), RegressionError> {
    if targets.len() != n {
        return Err(RegressionError::LengthMismatch(targets.len(), n));
    }
    if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
        return Err(RegressionError::NonFiniteTarget(i));
    }
    if target == Target::Satprob {
        if let Some(i) = targets.iter().position(|y| !(0.0..=1.0).contains(y)) {
            return Err(RegressionError::ProbabilityRange(i));
        }
    }
    Ok(())
}

/// Shuffled split; the first `round(fraction · n)` shuffled indices train.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), RegressionError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(RegressionError::Fraction(fraction));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(seed, 0));
    let cut = (fraction * n as f64).round() as usize;
    let test = idx.split_off(cut);
    Ok((idx, test))
}

pub fn split(set: &TrainingSet, fraction: f64, seed: u64) -> Result<(TrainingSet, TrainingSet), RegressionError> {
    let (train, test) = split_indices(set.len(), fraction, seed)?;
    Ok((set.subset(&train), set.subset(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nw,
    Knn,
    Krr,
    Svr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Nw, Method::Knn, Method::Krr, Method::Svr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nw => "nw",
            Method::Knn => "knn",
            Method::Krr => "krr",
            Method::Svr => "svr",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nw" => Ok(Method::Nw),
            "knn" => Ok(Method::Knn),
            "krr" => Ok(Method::Krr),
            "svr" => Ok(Method::Svr),
            _ => Err(format!("unknown method {s:?} (expected nw, knn, krr or svr)")),
        }
    }
}

/// Hyperparameters other than the bandwidth, which comes with the Gram kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub k: usize,
    pub lambda: f64,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            k: 5,
            lambda: 1e-6,
            c: 10.0,
            epsilon: 0.01,
            tol: 1e-4,
            max_iter: 100_000,
        }
    }
}

/// Bandwidth grid: 25 log-spaced points from 0.05 to 5.
pub fn default_sigma_grid() -> Vec<f64> {
    logspace(0.05, 5.0, 25)
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Fitted {
    /// NW and KNN keep the training targets.
    Targets {
        targets: Vec<f64>,
    },
    Ridge {
        alpha: Vec<f64>,
        jitter: f64,
    },
    Svr {
        coefficients: Vec<f64>,
        bias: f64,
        iterations: usize,
        violation: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub method: Method,
    pub hyper: Hyper,
    pub kind: GramKind,
    pub target: Target,
    /// Raw self-kernels of the training formulas.
    pub train_self_kernels: Vec<f64>,
    pub fitted: Fitted,
    pub gram_fingerprint: String,
}

/// Fits `method` on a Gram matrix over the training formulas.
pub fn fit(
    method: Method,
    hyper: Hyper,
    gram: &GramMatrix,
    targets: &[f64],
    target: Target,
) -> Result<Regressor, RegressionError> {
    validate_targets(targets, gram.size(), target)?;
    if gram.size() == 0 {
        return Err(RegressionError::LengthMismatch(0, 0));
    }
    if method != Method::Knn && !matches!(gram.kind(), GramKind::Gaussian { .. }) {
        return Err(RegressionError::WrongKind {
            method: method.name(),
            kind: gram.kind().name(),
        });
    }
    let fitted = match method {
        Method::Nw => Fitted::Targets {
            targets: targets.to_vec(),
        },
        Method::Knn => {
            if hyper.k == 0 {
                return Err(RegressionError::Hyperparameter("k must be at least 1".into()));
            }
            Fitted::Targets {
                targets: targets.to_vec(),
            }
        }
        Method::Krr => {
            if !(hyper.lambda >= 0.0 && hyper.lambda.is_finite()) {
                return Err(RegressionError::Hyperparameter(format!(
                    "lambda must be >= 0, got {}",
                    hyper.lambda
                )));
            }
            let sol = krr::solve(gram, hyper.lambda, targets).ok_or(RegressionError::NotPositiveDefinite)?;
            Fitted::Ridge {
                alpha: sol.alpha,
                jitter: sol.jitter,
            }
        }
        Method::Svr => {
            if !(hyper.c > 0.0 && hyper.epsilon >= 0.0) {
                return Err(RegressionError::Hyperparameter(format!(
                    "need C > 0 and epsilon >= 0, got C={} epsilon={}",
                    hyper.c, hyper.epsilon
                )));
            }
            let sol = svr::SvrProblem {
                kernel: gram.entries(),
                targets,
                c: hyper.c,
                epsilon: hyper.epsilon,
                tol: hyper.tol,
                max_iter: hyper.max_iter,
            }
            .solve();
            if !sol.converged {
                return Err(RegressionError::NotConverged {
                    iterations: sol.iterations,
                    violation: sol.violation,
                });
            }
            Fitted::Svr {
                coefficients: sol.coefficients(),
                bias: sol.bias,
                iterations: sol.iterations,
                violation: sol.violation,
            }
        }
    };
    Ok(Regressor {
        method,
        hyper,
        kind: gram.kind(),
        target,
        train_self_kernels: gram.self_kernels().to_vec(),
        fitted,
        gram_fingerprint: gram.fingerprint().to_string(),
    })
}

impl Regressor {
    pub fn training_size(&self) -> usize {
        self.train_self_kernels.len()
    }

    pub fn sigma(&self) -> Option<f64> {
        self.kind.sigma()
    }

    /// Number of nonzero dual coefficients (all points for non-sparse methods).
    pub fn support_size(&self) -> usize {
        match &self.fitted {
            Fitted::Svr { coefficients, .. } => coefficients.iter().filter(|c| **c != 0.0).count(),
            _ => self.training_size(),
        }
    }

    /// Predicts from the raw kernel values between the query and each
    /// training formula, plus the query's raw self-kernel.
    pub fn predict_raw(&self, cross: &[f64], self_kernel: f64) -> Result<f64, RegressionError> {
        let n = self.training_size();
        if cross.len() != n {
            return Err(RegressionError::QueryLength(cross.len(), n));
        }
        if self.kind != GramKind::Raw && self_kernel <= DEGENERATE_EPS {
            return Err(RegressionError::DegenerateQuery);
        }
        let kernel_row = || -> Vec<f64> {
            cross
                .iter()
                .zip(&self.train_self_kernels)
                .map(|(c, s)| self.kind.from_raw(*c, self_kernel, *s))
                .collect()
        };
        let y = match (&self.fitted, self.method) {
            (Fitted::Targets { targets }, Method::Nw) => {
                let sigma = self.kind.sigma().expect("NW is fitted on a Gaussian kind");
                // softmax of the Gaussian exponent, stable for tiny bandwidths
                let logw: Vec<f64> = cross
                    .iter()
                    .zip(&self.train_self_kernels)
                    .map(|(c, s)| {
                        let k = GramKind::Normalized.from_raw(*c, self_kernel, *s);
                        -(2.0 - 2.0 * k) / (2.0 * sigma * sigma)
                    })
                    .collect();
                let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (num, den) = logw.iter().zip(targets).fold((0.0, 0.0), |(num, den), (l, y)| {
                    let w = (l - top).exp();
                    (num + w * y, den + w)
                });
                num / den
            }
            (Fitted::Targets { targets }, Method::Knn) => {
                let dist: Vec<f64> = match self.kind {
                    GramKind::Raw => cross
                        .iter()
                        .zip(&self.train_self_kernels)
                        .map(|(c, s)| self_kernel + s - 2.0 * c)
                        .collect(),
                    _ => cross
                        .iter()
                        .zip(&self.train_self_kernels)
                        .map(|(c, s)| 2.0 - 2.0 * GramKind::Normalized.from_raw(*c, self_kernel, *s))
                        .collect(),
                };
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|a, b| dist[*a].total_cmp(&dist[*b]));
                let k = self.hyper.k.min(n);
                order[..k].iter().map(|i| targets[*i]).sum::<f64>() / k as f64
            }
            (Fitted::Ridge { alpha, .. }, _) => kernel_row().iter().zip(alpha).map(|(g, a)| g * a).sum(),
            (Fitted::Svr { coefficients, bias, .. }, _) => {
                kernel_row().iter().zip(coefficients).map(|(g, a)| g * a).sum::<f64>() + bias
            }
            _ => unreachable!("fitted state always matches the method"),
        };
        Ok(match self.target {
            Target::Satprob => y.clamp(0.0, 1.0),
            Target::Robustness => y,
        })
    }

    /// Predictions for the training formulas themselves, from a raw Gram
    /// matrix over the same corpus.
    pub fn predict_training(&self, raw_gram: &GramMatrix) -> Result<Vec<f64>, RegressionError> {
        if raw_gram.kind() != GramKind::Raw {
            return Err(RegressionError::WrongKind {
                method: "training prediction",
                kind: raw_gram.kind().name(),
            });
        }
        let n = raw_gram.size();
        (0..n)
            .map(|i| {
                let row: Vec<f64> = (0..n).map(|j| raw_gram.get(i, j)).collect();
                self.predict_raw(&row, raw_gram.self_kernels()[i])
            })
            .collect()
    }
}

/// Training formulas embedded on the kernel sample, ready for queries.
pub struct KernelBasis<'a> {
    sample: &'a KernelSample,
    embeddings: Vec<Embedding>,
}

impl<'a> KernelBasis<'a> {
    pub fn new(sample: &'a KernelSample, formulas: &[Formula], exec: Execution) -> Result<Self, RegressionError> {
        Ok(KernelBasis {
            sample,
            embeddings: sample.embed_all_with(formulas, exec)?,
        })
    }

    pub fn sample(&self) -> &KernelSample {
        self.sample
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    /// Raw Gram matrix of the basis formulas.
    pub fn raw_gram(&self, formulas: Vec<Formula>, exec: Execution) -> Result<GramMatrix, RegressionError> {
        Ok(GramMatrix::from_embeddings(
            self.sample,
            formulas,
            &self.embeddings,
            GramKind::Raw,
            exec,
        )?)
    }

    /// Raw cross kernels `k'(φ, x_i)` and `k'(φ, φ)`.
    pub fn query(&self, phi: &Formula) -> Result<(Vec<f64>, f64), RegressionError> {
        let e = self.sample.embed(phi)?;
        Ok((self.sample.cross(&e, &self.embeddings), e.self_kernel()))
    }

    /// Raw cross-kernel rows for many query formulas.
    pub fn queries(&self, formulas: &[Formula], exec: Execution) -> Result<Vec<(Vec<f64>, f64)>, RegressionError> {
        par::try_map_range(exec, formulas.len(), |i| self.query(&formulas[i]))
    }
}

pub fn predict(reg: &Regressor, phi: &Formula, basis: &KernelBasis<'_>) -> Result<f64, RegressionError> {
    let (cross, self_kernel) = basis.query(phi)?;
    reg.predict_raw(&cross, self_kernel)
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len(), "prediction/target length mismatch");
    predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / targets.len() as f64
}

pub fn evaluate_mse(reg: &Regressor, test: &TrainingSet, basis: &KernelBasis<'_>) -> Result<f64, RegressionError> {
    let rows = basis.queries(&test.formulas, Execution::default())?;
    let preds = rows
        .iter()
        .map(|(c, s)| reg.predict_raw(c, *s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mse(&preds, &test.targets))
}
