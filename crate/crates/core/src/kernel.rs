//! Monte-Carlo STL kernel.
//!
//! For a fixed trajectory sample `ξ_1..ξ_M` on a shared grid with step `h`,
//!
//! ```text
//! k'(φ, ψ) = (1/M) Σ_m h Σ_t ρ(φ, ξ_m, t) ρ(ψ, ξ_m, t)
//! k(φ, ψ)  = k'(φ, ψ) / sqrt(k'(φ, φ) k'(ψ, ψ))
//! g(φ, ψ)  = exp(-(2 - 2 k(φ, ψ)) / (2 σ²))
//! ```
//!
//! The time sum is a left-Riemann sum over every grid point. Because all three
//! quantities are computed on the same sample, `k` is an exact cosine between
//! two vectors and Gram matrices are positive semi-definite up to rounding.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::par::{self, Execution};
use crate::stl::{boolean_signal, robustness_signal, Formula};
use crate::trajectory::Trajectory;

/// Self-kernels at or below this are treated as `ρ ≡ 0` on the sample.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel sample is empty")]
    EmptySample,
    #[error("sample trajectories do not share one grid")]
    GridMismatch,
    #[error("formula {index} contains `true`, whose robustness is infinite")]
    ContainsTrue { index: usize },
    #[error("formula {index} has infinite robustness on the sample: a time window runs past the end of the grid")]
    Unbounded { index: usize },
    #[error("degenerate formulae (robustness identically zero on the sample) at indices {0:?}")]
    Degenerate(Vec<usize>),
    #[error("time index {index} out of range for a grid of {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("cannot derive a {to} Gram matrix from a {from} one")]
    KindConversion { from: &'static str, to: &'static str },
    #[error("malformed Gram matrix: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GramKind {
    Raw,
    Normalized,
    Gaussian { sigma: f64 },
}

impl GramKind {
    pub fn name(&self) -> &'static str {
        match self {
            GramKind::Raw => "raw",
            GramKind::Normalized => "normalized",
            GramKind::Gaussian { .. } => "gaussian",
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            GramKind::Gaussian { sigma } => Some(*sigma),
            _ => None,
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        match self {
            GramKind::Gaussian { sigma } if !(*sigma > 0.0 && sigma.is_finite()) => {
                Err(KernelError::InvalidSigma(*sigma))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value of this kind from the raw cross term and both raw
    /// self-kernels.
    pub fn from_raw(&self, cross: f64, self_a: f64, self_b: f64) -> f64 {
        match self {
            GramKind::Raw => cross,
            GramKind::Normalized => normalize(cross, self_a, self_b),
            GramKind::Gaussian { sigma } => gaussian(normalize(cross, self_a, self_b), *sigma),
        }
    }
}

fn normalize(cross: f64, self_a: f64, self_b: f64) -> f64 {
    // rounding can push |k| a hair past 1 for near-parallel signals
    (cross / (self_a * self_b).sqrt()).clamp(-1.0, 1.0)
}

fn gaussian(k: f64, sigma: f64) -> f64 {
    (-(2.0 - 2.0 * k) / (2.0 * sigma * sigma)).exp()
}

/// Robustness signals of one formula over a whole sample, row-major
/// `[trajectory][grid time]`, plus the raw self-kernel.
#[derive(Debug, Clone)]
pub struct Embedding {
    values: Vec<f64>,
    self_kernel: f64,
}

impl Embedding {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn self_kernel(&self) -> f64 {
        self.self_kernel
    }

    pub fn is_degenerate(&self) -> bool {
        self.self_kernel <= DEGENERATE_EPS
    }
}

/// The trajectory sample a kernel is integrated over.
#[derive(Debug, Clone)]
pub struct KernelSample {
    trajectories: Vec<Trajectory>,
    fingerprint: String,
}

impl KernelSample {
    pub fn new(trajectories: Vec<Trajectory>) -> Result<Self, KernelError> {
        let first = trajectories.first().ok_or(KernelError::EmptySample)?;
        if trajectories.iter().any(|t| !t.same_grid(first)) {
            return Err(KernelError::GridMismatch);
        }
        let mut hasher = Sha256::new();
        hasher.update(first.t0().to_le_bytes());
        hasher.update(first.h().to_le_bytes());
        hasher.update((first.len() as u64).to_le_bytes());
        for t in &trajectories {
            for v in t.values() {
                hasher.update(v.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        let fingerprint = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        Ok(KernelSample {
            trajectories,
            fingerprint,
        })
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// Number of trajectories `M`.
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn grid_len(&self) -> usize {
        self.trajectories[0].len()
    }

    pub fn h(&self) -> f64 {
        self.trajectories[0].h()
    }

    /// Hex SHA-256 prefix of the sample grid and values.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn embed(&self, f: &Formula) -> Result<Embedding, KernelError> {
        if f.contains_true() {
            return Err(KernelError::ContainsTrue { index: 0 });
        }
        let mut values = Vec::with_capacity(self.len() * self.grid_len());
        for xi in &self.trajectories {
            values.extend(robustness_signal(f, xi));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KernelError::Unbounded { index: 0 });
        }
        let mut emb = Embedding {
            values,
            self_kernel: 0.0,
        };
        emb.self_kernel = self.inner(&emb, &emb);
        Ok(emb)
    }

    pub fn embed_all(&self, formulas: &[Formula]) -> Result<Vec<Embedding>, KernelError> {
        self.embed_all_with(formulas, Execution::default())
    }

    pub fn embed_all_with(&self, formulas: &[Formula], exec: Execution) -> Result<Vec<Embedding>, KernelError> {
        par::try_map_range(exec, formulas.len(), |i| {
            self.embed(&formulas[i]).map_err(|e| match e {
                KernelError::ContainsTrue { .. } => KernelError::ContainsTrue { index: i },
                KernelError::Unbounded { .. } => KernelError::Unbounded { index: i },
                other => other,
            })
        })
    }

    /// Raw kernel between two embeddings of this sample, summed in a fixed
    /// order.
    pub fn inner(&self, a: &Embedding, b: &Embedding) -> f64 {
        let t = self.grid_len();
        let h = self.h();
        let mut total = 0.0;
        for (ra, rb) in a.values.chunks_exact(t).zip(b.values.chunks_exact(t)) {
            let row: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            total += h * row;
        }
        total / self.len() as f64
    }

    pub fn raw_kernel(&self, phi: &Formula, psi: &Formula) -> Result<f64, KernelError> {
        let a = self.embed(phi)?;
        let b = self.embed(psi)?;
        Ok(self.inner(&a, &b))
    }

    pub fn normalized_kernel(&self, phi: &Formula, psi: &Formula) -> Result<f64, KernelError> {
        self.kernel_of_kind(phi, psi, GramKind::Normalized)
    }

    pub fn gaussian_kernel(&self, phi: &Formula, psi: &Formula, sigma: f64) -> Result<f64, KernelError> {
        self.kernel_of_kind(phi, psi, GramKind::Gaussian { sigma })
    }

    fn kernel_of_kind(&self, phi: &Formula, psi: &Formula, kind: GramKind) -> Result<f64, KernelError> {
        kind.validate()?;
        let a = self.embed(phi)?;
        let b = self.embed(psi)?;
        let degenerate: Vec<usize> = [&a, &b]
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_degenerate())
            .map(|(i, _)| i)
            .collect();
        if !degenerate.is_empty() {
            return Err(KernelError::Degenerate(degenerate));
        }
        Ok(kind.from_raw(self.inner(&a, &b), a.self_kernel, b.self_kernel))
    }

    /// Raw kernel values between `query` and each of `basis`.
    pub fn cross(&self, query: &Embedding, basis: &[Embedding]) -> Vec<f64> {
        basis.iter().map(|b| self.inner(query, b)).collect()
    }

    pub fn gram(&self, corpus: &[Formula], kind: GramKind) -> Result<GramMatrix, KernelError> {
        self.gram_with(corpus, kind, Execution::default())
    }

    pub fn gram_with(&self, corpus: &[Formula], kind: GramKind, exec: Execution) -> Result<GramMatrix, KernelError> {
        kind.validate()?;
        let embeddings = self.embed_all_with(corpus, exec)?;
        GramMatrix::from_embeddings(self, corpus.to_vec(), &embeddings, kind, exec)
    }

    fn check_index(&self, t_index: usize) -> Result<(), KernelError> {
        if t_index < self.grid_len() {
            Ok(())
        } else {
            Err(KernelError::IndexOutOfRange {
                index: t_index,
                len: self.grid_len(),
            })
        }
    }

    /// Monte-Carlo mean of `ρ(φ, ξ, t)` with its standard error.
    pub fn expected_robustness(&self, phi: &Formula, t_index: usize) -> Result<Estimate, KernelError> {
        self.check_index(t_index)?;
        Ok(expected_robustness(phi, &self.trajectories, t_index))
    }

    /// Fraction of trajectories with `(ξ, t) |= φ`, with binomial standard error.
    pub fn satisfaction_probability(&self, phi: &Formula, t_index: usize) -> Result<Estimate, KernelError> {
        self.check_index(t_index)?;
        Ok(satisfaction_probability(phi, &self.trajectories, t_index))
    }
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

fn expected_robustness(phi: &Formula, trajectories: &[Trajectory], t_index: usize) -> Estimate {
    let samples: Vec<f64> = trajectories
        .iter()
        .map(|xi| robustness_signal(phi, xi)[t_index])
        .collect();
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let stderr = if samples.len() > 1 {
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Estimate { mean, stderr }
}

fn satisfaction_probability(phi: &Formula, trajectories: &[Trajectory], t_index: usize) -> Estimate {
    let hits = trajectories
        .iter()
        .filter(|xi| boolean_signal(phi, xi)[t_index])
        .count();
    let m = trajectories.len() as f64;
    let p = hits as f64 / m;
    Estimate {
        mean: p,
        stderr: (p * (1.0 - p) / m).sqrt(),
    }
}

/// Which per-formula quantity a target estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Robustness,
    Satprob,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Robustness => "robustness",
            Target::Satprob => "satprob",
        }
    }
}

impl std::str::FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "robustness" => Ok(Target::Robustness),
            "satprob" => Ok(Target::Satprob),
            _ => Err(format!("unknown target {s:?} (expected robustness or satprob)")),
        }
    }
}

/// Estimates `target` at `t_index` for every formula over `trajectories`.
pub fn estimate_targets(
    formulas: &[Formula],
    trajectories: &[Trajectory],
    target: Target,
    t_index: usize,
    exec: Execution,
) -> Result<Vec<Estimate>, KernelError> {
    let first = trajectories.first().ok_or(KernelError::EmptySample)?;
    if trajectories.iter().any(|t| t.len() != first.len()) {
        return Err(KernelError::GridMismatch);
    }
    if t_index >= first.len() {
        return Err(KernelError::IndexOutOfRange {
            index: t_index,
            len: first.len(),
        });
    }
    Ok(par::map_slice(exec, formulas, |f| match target {
        Target::Robustness => expected_robustness(f, trajectories, t_index),
        Target::Satprob => satisfaction_probability(f, trajectories, t_index),
    }))
}

/// Symmetric kernel matrix over a formula corpus.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    formulas: Vec<Formula>,
    kind: GramKind,
    entries: DMatrix<f64>,
    self_kernels: Vec<f64>,
    fingerprint: String,
    jitter: f64,
}

impl GramMatrix {
    /// Assembles the matrix from precomputed embeddings; each upper-triangle
    /// entry is one fixed-order dot product, mirrored below the diagonal.
    pub fn from_embeddings(
        sample: &KernelSample,
        formulas: Vec<Formula>,
        embeddings: &[Embedding],
        kind: GramKind,
        exec: Execution,
    ) -> Result<GramMatrix, KernelError> {
        kind.validate()?;
        let n = embeddings.len();
        if kind != GramKind::Raw {
            let degenerate: Vec<usize> = (0..n).filter(|i| embeddings[*i].is_degenerate()).collect();
            if !degenerate.is_empty() {
                return Err(KernelError::Degenerate(degenerate));
            }
        }
        let self_kernels: Vec<f64> = embeddings.iter().map(|e| e.self_kernel).collect();
        let rows = par::map_range(exec, n, |i| {
            (i + 1..n)
                .map(|j| sample.inner(&embeddings[i], &embeddings[j]))
                .collect::<Vec<f64>>()
        });
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = match kind {
                GramKind::Raw => self_kernels[i],
                _ => 1.0,
            };
            for (off, raw) in rows[i].iter().enumerate() {
                let j = i + 1 + off;
                let v = kind.from_raw(*raw, self_kernels[i], self_kernels[j]);
                entries[(i, j)] = v;
                entries[(j, i)] = v;
            }
        }
        Ok(GramMatrix {
            formulas,
            kind,
            entries,
            self_kernels,
            fingerprint: sample.fingerprint().to_string(),
            jitter: 0.0,
        })
    }

    /// Builds a matrix from explicit entries; `self_kernels` are the raw
    /// self-kernels of the formulas.
    pub fn from_parts(
        formulas: Vec<Formula>,
        kind: GramKind,
        entries: DMatrix<f64>,
        self_kernels: Vec<f64>,
        fingerprint: impl Into<String>,
    ) -> Result<GramMatrix, KernelError> {
        kind.validate()?;
        let n = entries.nrows();
        if entries.ncols() != n || self_kernels.len() != n || formulas.len() != n {
            return Err(KernelError::Malformed(format!(
                "{}x{} entries, {} self-kernels, {} formulas",
                entries.nrows(),
                entries.ncols(),
                self_kernels.len(),
                formulas.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if entries[(i, j)] != entries[(j, i)] {
                    return Err(KernelError::Malformed(format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GramMatrix {
            formulas,
            kind,
            entries,
            self_kernels,
            fingerprint: fingerprint.into(),
            jitter: 0.0,
        })
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn kind(&self) -> GramKind {
        self.kind
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn self_kernels(&self) -> &[f64] {
        &self.self_kernels
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Diagonal jitter added by [`GramMatrix::with_jitter`], 0 otherwise.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Re-expresses the matrix as another kind. Raw converts to anything,
    /// normalized to normalized or Gaussian; a Gaussian matrix only to itself.
    pub fn to_kind(&self, kind: GramKind) -> Result<GramMatrix, KernelError> {
        kind.validate()?;
        if kind == self.kind {
            return Ok(self.clone());
        }
        let n = self.size();
        let convert: Box<dyn Fn(usize, usize) -> f64> = match (self.kind, kind) {
            (GramKind::Raw, _) => {
                if kind != GramKind::Raw {
                    let degenerate: Vec<usize> = (0..n).filter(|i| self.self_kernels[*i] <= DEGENERATE_EPS).collect();
                    if !degenerate.is_empty() {
                        return Err(KernelError::Degenerate(degenerate));
                    }
                }
                Box::new(move |i, j| {
                    if i == j {
                        1.0
                    } else {
                        kind.from_raw(self.entries[(i, j)], self.self_kernels[i], self.self_kernels[j])
                    }
                })
            }
            (GramKind::Normalized, GramKind::Gaussian { sigma }) => Box::new(move |i, j| {
                if i == j {
                    1.0
                } else {
                    gaussian(self.entries[(i, j)], sigma)
                }
            }),
            (from, to) => {
                return Err(KernelError::KindConversion {
                    from: from.name(),
                    to: to.name(),
                })
            }
        };
        let entries = DMatrix::from_fn(n, n, convert);
        Ok(GramMatrix {
            entries,
            kind,
            jitter: 0.0,
            ..self.clone()
        })
    }

    /// Copy with `λ I` added, `λ = 1e-8 · trace / n`.
    pub fn with_jitter(&self) -> GramMatrix {
        let n = self.size().max(1) as f64;
        let lambda = 1e-8 * self.entries.trace() / n;
        let mut out = self.clone();
        for i in 0..self.size() {
            out.entries[(i, i)] += lambda;
        }
        out.jitter = self.jitter + lambda;
        out
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// CSV with a header row `i,0,1,...,n-1` and one row per formula.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), KernelError> {
        let n = self.size();
        let mut header = String::from("i");
        for j in 0..n {
            header.push_str(&format!(",{j}"));
        }
        writeln!(out, "{header}")?;
        for i in 0..n {
            let mut line = i.to_string();
            for j in 0..n {
                line.push_str(&format!(",{}", self.entries[(i, j)]));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
