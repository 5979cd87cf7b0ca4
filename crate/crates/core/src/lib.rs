//! Signal temporal logic (STL) over scalar signals, and a kernel on the space
//! of STL formulae.
//!
//! Two formulae are compared through their robustness signals: the kernel is
//! the inner product of `ρ(φ, ξ, t)` and `ρ(ψ, ξ, t)`, integrated over time and
//! over a base measure on trajectories that favours low total variation. The
//! integral is approximated by Monte Carlo on a fixed trajectory sample, which
//! makes every Gram matrix an exact empirical inner-product matrix.
//!
//! Module map:
//!
//! * [`stl`]: formula syntax, parser/printer, Boolean and robustness monitors.
//! * [`trajectory`]: gridded piecewise-linear signals and the base measure sampler.
//! * [`ssa`]: Gillespie simulation of reaction networks.
//! * [`formula_gen`]: random formula generator.
//! * [`kernel`]: Monte-Carlo kernel, Gram matrices and target estimators.
//! * [`regression`]: Nadaraya-Watson, k-NN, kernel ridge and support vector regression.
//!
//! With the default `parallel` feature the batch loops run on rayon; without
//! it, or with [`Execution::Sequential`], everything runs on the calling
//! thread and produces bit-identical results.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod formula_gen;
pub mod kernel;
pub mod par;
pub mod regression;
pub mod rng;
pub mod ssa;
pub mod stl;
pub mod trajectory;

pub use formula_gen::{FormulaGenConfig, FormulaGenerator};
pub use kernel::{Estimate, Target};
pub use kernel::{GramKind, GramMatrix, KernelError, KernelSample};
pub use par::Execution;
pub use regression::{Method, RegressionError, Regressor, TrainingSet};
pub use ssa::{ReactionNetwork, SsaConfig, SsaError};
pub use stl::{Formula, ParseError, TimeWindow};
pub use trajectory::{Mu0Config, Trajectory, TrajectoryError};
