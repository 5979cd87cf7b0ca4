use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "stlk",
    version,
    about = "Monte-Carlo STL kernels and kernel regression over formulae"
)]
pub struct Cli {
    /// Master seed; every component seed is derived from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for all outputs (created if missing).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Flat `key = value` or JSON file of option values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample trajectories from the base measure or a reaction network.
    SampleTraj {
        /// `mu0` or `model:<immigration|isomerization|polymerase|file:PATH>`.
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        count: Option<usize>,
        /// Standardize the batch to pooled mean 0 and variance 1.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        normalize: Option<bool>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sample a random formula corpus.
    SampleFormulas {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        max_atoms: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        threshold_lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        threshold_hi: Option<f64>,
    },
    /// Gram matrix of a corpus.
    Gram {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// raw, normalized or gaussian.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Monte-Carlo expected robustness or satisfaction probability.
    Estimate {
        #[arg(long, conflicts_with = "formula")]
        corpus: Option<PathBuf>,
        /// A single formula; may be repeated.
        #[arg(long)]
        formula: Vec<String>,
        #[arg(long)]
        measure: Option<String>,
        /// Number of trajectories.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        normalize: Option<bool>,
        /// robustness or satprob.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        t_index: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Fit one regressor and report its errors.
    Fit {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        targets: Option<PathBuf>,
        /// nw, knn, krr or svr.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Fraction used for training; below 1 the rest is held out.
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Evaluate a fitted model on a labelled corpus.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        targets: Option<PathBuf>,
    },
    /// Test error of every method over a bandwidth grid.
    Sweep {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Comma-separated subset of nw,knn,krr,svr.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        sigma_lo: Option<f64>,
        #[arg(long)]
        sigma_hi: Option<f64>,
        #[arg(long)]
        sigma_count: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
        #[command(flatten)]
        hyper: HyperArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

/// Time grid and base-measure parameters.
#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub sigma_start: Option<f64>,
    #[arg(long)]
    pub sigma_tv: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
}

/// Where the kernel's trajectory sample comes from.
#[derive(Args, Debug)]
pub struct KernelArgs {
    #[arg(long)]
    pub kernel_measure: Option<String>,
    #[arg(long)]
    pub kernel_samples: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub kernel_normalize: Option<bool>,
    /// Load the kernel sample from a directory of CSV files or a batch CSV.
    #[arg(long, conflicts_with_all = ["kernel_measure", "kernel_samples", "kernel_normalize"])]
    pub trajectories: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HyperArgs {
    /// Neighbours for KNN.
    #[arg(long)]
    pub k: Option<usize>,
    /// Ridge for KRR.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Box constraint for SVR.
    #[arg(long)]
    pub c: Option<f64>,
    /// Insensitive-tube half width for SVR.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}
