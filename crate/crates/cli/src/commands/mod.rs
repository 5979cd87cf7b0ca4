mod kernel;
mod learn;
mod sample;

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stl_kernel::formula_gen::read_corpus;
use stl_kernel::{Formula, Target, TrainingSet};

use crate::cli::Command;
use crate::error::CliError;
use crate::output::Run;
use crate::settings::Settings;

pub fn dispatch(command: &Command, settings: &Settings) -> Result<(), CliError> {
    let out_dir = settings.get("out_dir", PathBuf::from("."))?;
    let run = |name| Run::new(name, settings, out_dir.clone());
    match command {
        Command::SampleTraj { .. } => sample::trajectories(settings, run("sample-traj")?),
        Command::SampleFormulas { .. } => sample::formulas(settings, run("sample-formulas")?),
        Command::Gram { .. } => kernel::gram(settings, run("gram")?),
        Command::Estimate { .. } => kernel::estimate(settings, run("estimate")?),
        Command::Fit { .. } => learn::fit(settings, run("fit")?),
        Command::Eval { .. } => learn::eval(settings, run("eval")?),
        Command::Sweep { .. } => learn::sweep(settings, run("sweep")?),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new("io", format!("cannot read {}: {e}", path.display())))
}

pub fn load_corpus(path: &Path) -> Result<Vec<Formula>, CliError> {
    let formulas = read_corpus(&read_text(path)?)
        .map_err(|(line, e)| CliError::new("parse", format!("{}:{line}: {e}", path.display())))?;
    if formulas.is_empty() {
        return Err(CliError::input(format!("{} holds no formulae", path.display())));
    }
    Ok(formulas)
}

pub const TARGET_HEADER: [&str; 5] = ["index", "formula", "target", "mean", "stderr"];

#[derive(Deserialize)]
struct TargetRow {
    index: usize,
    formula: String,
    target: Target,
    mean: f64,
}

/// Reads a corpus and its targets file, checking that they line up.
pub fn load_labelled(corpus: &Path, targets: &Path) -> Result<TrainingSet, CliError> {
    let formulas = load_corpus(corpus)?;
    let mut reader = csv::Reader::from_path(targets)
        .map_err(|e| CliError::new("io", format!("cannot read {}: {e}", targets.display())))?;
    let rows = reader.deserialize().collect::<Result<Vec<TargetRow>, _>>()?;
    if rows.len() != formulas.len() {
        return Err(CliError::input(format!(
            "{} has {} rows but the corpus has {} formulae",
            targets.display(),
            rows.len(),
            formulas.len()
        )));
    }
    let target = rows[0].target;
    for (i, (row, f)) in rows.iter().zip(&formulas).enumerate() {
        if row.index != i || row.formula != f.to_string() {
            return Err(CliError::input(format!(
                "{} row {i} does not match corpus formula {f}",
                targets.display()
            )));
        }
        if row.target != target {
            return Err(CliError::input(format!("{} mixes target kinds", targets.display())));
        }
    }
    Ok(TrainingSet::new(
        formulas,
        rows.iter().map(|r| r.mean).collect(),
        target,
    )?)
}
