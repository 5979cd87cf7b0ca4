use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::{json, Value};
use stl_kernel::kernel::estimate_targets;
use stl_kernel::stl::parse_formula;
use stl_kernel::{Execution, Formula, GramKind, Target};

use super::{load_corpus, TARGET_HEADER};
use crate::error::CliError;
use crate::output::{csv_bytes, Run};
use crate::settings::Settings;
use crate::source::{KernelSource, MeasureSpec};

fn gram_kind(s: &Settings) -> Result<GramKind, CliError> {
    let kind: String = s.get("kind", "normalized".to_string())?;
    match kind.as_str() {
        "raw" => Ok(GramKind::Raw),
        "normalized" => Ok(GramKind::Normalized),
        "gaussian" => Ok(GramKind::Gaussian {
            sigma: s.required("sigma")?,
        }),
        other => Err(CliError::config(format!(
            "kind: expected raw, normalized or gaussian, got {other:?}"
        ))),
    }
}

pub fn gram(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let corpus_path: PathBuf = s.required("corpus")?;
    let corpus = load_corpus(&corpus_path)?;
    let kind = gram_kind(s)?;
    let source = KernelSource::from_settings(s, run.seed("kernel"))?;
    let sample = source.build()?;
    let gram = sample.gram(&corpus, kind)?;
    let mut bytes = Vec::new();
    gram.write_csv(&mut bytes)?;
    run.write("gram.csv", &bytes)?;

    let eig = gram.eigenvalues();
    let mut extra = BTreeMap::new();
    extra.insert(
        "corpus".into(),
        json!(corpus.iter().map(Formula::to_string).collect::<Vec<_>>()),
    );
    extra.insert("kind".into(), json!(kind.name()));
    extra.insert("sigma".into(), json!(kind.sigma()));
    extra.insert("fingerprint".into(), json!(gram.fingerprint()));
    extra.insert("kernel".into(), serde_json::to_value(&source)?);
    extra.insert("self_kernels".into(), json!(gram.self_kernels()));
    extra.insert("min_eigenvalue".into(), json!(eig.first()));
    extra.insert("max_eigenvalue".into(), json!(eig.last()));
    run.finish("gram.json", extra)
}

pub fn estimate(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let inline = s.list("formula");
    let formulas = if inline.is_empty() {
        let path: PathBuf = s.required("corpus")?;
        load_corpus(&path)?
    } else {
        inline.iter().map(|f| parse_formula(f)).collect::<Result<Vec<_>, _>>()?
    };
    let spec = MeasureSpec::from_settings(s, "measure", "normalize")?;
    let samples = s.get("samples", 10_000usize)?;
    let target: Target = s.get("target", Target::Robustness)?;
    let t_index = s.get("t_index", 0usize)?;
    let trajectories = spec.sample(samples, run.seed("targets"))?;
    let est = estimate_targets(&formulas, &trajectories, target, t_index, Execution::default())?;
    let rows = formulas.iter().zip(&est).enumerate().map(|(i, (f, e))| {
        vec![
            i.to_string(),
            f.to_string(),
            target.name().to_string(),
            e.mean.to_string(),
            e.stderr.to_string(),
        ]
    });
    run.write("targets.csv", &csv_bytes(&TARGET_HEADER, rows)?)?;
    let mut extra = BTreeMap::new();
    extra.insert("measure".into(), serde_json::to_value(&spec)?);
    extra.insert("formulas".into(), Value::from(formulas.len()));
    run.finish("targets.json", extra)
}
