use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use stl_kernel::par;
use stl_kernel::regression::{self, logspace, mse, split, Hyper, KernelBasis};
use stl_kernel::stl::parse_formula;
use stl_kernel::{Execution, Formula, GramKind, GramMatrix, Method, Regressor, TrainingSet};

use super::load_labelled;
use crate::error::CliError;
use crate::output::{csv_bytes, Run};
use crate::settings::Settings;
use crate::source::KernelSource;

const METRICS_HEADER: [&str; 10] = [
    "method",
    "sigma",
    "lambda",
    "c",
    "epsilon",
    "k",
    "n_train",
    "n_test",
    "mse_train",
    "mse_test",
];

/// Fitted regressor together with what is needed to query it again.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub regressor: Regressor,
    /// Training formulae in canonical form, in fitting order.
    pub corpus: Vec<String>,
    pub kernel: KernelSource,
}

fn hyper(s: &Settings) -> Result<Hyper, CliError> {
    let d = Hyper::default();
    Ok(Hyper {
        k: s.get("k", d.k)?,
        lambda: s.get("lambda", d.lambda)?,
        c: s.get("c", d.c)?,
        epsilon: s.get("epsilon", d.epsilon)?,
        tol: s.get("tol", d.tol)?,
        max_iter: s.get("max_iter", d.max_iter)?,
    })
}

fn labelled(s: &Settings) -> Result<TrainingSet, CliError> {
    let corpus: PathBuf = s.required("corpus")?;
    let targets: PathBuf = s.required("targets")?;
    load_labelled(&corpus, &targets)
}

fn metrics_row(
    method: Method,
    sigma: f64,
    h: &Hyper,
    n_train: usize,
    n_test: usize,
    train: f64,
    test: Option<f64>,
) -> Vec<String> {
    vec![
        method.name().to_string(),
        sigma.to_string(),
        h.lambda.to_string(),
        h.c.to_string(),
        h.epsilon.to_string(),
        h.k.to_string(),
        n_train.to_string(),
        n_test.to_string(),
        train.to_string(),
        test.map(|m| m.to_string()).unwrap_or_default(),
    ]
}

/// Everything a regressor needs from the kernel for one train/test split.
struct Prepared {
    raw: GramMatrix,
    test_rows: Vec<(Vec<f64>, f64)>,
    fingerprint: String,
}

fn prepare(source: &KernelSource, train: &TrainingSet, test: Option<&TrainingSet>) -> Result<Prepared, CliError> {
    let sample = source.build()?;
    let basis = KernelBasis::new(&sample, &train.formulas, Execution::default())?;
    let raw = basis.raw_gram(train.formulas.clone(), Execution::default())?;
    let test_rows = match test {
        Some(t) => basis.queries(&t.formulas, Execution::default())?,
        None => Vec::new(),
    };
    Ok(Prepared {
        raw,
        test_rows,
        fingerprint: sample.fingerprint().to_string(),
    })
}

fn predict_rows(reg: &Regressor, rows: &[(Vec<f64>, f64)]) -> Result<Vec<f64>, CliError> {
    Ok(rows
        .iter()
        .map(|(c, s)| reg.predict_raw(c, *s))
        .collect::<Result<Vec<_>, _>>()?)
}

fn train_one(
    p: &Prepared,
    method: Method,
    sigma: f64,
    h: Hyper,
    train: &TrainingSet,
    test: Option<&TrainingSet>,
) -> Result<(Regressor, f64, Option<f64>), CliError> {
    let g = p.raw.to_kind(GramKind::Gaussian { sigma })?;
    let reg = regression::fit(method, h, &g, &train.targets, train.target)?;
    let mse_train = mse(&reg.predict_training(&p.raw)?, &train.targets);
    let mse_test = match test {
        Some(t) => Some(mse(&predict_rows(&reg, &p.test_rows)?, &t.targets)),
        None => None,
    };
    Ok((reg, mse_train, mse_test))
}

fn train_fraction(s: &Settings, default: f64) -> Result<f64, CliError> {
    let f = s.get("train_fraction", default)?;
    if !(f > 0.0 && f <= 1.0) {
        return Err(CliError::config(format!("train_fraction must lie in (0, 1], got {f}")));
    }
    Ok(f)
}

pub fn fit(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let set = labelled(s)?;
    let method: Method = s.get("method", Method::Krr)?;
    let sigma = s.get("sigma", 0.5f64)?;
    let h = hyper(s)?;
    let fraction = train_fraction(s, 1.0)?;
    let (train, test) = if fraction < 1.0 {
        let (a, b) = split(&set, fraction, run.seed("split"))?;
        (a, Some(b))
    } else {
        (set, None)
    };
    let source = KernelSource::from_settings(s, run.seed("kernel"))?;
    let p = prepare(&source, &train, test.as_ref())?;
    let (reg, mse_train, mse_test) = train_one(&p, method, sigma, h, &train, test.as_ref())?;

    let n_test = test.as_ref().map_or(0, TrainingSet::len);
    let row = metrics_row(method, sigma, &h, train.len(), n_test, mse_train, mse_test);
    run.write("metrics.csv", &csv_bytes(&METRICS_HEADER, [row])?)?;
    let model = ModelFile {
        corpus: train.formulas.iter().map(Formula::to_string).collect(),
        kernel: source,
        regressor: reg,
    };
    run.write_json("model.json", &model)?;
    let mut extra = BTreeMap::new();
    extra.insert("fingerprint".into(), json!(p.fingerprint));
    run.finish("fit.json", extra)
}

pub fn eval(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let model_path: PathBuf = s.required("model")?;
    let text = std::fs::read_to_string(&model_path)
        .map_err(|e| CliError::new("io", format!("cannot read {}: {e}", model_path.display())))?;
    let model: ModelFile = serde_json::from_str(&text)?;
    let set = labelled(s)?;
    let reg = &model.regressor;
    if set.target != reg.target {
        return Err(CliError::input(format!(
            "targets are {} but the model predicts {}",
            set.target.name(),
            reg.target.name()
        )));
    }
    let basis_formulas = model
        .corpus
        .iter()
        .map(|f| parse_formula(f))
        .collect::<Result<Vec<_>, _>>()?;
    let sample = model.kernel.build()?;
    if sample.fingerprint() != reg.gram_fingerprint {
        return Err(CliError::input(format!(
            "kernel sample fingerprint {} does not match the model's {}",
            sample.fingerprint(),
            reg.gram_fingerprint
        )));
    }
    let basis = KernelBasis::new(&sample, &basis_formulas, Execution::default())?;
    let rows = basis.queries(&set.formulas, Execution::default())?;
    let preds = predict_rows(reg, &rows)?;
    let err = mse(&preds, &set.targets);

    let pred_rows = set
        .formulas
        .iter()
        .zip(set.targets.iter().zip(&preds))
        .enumerate()
        .map(|(i, (f, (y, p)))| vec![i.to_string(), f.to_string(), y.to_string(), p.to_string()]);
    run.write(
        "predictions.csv",
        &csv_bytes(&["index", "formula", "target", "prediction"], pred_rows)?,
    )?;
    let h = reg.hyper;
    let row = vec![
        reg.method.name().to_string(),
        reg.sigma().map(|v| v.to_string()).unwrap_or_default(),
        h.lambda.to_string(),
        h.c.to_string(),
        h.epsilon.to_string(),
        h.k.to_string(),
        set.len().to_string(),
        err.to_string(),
    ];
    run.write(
        "eval.csv",
        &csv_bytes(&["method", "sigma", "lambda", "c", "epsilon", "k", "n", "mse"], [row])?,
    )?;
    let mut extra = BTreeMap::new();
    extra.insert("fingerprint".into(), json!(reg.gram_fingerprint));
    run.finish("eval.json", extra)
}

fn methods(s: &Settings) -> Result<Vec<Method>, CliError> {
    let text: String = s.get("methods", "nw,knn,krr,svr".to_string())?;
    let list = text
        .split(',')
        .map(|m| m.trim().parse::<Method>().map_err(CliError::config))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(CliError::config("methods: empty list"));
    }
    Ok(list)
}

pub fn sweep(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let set = labelled(s)?;
    let methods = methods(s)?;
    let lo = s.get("sigma_lo", 0.05f64)?;
    let hi = s.get("sigma_hi", 5.0f64)?;
    let count = s.get("sigma_count", 25usize)?;
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(CliError::config(format!(
            "bad sigma grid: {lo}..{hi} with {count} points"
        )));
    }
    let sigmas = logspace(lo, hi, count);
    let h = hyper(s)?;
    let fraction = train_fraction(s, 0.75)?;
    if fraction >= 1.0 {
        return Err(CliError::config(
            "sweep needs a held-out part: train_fraction must be below 1",
        ));
    }
    let (train, test) = split(&set, fraction, run.seed("split"))?;
    let source = KernelSource::from_settings(s, run.seed("kernel"))?;
    let p = prepare(&source, &train, Some(&test))?;

    let jobs: Vec<(Method, f64)> = methods
        .iter()
        .flat_map(|m| sigmas.iter().map(move |sg| (*m, *sg)))
        .collect();
    let results = par::map_slice(Execution::default(), &jobs, |(m, sg)| {
        train_one(&p, *m, *sg, h, &train, Some(&test)).map(|(_, a, b)| (a, b))
    });
    let mut rows = Vec::with_capacity(jobs.len());
    for ((m, sg), r) in jobs.iter().zip(results) {
        let (a, b) = r?;
        rows.push(metrics_row(*m, *sg, &h, train.len(), test.len(), a, b));
    }
    run.write("sweep.csv", &csv_bytes(&METRICS_HEADER, rows)?)?;
    let mut extra = BTreeMap::new();
    extra.insert("fingerprint".into(), json!(p.fingerprint));
    extra.insert("sigmas".into(), Value::from(sigmas));
    run.finish("sweep.json", extra)
}
