use std::collections::BTreeMap;

use stl_kernel::formula_gen::write_corpus;
use stl_kernel::trajectory::write_csv;
use stl_kernel::{FormulaGenConfig, FormulaGenerator};

use crate::error::CliError;
use crate::output::Run;
use crate::settings::Settings;
use crate::source::MeasureSpec;

pub fn trajectories(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let spec = MeasureSpec::from_settings(s, "measure", "normalize")?;
    let count = s.get("count", 100usize)?;
    let batch = spec.sample(count, run.seed("trajectories"))?;
    for (i, xi) in batch.iter().enumerate() {
        let mut bytes = Vec::new();
        write_csv(xi, &mut bytes)?;
        run.write(&format!("traj_{i:05}.csv"), &bytes)?;
    }
    run.finish("trajectories.json", BTreeMap::new())
}

pub fn formulas(s: &Settings, mut run: Run) -> Result<(), CliError> {
    let d = FormulaGenConfig::default();
    let count = s.get("count", 400usize)?;
    let cfg = FormulaGenConfig {
        max_atoms: s.get("max_atoms", d.max_atoms)?,
        threshold_lo: s.get("threshold_lo", d.threshold_lo)?,
        threshold_hi: s.get("threshold_hi", d.threshold_hi)?,
        seed: run.seed("formulas"),
    };
    let corpus = FormulaGenerator::new(cfg).map_err(CliError::config)?.corpus(count);
    run.write("formulas.txt", write_corpus(&corpus).as_bytes())?;
    run.finish("formulas.json", BTreeMap::new())
}
