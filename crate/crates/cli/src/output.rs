//! Artifact writing and config+seed sidecars.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::Value;
use stl_kernel::rng::derive_seed;

use crate::error::CliError;
use crate::settings::Settings;

/// One command invocation: its output directory, the seeds it derived and
/// the files it wrote.
pub struct Run<'a> {
    command: &'static str,
    settings: &'a Settings,
    out_dir: PathBuf,
    master: u64,
    seeds: BTreeMap<&'static str, u64>,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Sidecar<'s> {
    command: &'s str,
    version: &'s str,
    seed: u64,
    seeds: &'s BTreeMap<&'static str, u64>,
    config: BTreeMap<String, Value>,
    artifacts: &'s [String],
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

impl<'a> Run<'a> {
    pub fn new(command: &'static str, settings: &'a Settings, out_dir: PathBuf) -> Result<Self, CliError> {
        let master = settings.get("seed", 0u64)?;
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::new("io", format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Run {
            command,
            settings,
            out_dir,
            master,
            seeds: BTreeMap::new(),
            artifacts: Vec::new(),
        })
    }

    /// Seed for the component `label`, derived from the master seed.
    pub fn seed(&mut self, label: &'static str) -> u64 {
        let s = derive_seed(self.master, label);
        self.seeds.insert(label, s);
        s
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::new("io", format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the sidecar `name` describing everything written so far and
    /// prints the artifact paths.
    pub fn finish(mut self, name: &str, extra: BTreeMap<String, Value>) -> Result<(), CliError> {
        let sidecar = Sidecar {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.master,
            seeds: &self.seeds,
            config: self.settings.used(),
            artifacts: &self.artifacts,
            extra,
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        let artifacts = std::mem::take(&mut self.artifacts);
        self.write(name, text.as_bytes())?;
        for a in artifacts.iter().chain(std::iter::once(&name.to_string())) {
            println!("{}", self.out_dir.join(a).display());
        }
        Ok(())
    }
}

/// CSV text from a header and rows of already formatted fields.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::new("csv", e.to_string()))
}
