//! Trajectory sources: the base measure, reaction networks and files.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stl_kernel::ssa::{resolve_model, sample_process};
use stl_kernel::trajectory::{load_batch, sample_mu0, znormalize};
use stl_kernel::{KernelSample, Mu0Config, SsaConfig, Trajectory};

use crate::error::CliError;
use crate::settings::Settings;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Measure {
    Mu0,
    Model(String),
}

impl FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mu0" => Ok(Measure::Mu0),
            _ => match s.strip_prefix("model:") {
                Some(spec) if !spec.is_empty() => Ok(Measure::Model(spec.to_string())),
                _ => Err(format!("expected `mu0` or `model:<name>`, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Mu0 => f.write_str("mu0"),
            Measure::Model(spec) => write!(f, "model:{spec}"),
        }
    }
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A measure with its grid and parameters, enough to redraw a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub measure: Measure,
    pub normalize: bool,
    /// Grid and base-measure parameters; the seed field is unused.
    pub mu0: Mu0Config,
}

impl MeasureSpec {
    /// Reads the measure under `measure_key`/`normalize_key` plus the shared
    /// grid keys.
    pub fn from_settings(s: &Settings, measure_key: &str, normalize_key: &str) -> Result<Self, CliError> {
        let d = Mu0Config::default();
        let mu0 = Mu0Config {
            a: s.get("a", d.a)?,
            b: s.get("b", d.b)?,
            h: s.get("h", d.h)?,
            sigma_start: s.get("sigma_start", d.sigma_start)?,
            sigma_tv: s.get("sigma_tv", d.sigma_tv)?,
            q: s.get("q", d.q)?,
            seed: 0,
        };
        mu0.validate()?;
        let measure: Measure = s.get(measure_key, Measure::Mu0)?;
        let normalize = s.get(normalize_key, false)?;
        Ok(MeasureSpec {
            measure,
            normalize,
            mu0,
        })
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Trajectory>, CliError> {
        if count == 0 {
            return Err(CliError::config("trajectory count must be at least 1"));
        }
        let batch = match &self.measure {
            Measure::Mu0 => sample_mu0(
                &Mu0Config {
                    seed,
                    ..self.mu0.clone()
                },
                count,
            )?,
            Measure::Model(spec) => {
                let net = resolve_model(spec)?;
                let cfg = SsaConfig {
                    t_end: self.mu0.b,
                    t0: self.mu0.a,
                    h: self.mu0.h,
                    steps: self.mu0.steps(),
                    seed,
                };
                sample_process(&net, &cfg, count, false)?
            }
        };
        Ok(if self.normalize { znormalize(&batch)? } else { batch })
    }
}

/// Recipe for the kernel's trajectory sample, stored with fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum KernelSource {
    Sampled {
        spec: MeasureSpec,
        samples: usize,
        seed: u64,
    },
    File {
        path: PathBuf,
    },
}

impl KernelSource {
    pub fn from_settings(s: &Settings, seed: u64) -> Result<Self, CliError> {
        if let Some(path) = s.optional::<PathBuf>("trajectories")? {
            return Ok(KernelSource::File { path });
        }
        let spec = MeasureSpec::from_settings(s, "kernel_measure", "kernel_normalize")?;
        let samples = s.get("kernel_samples", 1000usize)?;
        Ok(KernelSource::Sampled { spec, samples, seed })
    }

    pub fn build(&self) -> Result<KernelSample, CliError> {
        let trajectories = match self {
            KernelSource::Sampled { spec, samples, seed } => spec.sample(*samples, *seed)?,
            KernelSource::File { path } => load_batch(path)?,
        };
        Ok(KernelSample::new(trajectories)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_syntax() {
        assert_eq!("mu0".parse::<Measure>().unwrap(), Measure::Mu0);
        assert_eq!(
            "model:immigration".parse::<Measure>().unwrap(),
            Measure::Model("immigration".into())
        );
        assert_eq!(Measure::Model("file:a.json".into()).to_string(), "model:file:a.json");
        assert!("immigration".parse::<Measure>().is_err());
        assert!("model:".parse::<Measure>().is_err());
    }

    #[test]
    fn model_grid_follows_settings() {
        let s = Settings::from_pairs(&[("measure", "model:immigration"), ("b", "10"), ("h", "0.5")]);
        let spec = MeasureSpec::from_settings(&s, "measure", "normalize").unwrap();
        let batch = spec.sample(3, 1).unwrap();
        assert_eq!(batch[0].len(), 21);
        assert_eq!(batch[0].end_time(), 10.0);
    }
}
