//! Uniformly gridded, piecewise-linear scalar trajectories and the base
//! measure sampler.
//!
//! The base measure draws a start value `ξ0 ~ N(0, σ')`, a total variation
//! `K = Z²` with `Z ~ N(0, σ'')`, splits `K` into `N` increments by sorting
//! `N - 1` uniforms on `[0, K]`, and signs the increments with a Markov chain
//! that flips with probability `q`. The sampled values telescope, so the total
//! variation of a draw equals its `K` up to summation rounding.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};
use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("grid step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("trajectory must have at least one point")]
    Empty,
    #[error("trajectory value at index {0} is not finite")]
    NonFinite(usize),
    #[error("invalid base measure configuration: {0}")]
    InvalidConfig(String),
    #[error("pooled variance of the trajectory set is zero")]
    ZeroVariance,
    #[error("trajectories do not share a grid")]
    GridMismatch,
    #[error("malformed trajectory CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    h: f64,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, h: f64, values: Vec<f64>) -> Result<Self, TrajectoryError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(TrajectoryError::InvalidStep(h));
        }
        if values.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TrajectoryError::NonFinite(i));
        }
        Ok(Trajectory { t0, h, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.h
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// True when both trajectories have the same start, step and length.
    pub fn same_grid(&self, other: &Trajectory) -> bool {
        self.t0 == other.t0 && self.h == other.h && self.len() == other.len()
    }

    /// Sum of absolute increments, which is the total variation of the
    /// linear interpolant.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Number of sign changes between consecutive nonzero increments.
    pub fn monotonicity_changes(&self) -> usize {
        let mut last = 0.0f64;
        let mut changes = 0;
        for w in self.values.windows(2) {
            let d = w[1] - w[0];
            if d == 0.0 {
                continue;
            }
            if last != 0.0 && d.signum() != last.signum() {
                changes += 1;
            }
            last = d;
        }
        changes
    }

    /// Linear interpolant at time `t`, held constant outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let pos = (t - self.t0) / self.h;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = self.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        if frac == 0.0 {
            self.values[i]
        } else {
            self.values[i] + frac * (self.values[i + 1] - self.values[i])
        }
    }

    /// Re-grids onto step `h_new` over the same span by linear interpolation.
    ///
    /// The new grid starts at `t0` and keeps every point not past the old end
    /// time; when the span is a multiple of `h_new` both endpoints survive.
    pub fn resample(&self, h_new: f64) -> Result<Trajectory, TrajectoryError> {
        if !(h_new > 0.0 && h_new.is_finite()) {
            return Err(TrajectoryError::InvalidStep(h_new));
        }
        let span = self.end_time() - self.t0;
        let steps = (span / h_new + 1e-9).floor() as usize;
        let values = (0..=steps).map(|i| self.value_at(self.t0 + i as f64 * h_new)).collect();
        Trajectory::new(self.t0, h_new, values)
    }
}

/// Shifts and scales a set by its pooled mean and (population) standard
/// deviation across all points.
pub fn znormalize(set: &[Trajectory]) -> Result<Vec<Trajectory>, TrajectoryError> {
    let n: usize = set.iter().map(Trajectory::len).sum();
    if n == 0 {
        return Err(TrajectoryError::Empty);
    }
    let mean = set.iter().flat_map(|t| t.values.iter()).sum::<f64>() / n as f64;
    let var = set
        .iter()
        .flat_map(|t| t.values.iter())
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    if !(var > 0.0) {
        return Err(TrajectoryError::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(set
        .iter()
        .map(|t| Trajectory {
            t0: t.t0,
            h: t.h,
            values: t.values.iter().map(|v| (v - mean) / sd).collect(),
        })
        .collect())
}

/// Parameters of the base measure. Defaults are `a = 0`, `b = 20`, `h = 1`,
/// `σ' = σ'' = 1`, `q = 0.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu0Config {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    /// Standard deviation of the start value.
    pub sigma_start: f64,
    /// Standard deviation of `Z`, where the total variation is `Z²`.
    pub sigma_tv: f64,
    /// Probability of flipping the increment sign at each step.
    pub q: f64,
    pub seed: u64,
}

impl Default for Mu0Config {
    fn default() -> Self {
        Mu0Config {
            a: 0.0,
            b: 20.0,
            h: 1.0,
            sigma_start: 1.0,
            sigma_tv: 1.0,
            q: 0.1,
            seed: 0,
        }
    }
}

pub const MU0_KEYS: [&str; 7] = ["a", "b", "h", "sigma_start", "sigma_tv", "q", "seed"];

impl Mu0Config {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let bad = |m: String| Err(TrajectoryError::InvalidConfig(m));
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return bad(format!("need a < b, got a={} b={}", self.a, self.b));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("need h > 0, got {}", self.h));
        }
        let steps = (self.b - self.a) / self.h;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!("(b - a) / h = {steps} is not an integer"));
        }
        if !(self.sigma_start > 0.0 && self.sigma_tv > 0.0) {
            return bad("sigma_start and sigma_tv must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.q) {
            return bad(format!("q must lie in [0, 1], got {}", self.q));
        }
        Ok(())
    }

    /// Number of grid intervals `N`; a draw has `N + 1` points.
    pub fn steps(&self) -> usize {
        ((self.b - self.a) / self.h).round() as usize
    }

    /// Flat `key = value` text, one key per line, in [`MU0_KEYS`] order.
    pub fn to_key_values(&self) -> String {
        format!(
            "a = {}\nb = {}\nh = {}\nsigma_start = {}\nsigma_tv = {}\nq = {}\nseed = {}\n",
            self.a, self.b, self.h, self.sigma_start, self.sigma_tv, self.q, self.seed
        )
    }

    /// Reads `key = value` lines; `#` starts a comment and missing keys keep
    /// their defaults.
    pub fn from_key_values(text: &str) -> Result<Self, TrajectoryError> {
        let map = parse_key_values(text).map_err(TrajectoryError::InvalidConfig)?;
        let mut cfg = Mu0Config::default();
        for (key, value) in &map {
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| TrajectoryError::InvalidConfig(format!("{key}: not a number: {value}")))
            };
            match key.as_str() {
                "a" => cfg.a = num()?,
                "b" => cfg.b = num()?,
                "h" => cfg.h = num()?,
                "sigma_start" => cfg.sigma_start = num()?,
                "sigma_tv" => cfg.sigma_tv = num()?,
                "q" => cfg.q = num()?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| TrajectoryError::InvalidConfig(format!("seed: not an integer: {value}")))?
                }
                other => return Err(TrajectoryError::InvalidConfig(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `key = value` (or `key: value`) lines with `#` comments.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// One base-measure draw together with the total variation it was built from.
#[derive(Debug, Clone)]
pub struct Mu0Draw {
    pub trajectory: Trajectory,
    pub total_variation: f64,
}

/// Draw number `index` of the batch seeded by `cfg.seed`.
pub fn draw_mu0(cfg: &Mu0Config, index: u64) -> Mu0Draw {
    let mut rng = stream_rng(cfg.seed, index);
    let n = cfg.steps();
    let start = Normal::new(0.0, cfg.sigma_start)
        .expect("validated sigma")
        .sample(&mut rng);
    let z = Normal::new(0.0, cfg.sigma_tv)
        .expect("validated sigma")
        .sample(&mut rng);
    let k = z * z;

    let mut cuts = Vec::with_capacity(n + 1);
    cuts.push(0.0);
    cuts.extend((1..n).map(|_| rng.random::<f64>() * k));
    cuts[1..].sort_by(f64::total_cmp);
    cuts.push(k);

    let mut sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut values = Vec::with_capacity(n + 1);
    let mut x = start;
    values.push(x);
    for i in 0..n {
        // flip first, then use the sign for this increment
        if rng.random_bool(cfg.q) {
            sign = -sign;
        }
        x += sign * (cuts[i + 1] - cuts[i]);
        values.push(x);
    }
    Mu0Draw {
        trajectory: Trajectory {
            t0: cfg.a,
            h: cfg.h,
            values,
        },
        total_variation: k,
    }
}

pub fn sample_mu0(cfg: &Mu0Config, count: usize) -> Result<Vec<Trajectory>, TrajectoryError> {
    sample_mu0_with(cfg, count, Execution::default())
}

pub fn sample_mu0_with(cfg: &Mu0Config, count: usize, exec: Execution) -> Result<Vec<Trajectory>, TrajectoryError> {
    cfg.validate()?;
    if count == 0 {
        return Err(TrajectoryError::InvalidConfig("count must be at least 1".into()));
    }
    Ok(par::map_range(exec, count, |i| draw_mu0(cfg, i as u64).trajectory))
}

/// Writes `time,x` rows.
pub fn write_csv<W: Write>(xi: &Trajectory, out: W) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "x"])?;
    for (i, v) in xi.values.iter().enumerate() {
        w.write_record([xi.time(i).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `traj_id,time,x` rows for a whole batch.
pub fn write_batch_csv<W: Write>(set: &[Trajectory], out: W) -> Result<(), TrajectoryError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["traj_id", "time", "x"])?;
    for (id, xi) in set.iter().enumerate() {
        for (i, v) in xi.values.iter().enumerate() {
            w.write_record([id.to_string(), xi.time(i).to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn grid_from_times(times: &[f64]) -> Result<(f64, f64), TrajectoryError> {
    let t0 = *times.first().ok_or(TrajectoryError::Empty)?;
    if times.len() == 1 {
        return Ok((t0, 1.0));
    }
    let h = times[1] - t0;
    for (i, t) in times.iter().enumerate() {
        let expected = t0 + i as f64 * h;
        if (t - expected).abs() > 1e-9 * h.abs().max(expected.abs()).max(1.0) {
            return Err(TrajectoryError::Format(format!(
                "time column is not uniform at row {}",
                i + 1
            )));
        }
    }
    Ok((t0, h))
}

fn parse_field(s: &str, row: usize) -> Result<f64, TrajectoryError> {
    s.trim()
        .parse()
        .map_err(|_| TrajectoryError::Format(format!("row {row}: not a number: {s:?}")))
}

/// Reads a single `time,x` trajectory.
pub fn read_csv<R: Read>(input: R) -> Result<Trajectory, TrajectoryError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "time" || &headers[1] != "x" {
        return Err(TrajectoryError::Format("expected header time,x".into()));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        times.push(parse_field(&rec[0], row + 1)?);
        values.push(parse_field(&rec[1], row + 1)?);
    }
    let (t0, h) = grid_from_times(&times)?;
    Trajectory::new(t0, h, values)
}

/// Reads a `traj_id,time,x` batch; ids must appear in contiguous blocks.
pub fn read_batch_csv<R: Read>(input: R) -> Result<Vec<Trajectory>, TrajectoryError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.len() != 3 || &headers[0] != "traj_id" || &headers[1] != "time" || &headers[2] != "x" {
        return Err(TrajectoryError::Format("expected header traj_id,time,x".into()));
    }
    let mut out = Vec::new();
    let mut current: Option<(String, Vec<f64>, Vec<f64>)> = None;
    let mut seen = std::collections::HashSet::new();
    let finish = |(_, times, values): (String, Vec<f64>, Vec<f64>)| -> Result<Trajectory, TrajectoryError> {
        let (t0, h) = grid_from_times(&times)?;
        Trajectory::new(t0, h, values)
    };
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let id = rec[0].trim().to_string();
        let t = parse_field(&rec[1], row + 1)?;
        let v = parse_field(&rec[2], row + 1)?;
        match current.as_mut() {
            Some((cur, times, values)) if *cur == id => {
                times.push(t);
                values.push(v);
            }
            _ => {
                if !seen.insert(id.clone()) {
                    return Err(TrajectoryError::Format(format!("traj_id {id} is not contiguous")));
                }
                if let Some(done) = current.take() {
                    out.push(finish(done)?);
                }
                current = Some((id, vec![t], vec![v]));
            }
        }
    }
    if let Some(done) = current.take() {
        out.push(finish(done)?);
    }
    if out.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    Ok(out)
}

/// Loads a batch from a directory of `time,x` files (sorted by file name) or
/// from a single `traj_id,time,x` file.
pub fn load_batch(path: &Path) -> Result<Vec<Trajectory>, TrajectoryError> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        files.iter().map(|p| read_csv(std::fs::File::open(p)?)).collect()
    } else {
        read_batch_csv(std::fs::File::open(path)?)
    }
}
