//! Exact stochastic simulation of mass-action reaction networks (Gillespie's
//! direct method) sampled onto a uniform output grid.

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{self, Execution};
use crate::rng::stream_rng;
use crate::trajectory::{znormalize, Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum SsaError {
    #[error("invalid reaction network: {0}")]
    InvalidNetwork(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("unknown built-in model {0:?} (expected immigration, isomerization or polymerase)")]
    UnknownModel(String),
    #[error("total propensity is not finite at t = {time}")]
    PropensityOverflow { time: f64 },
    #[error("reaction {reaction} drives species {species} negative at t = {time}")]
    NegativeCount { reaction: usize, species: usize, time: f64 },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("network file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One reaction: `reactants` lists species indices (with repetition, at most
/// two entries) and `change` is the net stoichiometric update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub change: Vec<i64>,
    pub rate: f64,
    #[serde(default)]
    pub reactants: Vec<usize>,
}

impl Reaction {
    /// Stochastic mass-action propensity.
    pub fn propensity(&self, state: &[u64]) -> f64 {
        match self.reactants.as_slice() {
            [] => self.rate,
            [i] => self.rate * state[*i] as f64,
            [i, j] if i == j => {
                let n = state[*i] as f64;
                self.rate * n * (n - 1.0) / 2.0
            }
            [i, j] => self.rate * state[*i] as f64 * state[*j] as f64,
            _ => unreachable!("validated order"),
        }
    }
}

/// Network file layout: `{"species": [...], "initial": [...], "reactions":
/// [{"change": [...], "rate": r, "reactants": [...]}], "observed": "name"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub initial: Vec<u64>,
    pub reactions: Vec<Reaction>,
    pub observed: String,
}

impl ReactionNetwork {
    pub fn validate(&self) -> Result<(), SsaError> {
        let bad = |m: String| Err(SsaError::InvalidNetwork(m));
        let n = self.species.len();
        if n == 0 {
            return bad("no species".into());
        }
        if self.initial.len() != n {
            return bad(format!("{} initial counts for {n} species", self.initial.len()));
        }
        if self.observed_index().is_none() {
            return bad(format!("observed species {:?} is not declared", self.observed));
        }
        for (r, reaction) in self.reactions.iter().enumerate() {
            if reaction.change.len() != n {
                return bad(format!(
                    "reaction {r}: change vector has {} entries",
                    reaction.change.len()
                ));
            }
            if !(reaction.rate > 0.0 && reaction.rate.is_finite()) {
                return bad(format!("reaction {r}: rate must be positive, got {}", reaction.rate));
            }
            if reaction.reactants.len() > 2 {
                return bad(format!("reaction {r}: order {} > 2", reaction.reactants.len()));
            }
            if let Some(i) = reaction.reactants.iter().find(|i| **i >= n) {
                return bad(format!("reaction {r}: reactant index {i} out of range"));
            }
        }
        Ok(())
    }

    pub fn observed_index(&self) -> Option<usize> {
        self.species.iter().position(|s| *s == self.observed)
    }

    pub fn from_json(text: &str) -> Result<Self, SsaError> {
        let net: ReactionNetwork = serde_json::from_str(text)?;
        net.validate()?;
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, SsaError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `X`, `∅ → X` at rate 1, `X(0) = 0`.
    pub fn immigration() -> Self {
        ReactionNetwork {
            species: vec!["X".into()],
            initial: vec![0],
            reactions: vec![Reaction {
                change: vec![1],
                rate: 1.0,
                reactants: vec![],
            }],
            observed: "X".into(),
        }
    }

    /// `A ⇌ B` with both rates 1, `A(0) = 100`, observing `B`.
    pub fn isomerization() -> Self {
        ReactionNetwork {
            species: vec!["A".into(), "B".into()],
            initial: vec![100, 0],
            reactions: vec![
                Reaction {
                    change: vec![-1, 1],
                    rate: 1.0,
                    reactants: vec![0],
                },
                Reaction {
                    change: vec![1, -1],
                    rate: 1.0,
                    reactants: vec![1],
                },
            ],
            observed: "B".into(),
        }
    }

    /// Template `T` producing `P` (`T → T + P`, rate 1), `T(0) = 10`,
    /// observing `P`; the mean product count grows as `10 t`.
    pub fn polymerase() -> Self {
        ReactionNetwork {
            species: vec!["T".into(), "P".into()],
            initial: vec![10, 0],
            reactions: vec![Reaction {
                change: vec![0, 1],
                rate: 1.0,
                reactants: vec![0],
            }],
            observed: "P".into(),
        }
    }
}

/// Looks up one of the three built-in networks by name.
pub fn builtin_model(name: &str) -> Result<ReactionNetwork, SsaError> {
    match name {
        "immigration" => Ok(ReactionNetwork::immigration()),
        "isomerization" => Ok(ReactionNetwork::isomerization()),
        "polymerase" => Ok(ReactionNetwork::polymerase()),
        other => Err(SsaError::UnknownModel(other.to_string())),
    }
}

/// Resolves `immigration|isomerization|polymerase|file:<path>`.
pub fn resolve_model(spec: &str) -> Result<ReactionNetwork, SsaError> {
    match spec.strip_prefix("file:") {
        Some(path) => ReactionNetwork::load(Path::new(path)),
        None => builtin_model(spec),
    }
}

/// Simulation horizon and output grid `t0 + i h`, `i = 0..=steps`. The
/// simulation itself starts at time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub t_end: f64,
    pub t0: f64,
    pub h: f64,
    pub steps: usize,
    pub seed: u64,
}

impl Default for SsaConfig {
    fn default() -> Self {
        SsaConfig {
            t_end: 20.0,
            t0: 0.0,
            h: 1.0,
            steps: 20,
            seed: 0,
        }
    }
}

impl SsaConfig {
    pub fn validate(&self) -> Result<(), SsaError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SsaError::InvalidConfig(format!("h must be positive, got {}", self.h)));
        }
        if !(self.t0 >= 0.0) {
            return Err(SsaError::InvalidConfig(format!(
                "t0 must be non-negative, got {}",
                self.t0
            )));
        }
        let last = self.t0 + self.steps as f64 * self.h;
        if !(self.t_end >= last - 1e-9 * last.max(1.0)) {
            return Err(SsaError::InvalidConfig(format!(
                "t_end {} ends before the last grid time {last}",
                self.t_end
            )));
        }
        Ok(())
    }
}

struct Stepper<'a> {
    net: &'a ReactionNetwork,
    rng: ChaCha8Rng,
    state: Vec<u64>,
    props: Vec<f64>,
    time: f64,
}

impl<'a> Stepper<'a> {
    fn new(net: &'a ReactionNetwork, seed: u64, index: u64) -> Self {
        Stepper {
            net,
            rng: stream_rng(seed, index),
            state: net.initial.clone(),
            props: vec![0.0; net.reactions.len()],
            time: 0.0,
        }
    }

    /// Draws the next event: its time and reaction, or `None` once the
    /// total propensity is zero.
    fn draw(&mut self) -> Result<Option<(f64, usize)>, SsaError> {
        let mut total = 0.0;
        for (p, r) in self.props.iter_mut().zip(&self.net.reactions) {
            *p = r.propensity(&self.state);
            total += *p;
        }
        if !total.is_finite() {
            return Err(SsaError::PropensityOverflow { time: self.time });
        }
        if total <= 0.0 {
            return Ok(None);
        }
        // 1 - u lies in (0, 1], so the log is finite
        let u: f64 = self.rng.random();
        let next = self.time - (1.0 - u).ln() / total;
        let target = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = self.props.iter().rposition(|p| *p > 0.0).expect("positive total");
        for (r, p) in self.props.iter().enumerate() {
            acc += p;
            if target < acc && *p > 0.0 {
                chosen = r;
                break;
            }
        }
        Ok(Some((next, chosen)))
    }

    fn fire(&mut self, time: f64, reaction: usize) -> Result<(), SsaError> {
        for (s, d) in self.net.reactions[reaction].change.iter().enumerate() {
            let updated = self.state[s] as i64 + d;
            if updated < 0 {
                return Err(SsaError::NegativeCount {
                    reaction,
                    species: s,
                    time,
                });
            }
            self.state[s] = updated as u64;
        }
        self.time = time;
        Ok(())
    }
}

/// Simulates path number `index` of the batch seeded by `cfg.seed`.
///
/// The grid value at time `t` is the state after the last event at or
/// before `t`. When the total propensity hits zero the state is held.
pub fn simulate_indexed(net: &ReactionNetwork, cfg: &SsaConfig, index: u64) -> Result<Trajectory, SsaError> {
    let observed = net.observed_index().expect("validated network");
    let mut sim = Stepper::new(net, cfg.seed, index);
    let grid_len = cfg.steps + 1;
    let grid_time = |i: usize| cfg.t0 + i as f64 * cfg.h;
    let mut values = Vec::with_capacity(grid_len);

    while values.len() < grid_len {
        let event = sim.draw()?;
        let next = event.map_or(f64::INFINITY, |(t, _)| t);
        while values.len() < grid_len && grid_time(values.len()) < next {
            values.push(sim.state[observed] as f64);
        }
        match event {
            Some((t, r)) if values.len() < grid_len && t <= cfg.t_end => sim.fire(t, r)?,
            _ => break,
        }
    }
    while values.len() < grid_len {
        values.push(sim.state[observed] as f64);
    }
    Ok(Trajectory::new(cfg.t0, cfg.h, values)?)
}

/// Event times of path `index` up to `t_end`, with the observed count right
/// after each event.
pub fn simulate_events(net: &ReactionNetwork, t_end: f64, seed: u64, index: u64) -> Result<Vec<(f64, u64)>, SsaError> {
    net.validate()?;
    let observed = net.observed_index().expect("validated network");
    let mut sim = Stepper::new(net, seed, index);
    let mut events = Vec::new();
    while let Some((t, r)) = sim.draw()? {
        if t > t_end {
            break;
        }
        sim.fire(t, r)?;
        events.push((t, sim.state[observed]));
    }
    Ok(events)
}

pub fn gillespie_simulate(net: &ReactionNetwork, cfg: &SsaConfig) -> Result<Trajectory, SsaError> {
    net.validate()?;
    cfg.validate()?;
    simulate_indexed(net, cfg, 0)
}

/// `count` independent paths (streams `0..count`), optionally z-normalized as
/// a batch.
pub fn sample_process(
    net: &ReactionNetwork,
    cfg: &SsaConfig,
    count: usize,
    normalize: bool,
) -> Result<Vec<Trajectory>, SsaError> {
    sample_process_with(net, cfg, count, normalize, Execution::default())
}

pub fn sample_process_with(
    net: &ReactionNetwork,
    cfg: &SsaConfig,
    count: usize,
    normalize: bool,
    exec: Execution,
) -> Result<Vec<Trajectory>, SsaError> {
    net.validate()?;
    cfg.validate()?;
    if count == 0 {
        return Err(SsaError::InvalidConfig("count must be at least 1".into()));
    }
    let batch = par::try_map_range(exec, count, |i| simulate_indexed(net, cfg, i as u64))?;
    if normalize {
        Ok(znormalize(&batch)?)
    } else {
        Ok(batch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_models_resolve() {
        assert_eq!(builtin_model("immigration").unwrap(), ReactionNetwork::immigration());
        assert_eq!(builtin_model("isomerization").unwrap().initial, vec![100, 0]);
        assert_eq!(builtin_model("polymerase").unwrap().observed, "P");
        assert!(matches!(builtin_model("lotka"), Err(SsaError::UnknownModel(_))));
        for name in ["immigration", "isomerization", "polymerase"] {
            builtin_model(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn zero_propensity_holds_initial_counts() {
        let net = ReactionNetwork {
            species: vec!["A".into(), "B".into()],
            initial: vec![0, 7],
            reactions: vec![Reaction {
                change: vec![-1, 1],
                rate: 2.0,
                reactants: vec![0],
            }],
            observed: "B".into(),
        };
        let xi = gillespie_simulate(&net, &SsaConfig::default()).unwrap();
        assert_eq!(xi.values(), &[7.0; 21]);
    }

    #[test]
    fn grid_starts_at_initial_state() {
        let xi = gillespie_simulate(&ReactionNetwork::immigration(), &SsaConfig::default()).unwrap();
        assert_eq!(xi.len(), 21);
        assert_eq!(xi.values()[0], 0.0);
        assert!(xi.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn second_order_propensity() {
        let r = Reaction {
            change: vec![-2],
            rate: 3.0,
            reactants: vec![0, 0],
        };
        assert_eq!(r.propensity(&[4]), 3.0 * 4.0 * 3.0 / 2.0);
        let r = Reaction {
            change: vec![-1, -1],
            rate: 0.5,
            reactants: vec![0, 1],
        };
        assert_eq!(r.propensity(&[4, 6]), 12.0);
    }

    #[test]
    fn rejects_bad_networks_and_configs() {
        let mut net = ReactionNetwork::immigration();
        net.observed = "Y".into();
        assert!(net.validate().is_err());
        let mut net = ReactionNetwork::immigration();
        net.reactions[0].rate = 0.0;
        assert!(net.validate().is_err());
        let mut net = ReactionNetwork::immigration();
        net.reactions[0].change = vec![1, 0];
        assert!(net.validate().is_err());
        let cfg = SsaConfig {
            t_end: 5.0,
            ..SsaConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn inconsistent_stoichiometry_is_reported() {
        let net = ReactionNetwork {
            species: vec!["X".into()],
            initial: vec![0],
            reactions: vec![Reaction {
                change: vec![-1],
                rate: 1.0,
                reactants: vec![],
            }],
            observed: "X".into(),
        };
        assert!(matches!(
            gillespie_simulate(&net, &SsaConfig::default()),
            Err(SsaError::NegativeCount { .. })
        ));
    }

    #[test]
    fn overflowing_propensity_is_reported() {
        let net = ReactionNetwork {
            species: vec!["X".into()],
            initial: vec![10],
            reactions: vec![Reaction {
                change: vec![0],
                rate: f64::MAX,
                reactants: vec![0],
            }],
            observed: "X".into(),
        };
        assert!(matches!(
            gillespie_simulate(&net, &SsaConfig::default()),
            Err(SsaError::PropensityOverflow { .. })
        ));
    }

    #[test]
    fn event_path_matches_grid_sampling() {
        let net = ReactionNetwork::immigration();
        let cfg = SsaConfig {
            seed: 4,
            ..SsaConfig::default()
        };
        let events = simulate_events(&net, cfg.t_end, cfg.seed, 2).unwrap();
        let xi = simulate_indexed(&net, &cfg, 2).unwrap();
        for (i, v) in xi.values().iter().enumerate() {
            let t = xi.time(i);
            let expected = events.iter().take_while(|(te, _)| *te <= t).count();
            assert_eq!(*v, expected as f64);
        }
        assert!(events.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn network_json_round_trip() {
        let net = ReactionNetwork::isomerization();
        let text = serde_json::to_string(&net).unwrap();
        assert_eq!(ReactionNetwork::from_json(&text).unwrap(), net);
        let minimal = r#"{"species":["X"],"initial":[0],"reactions":[{"change":[1],"rate":2.5}],"observed":"X"}"#;
        assert_eq!(ReactionNetwork::from_json(minimal).unwrap().reactions[0].rate, 2.5);
    }
}
