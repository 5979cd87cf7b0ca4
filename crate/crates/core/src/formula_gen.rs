//! Random formulae grown bottom-up from a pool of atoms.
//!
//! A draw picks `n` uniformly in `1..=max_atoms`, creates atoms `x >= k_i`
//! with `k_i` uniform on the threshold range, then repeatedly picks an
//! operator (`¬` with probability 1/2, otherwise uniformly one of `∨ ∧ U F G`),
//! applies it to one or two formulae removed at random from the pool and puts
//! the result back, until one formula remains. With probability 1/2 the
//! result is finally wrapped in `¬`, `F` or `G`. Temporal operators carry no
//! window.
//!
//! Unary operators do not shrink the pool, so after three unary applications
//! in a row the next operator is drawn uniformly from the binary ones.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};
use crate::rng::stream_rng;
use crate::stl::{parse_formula, Formula, ParseError};

/// Consecutive unary applications allowed before a binary operator is forced.
pub const MAX_CONSECUTIVE_UNARY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaGenConfig {
    pub max_atoms: usize,
    pub threshold_lo: f64,
    pub threshold_hi: f64,
    pub seed: u64,
}

impl Default for FormulaGenConfig {
    fn default() -> Self {
        FormulaGenConfig {
            max_atoms: 6,
            threshold_lo: -7.0,
            threshold_hi: 7.0,
            seed: 0,
        }
    }
}

impl FormulaGenConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_atoms == 0 {
            return Err("max_atoms must be at least 1".into());
        }
        if !(self.threshold_lo.is_finite() && self.threshold_hi.is_finite() && self.threshold_lo < self.threshold_hi) {
            return Err(format!(
                "need threshold_lo < threshold_hi, got [{}, {}]",
                self.threshold_lo, self.threshold_hi
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Not,
    Or,
    And,
    Until,
    Eventually,
    Globally,
}

impl Op {
    fn is_unary(self) -> bool {
        matches!(self, Op::Not | Op::Eventually | Op::Globally)
    }
}

/// Bookkeeping from one draw, for checking the sampling distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawInfo {
    pub atoms: usize,
    pub wrapped: bool,
}

#[derive(Debug, Clone)]
pub struct FormulaGenerator {
    cfg: FormulaGenConfig,
}

impl FormulaGenerator {
    pub fn new(cfg: FormulaGenConfig) -> Result<Self, String> {
        cfg.validate()?;
        Ok(FormulaGenerator { cfg })
    }

    pub fn config(&self) -> &FormulaGenConfig {
        &self.cfg
    }

    /// Formula number `index` of the corpus seeded by the config.
    pub fn sample(&self, index: u64) -> Formula {
        self.sample_with_info(index).0
    }

    pub fn sample_with_info(&self, index: u64) -> (Formula, DrawInfo) {
        let mut rng = stream_rng(self.cfg.seed, index);
        let n = rng.random_range(1..=self.cfg.max_atoms);
        let mut pool: Vec<Formula> = (0..n)
            .map(|_| Formula::ge(rng.random_range(self.cfg.threshold_lo..=self.cfg.threshold_hi)))
            .collect();

        let mut unary_run = 0;
        while pool.len() > 1 {
            let op = if unary_run >= MAX_CONSECUTIVE_UNARY {
                *[Op::Or, Op::And, Op::Until].choose(&mut rng).expect("non-empty")
            } else if rng.random_bool(0.5) {
                Op::Not
            } else {
                *[Op::Or, Op::And, Op::Until, Op::Eventually, Op::Globally]
                    .choose(&mut rng)
                    .expect("non-empty")
            };
            if op.is_unary() {
                unary_run += 1;
                let f = take_random(&mut pool, &mut rng);
                pool.push(apply_unary(op, f));
            } else {
                unary_run = 0;
                let a = take_random(&mut pool, &mut rng);
                let b = take_random(&mut pool, &mut rng);
                pool.push(match op {
                    Op::Or => Formula::or(a, b),
                    Op::And => Formula::and(a, b),
                    _ => Formula::until(a, b, None),
                });
            }
        }

        let last = pool.pop().expect("pool holds one formula");
        if rng.random_bool(0.5) {
            (
                last,
                DrawInfo {
                    atoms: n,
                    wrapped: false,
                },
            )
        } else {
            let op = *[Op::Not, Op::Eventually, Op::Globally]
                .choose(&mut rng)
                .expect("non-empty");
            (
                apply_unary(op, last),
                DrawInfo {
                    atoms: n,
                    wrapped: true,
                },
            )
        }
    }

    pub fn corpus(&self, count: usize) -> Vec<Formula> {
        self.corpus_with(count, Execution::default())
    }

    pub fn corpus_with(&self, count: usize, exec: Execution) -> Vec<Formula> {
        par::map_range(exec, count, |i| self.sample(i as u64))
    }
}

fn take_random(pool: &mut Vec<Formula>, rng: &mut ChaCha8Rng) -> Formula {
    let i = rng.random_range(0..pool.len());
    pool.swap_remove(i)
}

fn apply_unary(op: Op, f: Formula) -> Formula {
    match op {
        Op::Not => Formula::not(f),
        Op::Eventually => Formula::eventually(f, None),
        Op::Globally => Formula::globally(f, None),
        _ => unreachable!("binary operator"),
    }
}

pub fn sample_formula(cfg: &FormulaGenConfig) -> Result<Formula, String> {
    Ok(FormulaGenerator::new(cfg.clone())?.sample(0))
}

pub fn sample_corpus(cfg: &FormulaGenConfig, count: usize) -> Result<Vec<Formula>, String> {
    Ok(FormulaGenerator::new(cfg.clone())?.corpus(count))
}

/// One formula per line.
pub fn write_corpus(formulas: &[Formula]) -> String {
    let mut out = String::new();
    for f in formulas {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

/// Reads one formula per line, skipping blank lines and `#` comments. Errors
/// carry the 1-based line number.
pub fn read_corpus(text: &str) -> Result<Vec<Formula>, (usize, ParseError)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| parse_formula(l).map_err(|e| (i + 1, e)))
        .collect()
}
