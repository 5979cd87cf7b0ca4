//! Signal temporal logic over a single scalar signal `x`.
//!
//! Formulae are evaluated on gridded [`Trajectory`](crate::Trajectory) values;
//! temporal operators quantify over grid points only. An operator without a
//! time window ranges over the whole remaining trace.

mod monitor;
mod parse;

use std::fmt;

use thiserror::Error;

pub use monitor::{boolean_sat, boolean_signal, robustness, robustness_signal, MonitorError};
pub use parse::{parse_formula, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparison {
    /// `x >= k`
    Ge,
    /// `x <= k`
    Le,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Ge => ">=",
            Comparison::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("time window [{lo}, {hi}] must satisfy 0 <= lo < hi < inf")]
pub struct WindowError {
    pub lo: f64,
    pub hi: f64,
}

/// Closed time window `[lo, hi]` in seconds, relative to the evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    lo: f64,
    hi: f64,
}

impl TimeWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self, WindowError> {
        if lo >= 0.0 && lo < hi && hi.is_finite() {
            Ok(TimeWindow { lo, hi })
        } else {
            Err(WindowError { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Grid offsets `j` with `lo <= j * h <= hi`, or `None` if no grid point
    /// falls inside the window.
    pub fn grid_offsets(&self, h: f64) -> Option<(usize, usize)> {
        const SLACK: f64 = 1e-9;
        let first = (self.lo / h - SLACK).ceil().max(0.0);
        let last = (self.hi / h + SLACK).floor();
        if first > last {
            None
        } else {
            Some((first as usize, last as usize))
        }
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// STL abstract syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Atom { cmp: Comparison, threshold: f64 },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until(Box<Formula>, Box<Formula>, Option<TimeWindow>),
    Eventually(Box<Formula>, Option<TimeWindow>),
    Globally(Box<Formula>, Option<TimeWindow>),
}

impl Formula {
    /// `x >= threshold`. Panics on a non-finite threshold.
    pub fn ge(threshold: f64) -> Formula {
        assert!(threshold.is_finite(), "atom threshold must be finite");
        Formula::Atom {
            cmp: Comparison::Ge,
            threshold,
        }
    }

    /// `x <= threshold`. Panics on a non-finite threshold.
    pub fn le(threshold: f64) -> Formula {
        assert!(threshold.is_finite(), "atom threshold must be finite");
        Formula::Atom {
            cmp: Comparison::Le,
            threshold,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(a: Formula, b: Formula, window: Option<TimeWindow>) -> Formula {
        Formula::Until(Box::new(a), Box::new(b), window)
    }

    pub fn eventually(f: Formula, window: Option<TimeWindow>) -> Formula {
        Formula::Eventually(Box::new(f), window)
    }

    pub fn globally(f: Formula, window: Option<TimeWindow>) -> Formula {
        Formula::Globally(Box::new(f), window)
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Atom { .. } => vec![],
            Formula::Not(f) | Formula::Eventually(f, _) | Formula::Globally(f, _) => vec![f],
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(a, b, _) => vec![a, b],
        }
    }

    /// Height of the tree; a leaf has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Atom { .. } => 1,
            _ => self.children().iter().map(|c| c.atom_count()).sum(),
        }
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<(Comparison, f64)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<(Comparison, f64)>) {
        if let Formula::Atom { cmp, threshold } = self {
            out.push((*cmp, *threshold));
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn contains_true(&self) -> bool {
        matches!(self, Formula::True) || self.children().iter().any(|c| c.contains_true())
    }

    /// Largest `|threshold|` over all atoms, 0 if there are none.
    pub fn max_abs_threshold(&self) -> f64 {
        self.atoms().iter().map(|(_, k)| k.abs()).fold(0.0, f64::max)
    }
}

/// Fully parenthesized canonical form; `parse_formula` inverts it exactly.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom { cmp, threshold } => write!(f, "x {} {}", cmp.symbol(), threshold),
            Formula::Not(a) => write!(f, "not ({a})"),
            Formula::And(a, b) => write!(f, "({a}) and ({b})"),
            Formula::Or(a, b) => write!(f, "({a}) or ({b})"),
            Formula::Until(a, b, None) => write!(f, "({a}) U ({b})"),
            Formula::Until(a, b, Some(w)) => write!(f, "({a}) U{w} ({b})"),
            Formula::Eventually(a, None) => write!(f, "F ({a})"),
            Formula::Eventually(a, Some(w)) => write!(f, "F{w} ({a})"),
            Formula::Globally(a, None) => write!(f, "G ({a})"),
            Formula::Globally(a, Some(w)) => write!(f, "G{w} ({a})"),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
