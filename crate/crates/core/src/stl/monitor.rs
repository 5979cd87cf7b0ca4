//! Boolean and quantitative monitors.
//!
//! Robustness lives in the extended reals: `true` evaluates to `+inf`, and a
//! temporal window that contains no grid point yields the identity of its
//! reduction (`-inf` for `F` and `U`, `+inf` for `G`). Only `min`, `max` and
//! negation are applied above the atoms, so every route through the semantics
//! produces bit-identical values.

use thiserror::Error;

use super::{Comparison, Formula, TimeWindow};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("time index {index} out of range for a trajectory of {len} points")]
pub struct MonitorError {
    pub index: usize,
    pub len: usize,
}

/// Flattened formula; children always precede their parents.
enum Node {
    True,
    Atom(Comparison, f64),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Until(usize, usize, Option<TimeWindow>),
    Eventually(usize, Option<TimeWindow>),
    Globally(usize, Option<TimeWindow>),
}

fn flatten(f: &Formula, nodes: &mut Vec<Node>) -> usize {
    let node = match f {
        Formula::True => Node::True,
        Formula::Atom { cmp, threshold } => Node::Atom(*cmp, *threshold),
        Formula::Not(a) => Node::Not(flatten(a, nodes)),
        Formula::And(a, b) => {
            let a = flatten(a, nodes);
            Node::And(a, flatten(b, nodes))
        }
        Formula::Or(a, b) => {
            let a = flatten(a, nodes);
            Node::Or(a, flatten(b, nodes))
        }
        Formula::Until(a, b, w) => {
            let a = flatten(a, nodes);
            Node::Until(a, flatten(b, nodes), *w)
        }
        Formula::Eventually(a, w) => Node::Eventually(flatten(a, nodes), *w),
        Formula::Globally(a, w) => Node::Globally(flatten(a, nodes), *w),
    };
    nodes.push(node);
    nodes.len() - 1
}

/// Inclusive index range `[i + first, min(i + last, len - 1)]` of a window
/// anchored at `i`; `None` when it is empty.
fn window_range(w: Option<TimeWindow>, h: f64, i: usize, len: usize) -> Option<(usize, usize)> {
    let (first, last) = match w {
        None => (0, len - 1),
        Some(w) => w.grid_offsets(h)?,
    };
    let start = i.checked_add(first)?;
    if start >= len {
        return None;
    }
    Some((start, i.saturating_add(last).min(len - 1)))
}

fn check_index(xi: &Trajectory, t_index: usize) -> Result<(), MonitorError> {
    if t_index < xi.len() {
        Ok(())
    } else {
        Err(MonitorError {
            index: t_index,
            len: xi.len(),
        })
    }
}

/// Robustness `ρ(f, xi, t)` at grid index `t_index`.
///
/// Evaluates the pointwise definition directly, memoising each
/// (subformula, time) pair it visits.
pub fn robustness(f: &Formula, xi: &Trajectory, t_index: usize) -> Result<f64, MonitorError> {
    check_index(xi, t_index)?;
    let mut nodes = Vec::new();
    let root = flatten(f, &mut nodes);
    let mut memo = vec![vec![None; xi.len()]; nodes.len()];
    Ok(Pointwise {
        nodes: &nodes,
        xi,
        memo: &mut memo,
    }
    .eval(root, t_index))
}

struct Pointwise<'a> {
    nodes: &'a [Node],
    xi: &'a Trajectory,
    memo: &'a mut Vec<Vec<Option<f64>>>,
}

impl Pointwise<'_> {
    fn eval(&mut self, node: usize, t: usize) -> f64 {
        if let Some(v) = self.memo[node][t] {
            return v;
        }
        let len = self.xi.len();
        let h = self.xi.h();
        let v = match self.nodes[node] {
            Node::True => f64::INFINITY,
            Node::Atom(Comparison::Ge, k) => self.xi.values()[t] - k,
            Node::Atom(Comparison::Le, k) => k - self.xi.values()[t],
            Node::Not(a) => -self.eval(a, t),
            Node::And(a, b) => self.eval(a, t).min(self.eval(b, t)),
            Node::Or(a, b) => self.eval(a, t).max(self.eval(b, t)),
            Node::Eventually(a, w) => match window_range(w, h, t, len) {
                None => f64::NEG_INFINITY,
                Some((s, e)) => (s..=e).map(|j| self.eval(a, j)).fold(f64::NEG_INFINITY, f64::max),
            },
            Node::Globally(a, w) => match window_range(w, h, t, len) {
                None => f64::INFINITY,
                Some((s, e)) => (s..=e).map(|j| self.eval(a, j)).fold(f64::INFINITY, f64::min),
            },
            Node::Until(a, b, w) => match window_range(w, h, t, len) {
                None => f64::NEG_INFINITY,
                Some((s, e)) => {
                    let mut best = f64::NEG_INFINITY;
                    let mut hold = f64::INFINITY;
                    for j in t..=e {
                        hold = hold.min(self.eval(a, j));
                        if j >= s {
                            best = best.max(self.eval(b, j).min(hold));
                        }
                    }
                    best
                }
            },
        };
        self.memo[node][t] = Some(v);
        v
    }
}

/// Robustness at every grid index, computed bottom-up one subformula at a time.
pub fn robustness_signal(f: &Formula, xi: &Trajectory) -> Vec<f64> {
    let mut nodes = Vec::new();
    flatten(f, &mut nodes);
    let x = xi.values();
    let len = x.len();
    let h = xi.h();
    let mut signals: Vec<Vec<f64>> = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let s = match *node {
            Node::True => vec![f64::INFINITY; len],
            Node::Atom(Comparison::Ge, k) => x.iter().map(|v| v - k).collect(),
            Node::Atom(Comparison::Le, k) => x.iter().map(|v| k - v).collect(),
            Node::Not(a) => signals[a].iter().map(|v| -v).collect(),
            Node::And(a, b) => zip_with(&signals[a], &signals[b], f64::min),
            Node::Or(a, b) => zip_with(&signals[a], &signals[b], f64::max),
            Node::Eventually(a, w) => window_reduce(&signals[a], w, h, f64::NEG_INFINITY, f64::max),
            Node::Globally(a, w) => window_reduce(&signals[a], w, h, f64::INFINITY, f64::min),
            Node::Until(a, b, w) => until_signal(&signals[a], &signals[b], w, h),
        };
        signals.push(s);
    }
    signals.pop().expect("formula has at least one node")
}

fn zip_with(a: &[f64], b: &[f64], op: fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| op(*x, *y)).collect()
}

fn window_reduce(s: &[f64], w: Option<TimeWindow>, h: f64, identity: f64, op: fn(f64, f64) -> f64) -> Vec<f64> {
    let len = s.len();
    let mut out = vec![identity; len];
    match w {
        None => {
            // suffix scan
            let mut acc = identity;
            for i in (0..len).rev() {
                acc = op(acc, s[i]);
                out[i] = acc;
            }
        }
        Some(_) => {
            for (i, o) in out.iter_mut().enumerate() {
                if let Some((start, end)) = window_range(w, h, i, len) {
                    *o = s[start..=end].iter().copied().fold(identity, op);
                }
            }
        }
    }
    out
}

fn until_signal(lhs: &[f64], rhs: &[f64], w: Option<TimeWindow>, h: f64) -> Vec<f64> {
    let len = lhs.len();
    let mut out = vec![f64::NEG_INFINITY; len];
    match w {
        None => {
            // u(i) = max(min(rhs_i, lhs_i), min(lhs_i, u(i+1)))
            let mut next = f64::NEG_INFINITY;
            for i in (0..len).rev() {
                next = rhs[i].min(lhs[i]).max(lhs[i].min(next));
                out[i] = next;
            }
        }
        Some(_) => {
            for (i, o) in out.iter_mut().enumerate() {
                if let Some((start, end)) = window_range(w, h, i, len) {
                    let mut hold = f64::INFINITY;
                    let mut best = f64::NEG_INFINITY;
                    for j in i..=end {
                        hold = hold.min(lhs[j]);
                        if j >= start {
                            best = best.max(rhs[j].min(hold));
                        }
                    }
                    *o = best;
                }
            }
        }
    }
    out
}

/// Boolean satisfaction `(xi, t) |= f` at every grid index.
pub fn boolean_signal(f: &Formula, xi: &Trajectory) -> Vec<bool> {
    let mut nodes = Vec::new();
    flatten(f, &mut nodes);
    let x = xi.values();
    let len = x.len();
    let h = xi.h();
    let mut signals: Vec<Vec<bool>> = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let s: Vec<bool> = match *node {
            Node::True => vec![true; len],
            Node::Atom(Comparison::Ge, k) => x.iter().map(|v| *v >= k).collect(),
            Node::Atom(Comparison::Le, k) => x.iter().map(|v| *v <= k).collect(),
            Node::Not(a) => signals[a].iter().map(|v| !v).collect(),
            Node::And(a, b) => signals[a].iter().zip(&signals[b]).map(|(p, q)| *p && *q).collect(),
            Node::Or(a, b) => signals[a].iter().zip(&signals[b]).map(|(p, q)| *p || *q).collect(),
            Node::Eventually(a, w) => (0..len)
                .map(|i| window_range(w, h, i, len).is_some_and(|(s, e)| signals[a][s..=e].iter().any(|v| *v)))
                .collect(),
            Node::Globally(a, w) => (0..len)
                .map(|i| window_range(w, h, i, len).is_none_or(|(s, e)| signals[a][s..=e].iter().all(|v| *v)))
                .collect(),
            Node::Until(a, b, w) => (0..len)
                .map(|i| {
                    window_range(w, h, i, len)
                        .is_some_and(|(s, e)| (s..=e).any(|j| signals[b][j] && signals[a][i..=j].iter().all(|v| *v)))
                })
                .collect(),
        };
        signals.push(s);
    }
    signals.pop().expect("formula has at least one node")
}

pub fn boolean_sat(f: &Formula, xi: &Trajectory, t_index: usize) -> Result<bool, MonitorError> {
    check_index(xi, t_index)?;
    Ok(boolean_signal(f, xi)[t_index])
}
