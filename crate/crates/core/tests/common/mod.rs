#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stl_kernel::stl::{Comparison, Formula, TimeWindow};
use stl_kernel::Trajectory;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random formula over every operator, with and without windows.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, allow_true: bool) -> Formula {
    let leaf = depth == 0 || rng.random_bool(0.25);
    if leaf {
        if allow_true && rng.random_bool(0.05) {
            return Formula::True;
        }
        let k = rng.random_range(-3.0..3.0);
        return if rng.random_bool(0.5) {
            Formula::ge(k)
        } else {
            Formula::le(k)
        };
    }
    let window = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.5) {
            None
        } else {
            let lo = rng.random_range(0..6) as f64 * if rng.random_bool(0.3) { 0.5 } else { 1.0 };
            let hi = lo + rng.random_range(1..8) as f64;
            Some(TimeWindow::new(lo, hi).unwrap())
        }
    };
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1, allow_true);
    match rng.random_range(0..6) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => {
            let w = window(rng);
            Formula::until(sub(rng), sub(rng), w)
        }
        4 => {
            let w = window(rng);
            Formula::eventually(sub(rng), w)
        }
        _ => {
            let w = window(rng);
            Formula::globally(sub(rng), w)
        }
    }
}

/// Random walk trajectory with 21 points on [0, 20].
pub fn random_trajectory(rng: &mut ChaCha8Rng) -> Trajectory {
    let mut x: f64 = rng.random_range(-2.0..2.0);
    let values = (0..21)
        .map(|_| {
            x += rng.random_range(-1.0..1.0);
            x
        })
        .collect();
    Trajectory::new(0.0, 1.0, values).unwrap()
}

/// Indices `j >= i` whose time offset from `i` lies in the window.
fn in_window(w: Option<TimeWindow>, h: f64, i: usize, j: usize) -> bool {
    match w {
        None => j >= i,
        Some(w) => {
            let d = (j as f64 - i as f64) * h;
            j >= i && d >= w.lo() - 1e-9 * h && d <= w.hi() + 1e-9 * h
        }
    }
}

/// Direct transcription of the robustness semantics: every temporal operator
/// enumerates all (t', t'') pairs explicitly. Memoised per (node, t).
pub struct Oracle<'a> {
    xi: &'a Trajectory,
    memo: HashMap<(usize, usize), f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(xi: &'a Trajectory) -> Self {
        Oracle {
            xi,
            memo: HashMap::new(),
        }
    }

    pub fn rho(&mut self, f: &Formula, t: usize) -> f64 {
        let key = (f as *const Formula as usize, t);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let n = self.xi.len();
        let h = self.xi.h();
        let x = self.xi.values();
        let v = match f {
            Formula::True => f64::INFINITY,
            Formula::Atom {
                cmp: Comparison::Ge,
                threshold,
            } => x[t] - threshold,
            Formula::Atom {
                cmp: Comparison::Le,
                threshold,
            } => threshold - x[t],
            Formula::Not(a) => -self.rho(a, t),
            Formula::And(a, b) => {
                let (p, q) = (self.rho(a, t), self.rho(b, t));
                if p < q {
                    p
                } else {
                    q
                }
            }
            Formula::Or(a, b) => {
                let (p, q) = (self.rho(a, t), self.rho(b, t));
                if p > q {
                    p
                } else {
                    q
                }
            }
            Formula::Eventually(a, w) => {
                let mut best = f64::NEG_INFINITY;
                for j in 0..n {
                    if in_window(*w, h, t, j) {
                        let r = self.rho(a, j);
                        if r > best {
                            best = r;
                        }
                    }
                }
                best
            }
            Formula::Globally(a, w) => {
                let mut worst = f64::INFINITY;
                for j in 0..n {
                    if in_window(*w, h, t, j) {
                        let r = self.rho(a, j);
                        if r < worst {
                            worst = r;
                        }
                    }
                }
                worst
            }
            Formula::Until(a, b, w) => {
                let mut best = f64::NEG_INFINITY;
                for j in 0..n {
                    if !in_window(*w, h, t, j) {
                        continue;
                    }
                    let mut inner = self.rho(b, j);
                    for k in t..=j {
                        let r = self.rho(a, k);
                        if r < inner {
                            inner = r;
                        }
                    }
                    if inner > best {
                        best = inner;
                    }
                }
                best
            }
        };
        self.memo.insert(key, v);
        v
    }
}

pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}
