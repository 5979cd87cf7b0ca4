//! ε-insensitive support vector regression solved by sequential minimal
//! optimisation on the dual.
//!
//! The dual is written over `2n` variables `a = (α, α*)` with labels
//! `s = (+1.., -1..)`:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  sᵀa = 0,  0 <= a <= C
//! Q_uv = s_u s_v K(u mod n, v mod n),  p = (ε - y, ε + y)
//! ```
//!
//! Working pairs are chosen by maximal violation with second-order gain,
//! and the model is `f(x) = Σ (α_i - α*_i) K(x_i, x) + b`.

use nalgebra::DMatrix;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SvrSolution {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Maximal KKT violation `m(a) - M(a)` at exit.
    pub violation: f64,
    pub converged: bool,
}

impl SvrSolution {
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, b)| a - b).collect()
    }
}

pub struct SvrProblem<'a> {
    pub kernel: &'a DMatrix<f64>,
    pub targets: &'a [f64],
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrProblem<'_> {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self) -> SvrSolution {
        let n = self.targets.len();
        let m = 2 * n;
        let c = self.c;
        let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
        let k = |u: usize, v: usize| self.kernel[(u % n, v % n)];
        let q = |u: usize, v: usize| sign(u) * sign(v) * k(u, v);

        let mut a = vec![0.0; m];
        let mut grad: Vec<f64> = (0..m)
            .map(|t| {
                if t < n {
                    self.epsilon - self.targets[t]
                } else {
                    self.epsilon + self.targets[t - n]
                }
            })
            .collect();
        let upper = |a: &[f64], t: usize| a[t] >= c;
        let lower = |a: &[f64], t: usize| a[t] <= 0.0;

        let mut iterations = 0;
        let mut violation;
        loop {
            // i: maximal -s_t G_t over I_up
            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..m {
                let in_up = if sign(t) > 0.0 { !upper(&a, t) } else { !lower(&a, t) };
                if in_up {
                    let v = -sign(t) * grad[t];
                    if v >= gmax {
                        gmax = v;
                        i = t;
                    }
                }
            }
            // j: best second-order gain over I_low
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..m {
                let in_low = if sign(t) > 0.0 { !lower(&a, t) } else { !upper(&a, t) };
                if !in_low {
                    continue;
                }
                let v = sign(t) * grad[t];
                gmax2 = gmax2.max(v);
                if i == usize::MAX {
                    continue;
                }
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = k(i, i) + k(t, t) - 2.0 * sign(i) * q(i, t);
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
            violation = (gmax + gmax2).max(0.0);
            if i == usize::MAX || j == usize::MAX || gmax + gmax2 < self.tol {
                break;
            }
            if iterations >= self.max_iter {
                break;
            }
            iterations += 1;

            let (old_i, old_j) = (a[i], a[j]);
            let qij = q(i, j);
            if sign(i) != sign(j) {
                let mut quad = k(i, i) + k(j, j) + 2.0 * qij;
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = a[i] - a[j];
                a[i] += delta;
                a[j] += delta;
                if diff > 0.0 {
                    if a[j] < 0.0 {
                        a[j] = 0.0;
                        a[i] = diff;
                    }
                } else if a[i] < 0.0 {
                    a[i] = 0.0;
                    a[j] = -diff;
                }
                if diff > 0.0 {
                    if a[i] > c {
                        a[i] = c;
                        a[j] = c - diff;
                    }
                } else if a[j] > c {
                    a[j] = c;
                    a[i] = c + diff;
                }
            } else {
                let mut quad = k(i, i) + k(j, j) - 2.0 * qij;
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (grad[i] - grad[j]) / quad;
                let sum = a[i] + a[j];
                a[i] -= delta;
                a[j] += delta;
                if sum > c {
                    if a[i] > c {
                        a[i] = c;
                        a[j] = sum - c;
                    }
                } else if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = sum;
                }
                if sum > c {
                    if a[j] > c {
                        a[j] = c;
                        a[i] = sum - c;
                    }
                } else if a[i] < 0.0 {
                    a[i] = 0.0;
                    a[j] = sum;
                }
            }
            let (di, dj) = (a[i] - old_i, a[j] - old_j);
            for (t, g) in grad.iter_mut().enumerate() {
                *g += q(i, t) * di + q(j, t) * dj;
            }
        }

        // bias from free variables, else the midpoint of the feasible interval
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut free_sum = 0.0;
        let mut free = 0usize;
        for t in 0..m {
            let yg = sign(t) * grad[t];
            if upper(&a, t) {
                if sign(t) < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if lower(&a, t) {
                if sign(t) > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        };

        SvrSolution {
            alpha: a[..n].to_vec(),
            alpha_star: a[n..].to_vec(),
            bias: -rho,
            iterations,
            violation,
            converged: violation < self.tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_tube_gives_a_flat_model() {
        let kernel = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.4, 0.2, 0.4, 1.0]);
        let y = [0.0, 1.0, 3.0];
        // max |y - mean| = 5/3
        let sol = SvrProblem {
            kernel: &kernel,
            targets: &y,
            c: 10.0,
            epsilon: 5.0 / 3.0,
            tol: 1e-4,
            max_iter: 1000,
        }
        .solve();
        assert!(sol.converged);
        assert!(sol.alpha.iter().chain(&sol.alpha_star).all(|a| *a == 0.0));
        assert_eq!(sol.iterations, 0);
        assert_eq!(sol.bias, 1.5);
    }

    #[test]
    fn identity_kernel_fits_each_point() {
        let kernel = DMatrix::identity(4, 4);
        let y = [1.0, -1.0, 2.0, 0.0];
        let sol = SvrProblem {
            kernel: &kernel,
            targets: &y,
            c: 100.0,
            epsilon: 0.1,
            tol: 1e-8,
            max_iter: 10_000,
        }
        .solve();
        assert!(sol.converged);
        let coef = sol.coefficients();
        for (i, yi) in y.iter().enumerate() {
            let f = coef[i] + sol.bias;
            assert!((f - yi).abs() <= 0.1 + 1e-6, "{f} vs {yi}");
        }
        let balance: f64 = coef.iter().sum();
        assert!(balance.abs() < 1e-9);
    }
}
