//! Kernel ridge regression: solve `(G + λI) α = y` by Cholesky.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::kernel::GramMatrix;

pub struct KrrSolution {
    pub alpha: Vec<f64>,
    /// Diagonal jitter that had to be added before the factorisation
    /// succeeded; 0 if none.
    pub jitter: f64,
}

/// Refinement passes applied after the first triangular solve.
const REFINE_STEPS: usize = 2;

fn factor_solve(g: &DMatrix<f64>, lambda: f64, y: &DVector<f64>) -> Option<DVector<f64>> {
    let n = g.nrows();
    let system = g + DMatrix::<f64>::identity(n, n) * lambda;
    let chol = Cholesky::new(system.clone())?;
    let mut alpha = chol.solve(y);
    for _ in 0..REFINE_STEPS {
        let residual = y - &system * &alpha;
        alpha += chol.solve(&residual);
    }
    Some(alpha)
}

/// Returns `None` when `G + λI` is not positive definite even after jitter.
pub fn solve(gram: &GramMatrix, lambda: f64, targets: &[f64]) -> Option<KrrSolution> {
    let y = DVector::from_column_slice(targets);
    if let Some(alpha) = factor_solve(gram.entries(), lambda, &y) {
        return Some(KrrSolution {
            alpha: alpha.iter().copied().collect(),
            jitter: 0.0,
        });
    }
    let jittered = gram.with_jitter();
    factor_solve(jittered.entries(), lambda, &y).map(|alpha| KrrSolution {
        alpha: alpha.iter().copied().collect(),
        jitter: jittered.jitter(),
    })
}
