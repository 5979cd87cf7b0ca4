use nalgebra::{DMatrix, DVector};
use stl_kernel::kernel::estimate_targets;
use stl_kernel::regression::svr::SvrProblem;
use stl_kernel::regression::{
    self, default_sigma_grid, evaluate_mse, fit, krr, logspace, mse, split_indices, Fitted, Hyper, KernelBasis,
};
use stl_kernel::trajectory::{sample_mu0, Mu0Config};
use stl_kernel::{
    Execution, Formula, FormulaGenConfig, FormulaGenerator, GramKind, GramMatrix, KernelSample, Method, Target,
    TrainingSet,
};

struct Fixture {
    sample: KernelSample,
    corpus: Vec<Formula>,
    robustness: Vec<f64>,
    satprob: Vec<f64>,
}

fn fixture(seed: u64, n: usize, m: usize) -> Fixture {
    let mu0 = |s, count| {
        sample_mu0(
            &Mu0Config {
                seed: s,
                ..Mu0Config::default()
            },
            count,
        )
        .unwrap()
    };
    let sample = KernelSample::new(mu0(seed, m)).unwrap();
    let corpus = FormulaGenerator::new(FormulaGenConfig {
        seed,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(n);
    let targets_from = mu0(seed + 1_000, 2_000);
    let est = |target| -> Vec<f64> {
        estimate_targets(&corpus, &targets_from, target, 0, Execution::default())
            .unwrap()
            .iter()
            .map(|e| e.mean)
            .collect()
    };
    Fixture {
        robustness: est(Target::Robustness),
        satprob: est(Target::Satprob),
        sample,
        corpus,
    }
}

fn gaussian(fx: &Fixture, sigma: f64) -> GramMatrix {
    fx.sample.gram(&fx.corpus, GramKind::Gaussian { sigma }).unwrap()
}

#[test]
fn krr_solution_has_small_residual() {
    let fx = fixture(61, 120, 400);
    for sigma in [0.1, 0.5, 2.0] {
        let g = gaussian(&fx, sigma);
        let reg = fit(Method::Krr, Hyper::default(), &g, &fx.robustness, Target::Robustness).unwrap();
        let Fitted::Ridge { alpha, jitter } = &reg.fitted else {
            panic!("ridge state expected")
        };
        let n = g.size();
        let system = g.entries() + DMatrix::identity(n, n) * (Hyper::default().lambda + jitter);
        let residual = &system * DVector::from_column_slice(alpha) - DVector::from_column_slice(&fx.robustness);
        let ymax = fx.robustness.iter().fold(0.0f64, |a, y| a.max(y.abs()));
        assert!(
            residual.amax() <= 1e-8 * ymax,
            "sigma {sigma}: residual {}",
            residual.amax()
        );
    }
}

#[test]
fn ridge_weights_shrink_with_lambda() {
    let fx = fixture(62, 80, 300);
    let g = gaussian(&fx, 0.5);
    let norms: Vec<f64> = logspace(1e-6, 10.0, 15)
        .iter()
        .map(|l| {
            let sol = krr::solve(&g, *l, &fx.robustness).unwrap();
            assert_eq!(sol.jitter, 0.0);
            sol.alpha.iter().map(|a| a * a).sum::<f64>().sqrt()
        })
        .collect();
    for w in norms.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{norms:?}");
    }
}

#[test]
fn nadaraya_watson_stays_in_target_range() {
    let fx = fixture(63, 60, 300);
    let (lo, hi) = fx
        .robustness
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(*y), b.max(*y)));
    let queries = FormulaGenerator::new(FormulaGenConfig {
        seed: 630,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(100);
    let basis = KernelBasis::new(&fx.sample, &fx.corpus, Execution::default()).unwrap();
    for sigma in [0.01, 0.2, 5.0] {
        let reg = fit(
            Method::Nw,
            Hyper::default(),
            &gaussian(&fx, sigma),
            &fx.robustness,
            Target::Robustness,
        )
        .unwrap();
        for q in &queries {
            let p = regression::predict(&reg, q, &basis).unwrap();
            assert!(
                p >= lo - 1e-12 && p <= hi + 1e-12,
                "sigma {sigma}: {p} outside [{lo}, {hi}]"
            );
        }
    }
}

#[test]
fn knn_ignores_training_order() {
    let fx = fixture(64, 60, 300);
    let perm: Vec<usize> = (0..60).rev().collect();
    let corpus_p: Vec<Formula> = perm.iter().map(|i| fx.corpus[*i].clone()).collect();
    let targets_p: Vec<f64> = perm.iter().map(|i| fx.robustness[*i]).collect();
    let hyper = Hyper {
        k: 3,
        ..Hyper::default()
    };
    let a = fit(
        Method::Knn,
        hyper,
        &fx.sample.gram(&fx.corpus, GramKind::Normalized).unwrap(),
        &fx.robustness,
        Target::Robustness,
    )
    .unwrap();
    let b = fit(
        Method::Knn,
        hyper,
        &fx.sample.gram(&corpus_p, GramKind::Normalized).unwrap(),
        &targets_p,
        Target::Robustness,
    )
    .unwrap();
    let basis_a = KernelBasis::new(&fx.sample, &fx.corpus, Execution::default()).unwrap();
    let basis_b = KernelBasis::new(&fx.sample, &corpus_p, Execution::default()).unwrap();
    let queries = FormulaGenerator::new(FormulaGenConfig {
        seed: 640,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(50);
    for q in &queries {
        let pa = regression::predict(&a, q, &basis_a).unwrap();
        let pb = regression::predict(&b, q, &basis_b).unwrap();
        assert!((pa - pb).abs() <= 1e-12 * pa.abs().max(1.0), "{q}: {pa} vs {pb}");
    }
}

#[test]
fn one_neighbour_reproduces_training_targets() {
    let fx = fixture(65, 50, 300);
    let set = TrainingSet::new(fx.corpus.clone(), fx.robustness.clone(), Target::Robustness).unwrap();
    let basis = KernelBasis::new(&fx.sample, &fx.corpus, Execution::default()).unwrap();
    for kind in [GramKind::Normalized, GramKind::Raw, GramKind::Gaussian { sigma: 0.3 }] {
        let g = fx.sample.gram(&fx.corpus, kind).unwrap();
        let reg = fit(
            Method::Knn,
            Hyper {
                k: 1,
                ..Hyper::default()
            },
            &g,
            &fx.robustness,
            Target::Robustness,
        )
        .unwrap();
        assert_eq!(evaluate_mse(&reg, &set, &basis).unwrap(), 0.0, "{kind:?}");
    }
}

#[test]
fn svr_dual_satisfies_kkt() {
    let fx = fixture(66, 80, 300);
    let g = gaussian(&fx, 0.5);
    let (c, eps, tol) = (10.0, 0.01, 1e-4);
    let sol = SvrProblem {
        kernel: g.entries(),
        targets: &fx.robustness,
        c,
        epsilon: eps,
        tol,
        max_iter: 100_000,
    }
    .solve();
    assert!(sol.converged && sol.violation <= tol);
    let beta = sol.coefficients();
    assert!(beta.iter().sum::<f64>().abs() <= 1e-9);
    let slack = 2.0 * tol;
    for i in 0..fx.robustness.len() {
        let (a, s) = (sol.alpha[i], sol.alpha_star[i]);
        assert!((0.0..=c).contains(&a) && (0.0..=c).contains(&s));
        assert!(a * s <= 1e-12, "pair {i}: {a}, {s}");
        let f: f64 = (0..beta.len()).map(|j| beta[j] * g.get(i, j)).sum::<f64>() + sol.bias;
        let r = fx.robustness[i] - f;
        if a == 0.0 {
            assert!(r <= eps + slack, "{i}: r={r}");
        } else if a < c {
            assert!((r - eps).abs() <= slack, "{i}: r={r}");
        } else {
            assert!(r >= eps - slack, "{i}: r={r}");
        }
        if s == 0.0 {
            assert!(-r <= eps + slack, "{i}: r={r}");
        } else if s < c {
            assert!((-r - eps).abs() <= slack, "{i}: r={r}");
        } else {
            assert!(-r >= eps - slack, "{i}: r={r}");
        }
    }
}

#[test]
fn split_is_a_partition() {
    let (train, test) = split_indices(400, 0.8, 9).unwrap();
    assert_eq!((train.len(), test.len()), (320, 80));
    let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
    all.sort();
    assert_eq!(all, (0..400).collect::<Vec<_>>());
    assert_eq!(split_indices(400, 0.8, 9).unwrap(), (train, test));
    assert!(split_indices(10, 1.0, 0).is_err());
}

#[test]
fn kernel_regressors_beat_the_mean() {
    let fx = fixture(67, 200, 500);
    let set = TrainingSet::new(fx.corpus.clone(), fx.robustness.clone(), Target::Robustness).unwrap();
    let (tr, te) = split_indices(200, 0.75, 67).unwrap();
    let (train, test) = (set.subset(&tr), set.subset(&te));
    let basis = KernelBasis::new(&fx.sample, &train.formulas, Execution::default()).unwrap();
    let raw = basis.raw_gram(train.formulas.clone(), Execution::default()).unwrap();
    let mean = train.targets.iter().sum::<f64>() / train.len() as f64;
    let baseline = mse(&vec![mean; test.len()], &test.targets);
    for method in Method::ALL {
        let best = default_sigma_grid()
            .iter()
            .map(|s| {
                let g = raw.to_kind(GramKind::Gaussian { sigma: *s }).unwrap();
                let reg = fit(method, Hyper::default(), &g, &train.targets, Target::Robustness).unwrap();
                evaluate_mse(&reg, &test, &basis).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < baseline, "{}: {best} vs mean {baseline}", method.name());
    }
}

#[test]
fn satisfaction_predictions_are_probabilities() {
    let fx = fixture(68, 80, 300);
    let basis = KernelBasis::new(&fx.sample, &fx.corpus, Execution::default()).unwrap();
    let queries = FormulaGenerator::new(FormulaGenConfig {
        seed: 680,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(60);
    for method in [Method::Krr, Method::Svr] {
        let reg = fit(
            method,
            Hyper::default(),
            &gaussian(&fx, 0.1),
            &fx.satprob,
            Target::Satprob,
        )
        .unwrap();
        for q in &queries {
            let p = regression::predict(&reg, q, &basis).unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }
}
