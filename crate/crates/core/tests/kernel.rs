mod common;

use proptest::prelude::*;
use rand::Rng;
use stl_kernel::kernel::estimate_targets;
use stl_kernel::stl::{robustness_signal, Formula, TimeWindow};
use stl_kernel::trajectory::{sample_mu0, Mu0Config};
use stl_kernel::{Execution, FormulaGenConfig, FormulaGenerator, GramKind, KernelSample, Target, Trajectory};

/// Random formula whose robustness is finite everywhere on `sample`.
fn bounded_formula(rng: &mut rand_chacha::ChaCha8Rng, sample: &KernelSample) -> Formula {
    loop {
        let f = common::random_formula(rng, 3, false);
        if sample.embed(&f).is_ok() {
            return f;
        }
    }
}

fn mu0_sample(seed: u64, m: usize) -> KernelSample {
    KernelSample::new(
        sample_mu0(
            &Mu0Config {
                seed,
                ..Mu0Config::default()
            },
            m,
        )
        .unwrap(),
    )
    .unwrap()
}

#[test]
fn normalized_kernel_obeys_cauchy_schwarz() {
    let sample = mu0_sample(41, 300);
    let mut rng = common::rng(41);
    for _ in 0..1_000 {
        let phi = bounded_formula(&mut rng, &sample);
        let psi = bounded_formula(&mut rng, &sample);
        let (Ok(k), Ok(_), Ok(_)) = (
            sample.normalized_kernel(&phi, &psi),
            sample.normalized_kernel(&phi, &phi),
            sample.normalized_kernel(&psi, &psi),
        ) else {
            continue;
        };
        assert!(k.abs() <= 1.0, "{phi} / {psi}: {k}");
    }
}

#[test]
fn raw_kernel_is_odd_under_negation() {
    let sample = mu0_sample(42, 200);
    let mut rng = common::rng(42);
    for _ in 0..300 {
        let phi = bounded_formula(&mut rng, &sample);
        let psi = bounded_formula(&mut rng, &sample);
        let k = sample.raw_kernel(&phi, &psi).unwrap();
        let neg = sample.raw_kernel(&Formula::not(phi.clone()), &psi).unwrap();
        assert_eq!(neg, -k);
        assert!(sample.raw_kernel(&phi, &phi).unwrap() >= 0.0);
        assert_eq!(k, sample.raw_kernel(&psi, &phi).unwrap());
    }
}

#[test]
fn raw_kernel_matches_direct_sum() {
    let sample = mu0_sample(43, 50);
    let phi = Formula::eventually(Formula::ge(0.5), Some(TimeWindow::new(0.0, 4.0).unwrap()));
    let psi = Formula::until(Formula::le(1.0), Formula::ge(-0.5), None);
    let mut total = 0.0;
    for xi in sample.trajectories() {
        let (a, b) = (robustness_signal(&phi, xi), robustness_signal(&psi, xi));
        total += xi.h() * a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
    }
    let want = total / 50.0;
    let got = sample.raw_kernel(&phi, &psi).unwrap();
    assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{got} vs {want}");
}

#[test]
fn constant_path_pins_the_quadrature() {
    let xi = Trajectory::new(0.0, 1.0, vec![3.0; 21]).unwrap();
    let sample = KernelSample::new(vec![xi]).unwrap();
    assert_eq!(
        sample.raw_kernel(&Formula::ge(0.0), &Formula::ge(0.0)).unwrap(),
        21.0 * 9.0
    );
}

#[test]
fn gaussian_is_monotone_in_normalized_kernel() {
    let sample = mu0_sample(44, 200);
    let mut rng = common::rng(44);
    let phi = bounded_formula(&mut rng, &sample);
    let mut pairs: Vec<(f64, f64)> = (0..200)
        .map(|_| {
            let psi = bounded_formula(&mut rng, &sample);
            let k = sample.normalized_kernel(&phi, &psi).unwrap();
            (k, sample.gaussian_kernel(&phi, &psi, 0.7).unwrap())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in pairs.windows(2) {
        assert!(w[1].1 >= w[0].1);
    }
    assert!(pairs.iter().all(|(_, g)| *g > 0.0 && *g <= 1.0));
}

#[test]
fn negation_pair_gram() {
    let sample = mu0_sample(45, 100);
    let phi = Formula::globally(Formula::ge(-1.0), Some(TimeWindow::new(0.0, 3.0).unwrap()));
    let gram = sample
        .gram(&[phi.clone(), Formula::not(phi)], GramKind::Normalized)
        .unwrap();
    assert_eq!(gram.get(0, 0), 1.0);
    assert_eq!(gram.get(0, 1), -1.0);
    let eig = gram.eigenvalues();
    assert!(eig[0].abs() < 1e-12 && (eig[1] - 2.0).abs() < 1e-12);
}

#[test]
fn generated_gram_is_positive_semidefinite() {
    let sample = mu0_sample(46, 1_000);
    let corpus = FormulaGenerator::new(FormulaGenConfig {
        seed: 46,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(100);
    for kind in [GramKind::Normalized, GramKind::Gaussian { sigma: 0.5 }] {
        let eig = sample.gram(&corpus, kind).unwrap().eigenvalues();
        let max = *eig.last().unwrap();
        assert!(eig[0] >= -1e-6 * max, "{kind:?}: min {} max {max}", eig[0]);
    }
}

#[test]
fn gram_is_independent_of_execution_mode() {
    let sample = mu0_sample(47, 300);
    let corpus = FormulaGenerator::new(FormulaGenConfig {
        seed: 47,
        ..FormulaGenConfig::default()
    })
    .unwrap()
    .corpus(40);
    let a = sample.gram_with(&corpus, GramKind::Raw, Execution::Sequential).unwrap();
    let b = sample.gram_with(&corpus, GramKind::Raw, Execution::default()).unwrap();
    assert_eq!(a.entries(), b.entries());
    let again = mu0_sample(47, 300);
    assert_eq!(again.fingerprint(), sample.fingerprint());
    assert_eq!(again.gram(&corpus, GramKind::Raw).unwrap().entries(), a.entries());
    assert_ne!(mu0_sample(48, 300).fingerprint(), sample.fingerprint());
}

#[test]
fn mu0_start_estimators() {
    let sample = mu0_sample(49, 10_000);
    let phi = Formula::ge(0.0);
    let rob = sample.expected_robustness(&phi, 0).unwrap();
    assert!(rob.mean.abs() <= 3.0 * rob.stderr, "{rob:?}");
    let sat = sample.satisfaction_probability(&phi, 0).unwrap();
    assert!((sat.mean - 0.5).abs() <= 3.0 * sat.stderr, "{sat:?}");
    let neg = sample.expected_robustness(&Formula::not(phi), 0).unwrap();
    assert_eq!(neg.mean, -rob.mean);
    assert_eq!(sample.satisfaction_probability(&Formula::True, 0).unwrap().mean, 1.0);
}

#[test]
fn constant_sample_estimators() {
    let xi = Trajectory::new(0.0, 1.0, vec![2.0; 21]).unwrap();
    let sample = KernelSample::new(vec![xi.clone(), xi]).unwrap();
    let est = sample.expected_robustness(&Formula::ge(1.5), 0).unwrap();
    assert_eq!((est.mean, est.stderr), (0.5, 0.0));
}

#[test]
fn satisfaction_of_negation_is_complementary() {
    let paths = sample_mu0(
        &Mu0Config {
            seed: 50,
            ..Mu0Config::default()
        },
        500,
    )
    .unwrap();
    let mut rng = common::rng(50);
    for _ in 0..100 {
        let phi = common::random_formula(&mut rng, 3, false);
        let t = rng.random_range(0..21);
        if paths.iter().any(|xi| robustness_signal(&phi, xi)[t] == 0.0) {
            continue;
        }
        let both = [phi.clone(), Formula::not(phi)];
        let est = estimate_targets(&both, &paths, Target::Satprob, t, Execution::default()).unwrap();
        assert!((est[0].mean + est[1].mean - 1.0).abs() < 1e-12);
    }
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_root_m() {
    let phi = Formula::eventually(Formula::ge(0.5), Some(TimeWindow::new(0.0, 5.0).unwrap()));
    let psi = Formula::globally(Formula::le(1.0), None);
    let sizes = [250usize, 500, 1_000, 2_000, 4_000];
    let spread: Vec<f64> = sizes
        .iter()
        .map(|&m| {
            let values: Vec<f64> = (0..20)
                .map(|s| mu0_sample(5_000 + s, m).raw_kernel(&phi, &psi).unwrap())
                .collect();
            common::mean_var(&values).1.sqrt()
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|m| (*m as f64).ln()).collect();
    let ys: Vec<f64> = spread.iter().map(|s| s.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((-0.8..=-0.2).contains(&slope), "slope {slope}, spread {spread:?}");
}

#[test]
fn degenerate_formulas_are_reported() {
    // x >= 0 on the zero path has robustness 0 everywhere
    let xi = Trajectory::new(0.0, 1.0, vec![0.0; 21]).unwrap();
    let sample = KernelSample::new(vec![xi]).unwrap();
    let corpus = [Formula::ge(1.0), Formula::ge(0.0)];
    match sample.gram(&corpus, GramKind::Normalized) {
        Err(stl_kernel::KernelError::Degenerate(idx)) => assert_eq!(idx, vec![1]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn windows_past_the_horizon_are_rejected() {
    let sample = mu0_sample(52, 10);
    let late = Formula::eventually(Formula::ge(0.0), Some(TimeWindow::new(4.0, 8.0).unwrap()));
    assert!(matches!(
        sample.gram(&[Formula::ge(0.0), late], GramKind::Raw),
        Err(stl_kernel::KernelError::Unbounded { index: 1 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn self_and_negation_kernels(seed in 0u64..10_000) {
        let sample = mu0_sample(51, 100);
        let mut rng = common::rng(seed);
        let phi = bounded_formula(&mut rng, &sample);
        prop_assume!(sample.raw_kernel(&phi, &phi).unwrap() > 1e-12);
        prop_assert!((sample.normalized_kernel(&phi, &phi).unwrap() - 1.0).abs() <= 1e-9);
        let neg = Formula::not(phi.clone());
        prop_assert!((sample.normalized_kernel(&phi, &neg).unwrap() + 1.0).abs() <= 1e-9);
        let g = sample.gaussian_kernel(&phi, &neg, 1.0).unwrap();
        prop_assert!((g - (-2.0f64).exp()).abs() <= 1e-12);
    }
}
