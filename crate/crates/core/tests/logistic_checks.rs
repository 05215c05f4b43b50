mod common;

use bayes_epi::bayes_logit::{self, LaplacePosterior, LogPosterior, NewtonOptions, PriorSpec};
use bayes_epi::datagen::LabeledDataset;
use bayes_epi::numerics::{self, Matrix, SpdMatrix};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(1);
    let d = logistic_data(&mut r, 80, &[0.3, 1.0, -0.5, 0.8]);
    let obj = LogPosterior::new(d.x(), d.y(), PriorSpec::isotropic(1.5).unwrap().precision(3)).unwrap();
    for _ in 0..20 {
        let beta: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
        let fd = fd_gradient(|b| obj.value(b), &beta, 1e-5);
        let err = rel_err(&obj.gradient(&beta), &fd);
        assert!(err <= 1e-5, "beta {beta:?}: relative error {err}");
    }
}

#[test]
fn hessian_matches_jacobian_of_gradient() {
    let mut r = rng(2);
    let d = logistic_data(&mut r, 80, &[-0.2, 0.5, 1.2]);
    let obj = LogPosterior::new(d.x(), d.y(), PriorSpec::default().precision(2)).unwrap();
    for _ in 0..20 {
        let beta: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
        let h = obj.neg_hessian(&beta);
        for j in 0..3 {
            let fd_col = fd_gradient(|b| -obj.gradient(b)[j], &beta, 1e-5);
            let col: Vec<f64> = (0..3).map(|k| h[(j, k)]).collect();
            let err = rel_err(&col, &fd_col);
            assert!(err <= 1e-4, "row {j}: relative error {err}");
        }
    }
}

#[test]
fn newton_iterates_never_lower_the_log_posterior() {
    let mut r = rng(3);
    let d = logistic_data(&mut r, 60, &[1.5, 2.0, -2.0, 0.5]);
    let prior = PriorSpec::isotropic(3.0).unwrap();
    let obj = LogPosterior::new(d.x(), d.y(), prior.precision(3)).unwrap();
    let mut prev = obj.value(&[0.0; 4]);
    for k in 1..=15 {
        let post = bayes_logit::fit_map(&d, &prior, NewtonOptions { max_iter: k, tol: 1e-8 }).unwrap();
        let v = obj.value(post.map());
        assert!(v >= prev - 1e-12 * prev.abs(), "iteration {k}: {v} < {prev}");
        prev = v;
    }
}

#[test]
fn single_observation_map_matches_grid_search() {
    let d = LabeledDataset::new(Matrix::from_rows(&[[1.0]]), vec![true], None).unwrap();
    let post = bayes_logit::fit_map(&d, &PriorSpec::isotropic(1.0).unwrap(), NewtonOptions::default()).unwrap();
    let logpost = |b0: f64, b1: f64| -numerics::log1pexp(-(b0 + b1)) - 0.5 * (b0 * b0 + b1 * b1);
    let (mut best, mut arg) = (f64::NEG_INFINITY, (0.0, 0.0));
    let step = 1e-3;
    for i in 0..=2000 {
        for j in 0..=2000 {
            let (b0, b1) = (-0.5 + i as f64 * step, -0.5 + j as f64 * step);
            let v = logpost(b0, b1);
            if v > best {
                best = v;
                arg = (b0, b1);
            }
        }
    }
    let m = post.map();
    assert!(m[0] > 0.0 && m[1] > 0.0, "the mode must lie on the positive side");
    assert!((m[0] - arg.0).abs() <= 1e-3 && (m[1] - arg.1).abs() <= 1e-3, "{m:?} vs grid {arg:?}");
}

#[test]
fn mle_is_consistent_and_agrees_with_flat_map() {
    let truth = [-0.5, 1.0, -0.7, 0.3];
    let d = logistic_data(&mut rng(4), 5000, &truth);
    let mle = bayes_logit::fit_mle(&d, NewtonOptions::default()).unwrap();
    assert!(mle.converged && !mle.diverged);
    let obj = LogPosterior::likelihood(d.x(), d.y()).unwrap();
    let cov = numerics::cholesky(&SpdMatrix::new(obj.neg_hessian(&mle.coef)).unwrap()).unwrap().inverse();
    for j in 0..4 {
        let se = cov[(j, j)].sqrt();
        assert!((mle.coef[j] - truth[j]).abs() <= 3.0 * se, "coef {j}: {} vs {} (se {se})", mle.coef[j], truth[j]);
    }
    let map = bayes_logit::fit_map(&d, &PriorSpec::isotropic(1e6).unwrap(), NewtonOptions::default()).unwrap();
    assert!(map.converged());
    assert!(max_abs(&map.map().iter().zip(&mle.coef).map(|(a, b)| a - b).collect::<Vec<_>>()) <= 1e-4);
}

#[test]
fn predictive_mean_is_monte_carlo_stable() {
    let cov = Matrix::from_rows(&[[0.3, 0.0], [0.0, 0.2]]);
    let chol = numerics::cholesky(&SpdMatrix::new(cov).unwrap()).unwrap();
    let post = LaplacePosterior::from_parts(vec![0.4, -0.8], chol, 100).unwrap();
    let x = Matrix::from_rows(&[[-1.0], [0.0], [2.0]]);
    let small = bayes_logit::posterior_predict(&post, &x, 4000, 0.95, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
    let big = bayes_logit::posterior_predict(&post, &x, 200_000, 0.95, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
    for i in 0..3 {
        assert!((small.mean[i] - big.mean[i]).abs() <= 0.01, "row {i}");
    }
}

#[test]
fn predictive_mean_at_zero_is_average_of_intercept_sigmoids() {
    let d = logistic_data(&mut rng(5), 200, &[0.5, 1.0, -1.0]);
    let post = bayes_logit::fit_map(&d, &PriorSpec::default(), NewtonOptions::default()).unwrap();
    let x0 = Matrix::zeros(1, 2);
    let pred = bayes_logit::posterior_predict(&post, &x0, 1000, 0.9, &mut ChaCha20Rng::seed_from_u64(8)).unwrap();
    let betas = bayes_logit::draw_coefficients(&post, 1000, &mut ChaCha20Rng::seed_from_u64(8));
    let direct = (0..1000).map(|s| numerics::stable_sigmoid(betas[(s, 0)])).sum::<f64>() / 1000.0;
    assert_eq!(pred.mean[0].to_bits(), direct.to_bits());
    let again = bayes_logit::posterior_predict(&post, &x0, 1000, 0.9, &mut ChaCha20Rng::seed_from_u64(8)).unwrap();
    assert_eq!(pred, again);
}

fn arb_dataset() -> impl Strategy<Value = LabeledDataset> {
    (5usize..40, 1usize..4, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut r = rng(seed);
        let coef: Vec<f64> = (0..=p).map(|_| r.random_range(-2.0..2.0)).collect();
        logistic_data(&mut r, n, &coef)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wider_prior_never_shrinks_more(d in arb_dataset(), sd0 in 0.1f64..3.0, sd in 0.1f64..3.0) {
        let prior = PriorSpec::new(sd0, sd).unwrap();
        let opts = NewtonOptions::default();
        let tight = bayes_logit::fit_map(&d, &prior, opts).unwrap();
        let wide = bayes_logit::fit_map(&d, &prior.scaled(10.0), opts).unwrap();
        prop_assert!(norm2(tight.map()) <= norm2(wide.map()) + 1e-8, "{:?} vs {:?}", tight.map(), wide.map());
    }
}
