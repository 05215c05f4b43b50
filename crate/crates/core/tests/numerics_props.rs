use bayes_epi::numerics::{self, Matrix, SpdMatrix};
use proptest::prelude::*;

fn spd_from(b: &[f64], n: usize) -> Matrix {
    let bm = Matrix::from_vec(n, n, b.to_vec()).unwrap();
    let mut a = bm.transpose().matmul(&bm).unwrap();
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    a
}

fn arb_square() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=20).prop_flat_map(|n| (Just(n), prop::collection::vec(-3.0f64..3.0, n * n)))
}

fn frob_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cholesky_reconstructs_random_spd((n, b) in arb_square()) {
        let a = spd_from(&b, n);
        let f = numerics::cholesky(&SpdMatrix::new(a.clone()).unwrap()).unwrap();
        prop_assert_eq!(f.jitter(), 0.0);
        let rel = frob_diff(&f.reconstruct(), &a) / a.frobenius_norm();
        prop_assert!(rel <= 1e-10, "relative error {rel}");
    }

    #[test]
    fn solve_recovers_known_solution((n, b) in arb_square(), seed in any::<u64>()) {
        let a = spd_from(&b, n);
        let x: Vec<f64> = (0..n).map(|i| ((seed >> (i % 60)) & 7) as f64 - 3.5).collect();
        let rhs = a.matvec(&x).unwrap();
        let f = numerics::cholesky(&SpdMatrix::new(a).unwrap()).unwrap();
        let got = numerics::solve_spd(&f, &rhs).unwrap();
        let err = got.iter().zip(&x).map(|(g, t)| (g - t).powi(2)).sum::<f64>().sqrt();
        let scale = x.iter().map(|t| t * t).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-8 * scale.max(1.0), "error {err}");
    }
}

#[test]
fn sigmoid_symmetry_on_random_points() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let z: f64 = r.random_range(-50.0..50.0);
        let (a, b) = (numerics::stable_sigmoid(z), numerics::stable_sigmoid(-z));
        assert_eq!(a, 1.0 - b, "z = {z}");
    }
}
