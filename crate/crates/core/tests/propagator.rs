use kronmode::fd::Accuracy;
use kronmode::problems::heat::{heat_initial, heat_operator};
use kronmode::{Complex64, DenseMatrix, KroneckerOp, Shape, Tensor};
use proptest::prelude::*;

fn random_op(dims: &[usize], seed: u64) -> KroneckerOp<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let factors = dims
        .iter()
        .map(|&n| DenseMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    KroneckerOp::new(factors).unwrap()
}

fn max_diff(a: &Tensor<Complex64>, b: &Tensor<Complex64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn semigroup(dims in proptest::collection::vec(1usize..6, 1..4), seed in any::<u64>(), s in 0.05f64..0.5, t in 0.05f64..0.5) {
        let op = random_op(&dims, seed);
        let u = Tensor::from_fn(Shape::new(dims.clone()).unwrap(), |i| Complex64::new(i.iter().sum::<usize>() as f64, 1.0));
        let two = op.propagate(&op.propagate(&u, s).unwrap(), t).unwrap();
        let one = op.propagate(&u, s + t).unwrap();
        let scale = one.norm_max().max(1.0);
        prop_assert!(max_diff(&one, &two) <= 1e-12 * scale);
    }

    #[test]
    fn linearity(dims in proptest::collection::vec(1usize..6, 2..4), seed in any::<u64>(), a in -2.0f64..2.0) {
        let op = random_op(&dims, seed);
        let shape = Shape::new(dims.clone()).unwrap();
        let u = Tensor::from_fn(shape.clone(), |i| Complex64::new(i[0] as f64, 0.5));
        let v = Tensor::from_fn(shape, |i| Complex64::new(1.0, i[i.len() - 1] as f64));
        let mut w = u.clone();
        w.axpy(Complex64::new(a, 0.0), &v).unwrap();
        let mut lhs = op.propagate(&u, 0.3).unwrap();
        lhs.axpy(Complex64::new(a, 0.0), &op.propagate(&v, 0.3).unwrap()).unwrap();
        let rhs = op.propagate(&w, 0.3).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * rhs.norm_max().max(1.0));
    }
}

#[test]
fn heat_decays_monotonically() {
    let op = heat_operator::<f64>(16, Accuracy::Order(2)).unwrap();
    let cache = op.prepare(0.05).unwrap();
    let mut u = heat_initial(16).unwrap();
    let mut last = u.norm_two();
    for _ in 0..20 {
        u = cache.step(&u).unwrap();
        let now = u.norm_two();
        assert!(now < last);
        last = now;
    }
}
