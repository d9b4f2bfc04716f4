//! Kronecker-sum generators `M = A_d ⊕ … ⊕ A_1` and their exact propagator.
//!
//! Since the summands `I ⊗ … ⊗ A_μ ⊗ … ⊗ I` commute,
//! `e^{τM} vec(U) = vec(U ×_1 e^{τA_1} ×_2 ⋯ ×_d e^{τA_d})`. One step costs
//! `Σ_μ N·n_μ` multiply-adds plus `d` small exponentials, which a
//! [`PropagatorCache`] holds across constant-size steps.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use crate::tensor::{self, Shape, Tensor};

/// Largest `N` for which [`KroneckerOp::assemble_full`] builds the dense matrix.
pub const DEFAULT_ORACLE_LIMIT: usize = 4096;

static NEXT_REVISION: AtomicU64 = AtomicU64::new(1);

fn fresh_revision() -> u64 {
    NEXT_REVISION.fetch_add(1, Ordering::Relaxed)
}

/// Ordered one-dimensional factors `A_1, …, A_d`.
#[derive(Clone, Debug)]
pub struct KroneckerOp<T> {
    factors: Vec<DenseMatrix<T>>,
    shape: Shape,
    revision: u64,
}

impl<T: Scalar> KroneckerOp<T> {
    pub fn new(factors: Vec<DenseMatrix<T>>) -> Result<Self> {
        for (i, a) in factors.iter().enumerate() {
            if !a.is_square() {
                return Err(Error::shape_at(
                    i + 1,
                    format!("factor is {}x{}, not square", a.rows(), a.cols()),
                ));
            }
        }
        let shape = Shape::new(factors.iter().map(|a| a.rows()).collect::<Vec<_>>())?;
        Ok(KroneckerOp {
            factors,
            shape,
            revision: fresh_revision(),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DenseMatrix<T>] {
        &self.factors
    }

    /// Factor `A_μ` (1-based).
    pub fn factor(&self, mu: usize) -> Result<&DenseMatrix<T>> {
        self.shape.check_direction(mu)?;
        Ok(&self.factors[mu - 1])
    }

    /// Replaces `A_μ`; caches prepared earlier no longer match this operator.
    pub fn set_factor(&mut self, mu: usize, a: DenseMatrix<T>) -> Result<()> {
        let n = self.shape.extent(mu)?;
        if a.rows() != n || a.cols() != n {
            return Err(Error::shape_at(
                mu,
                format!("replacement is {}x{}, expected {n}x{n}", a.rows(), a.cols()),
            ));
        }
        self.factors[mu - 1] = a;
        self.revision = fresh_revision();
        Ok(())
    }

    /// `τ·M` as a Kronecker sum (each factor scaled).
    pub fn scaled(&self, alpha: T) -> Self {
        KroneckerOp {
            factors: self.factors.iter().map(|a| a.scale(alpha)).collect(),
            shape: self.shape.clone(),
            revision: fresh_revision(),
        }
    }

    /// Dense `N×N` matrix `Σ_μ I ⊗ … ⊗ A_μ ⊗ … ⊗ I`, for use as a test oracle.
    pub fn assemble_full(&self) -> Result<DenseMatrix<T>> {
        self.assemble_full_with_limit(DEFAULT_ORACLE_LIMIT)
    }

    pub fn assemble_full_with_limit(&self, limit: usize) -> Result<DenseMatrix<T>> {
        let n = self.shape.len();
        if n > limit {
            return Err(Error::OracleSize { size: n, limit });
        }
        let mut total = DenseMatrix::zeros(n, n);
        for mu in 0..self.order() {
            let mut term = DenseMatrix::identity(1);
            for nu in (0..self.order()).rev() {
                term = if nu == mu {
                    term.kron(&self.factors[nu])
                } else {
                    term.kron(&DenseMatrix::identity(self.shape.dims()[nu]))
                };
            }
            total = total.add(&term)?;
        }
        Ok(total)
    }

    /// `M·vec(U)` in tensor form, `Σ_μ U ×_μ A_μ`.
    pub fn matvec(&self, u: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_state(u)?;
        let mut acc = Tensor::zeros(self.shape.clone());
        for (i, a) in self.factors.iter().enumerate() {
            let term = tensor::mu_mode_product(u, a, i + 1)?;
            for (s, &t) in acc.data_mut().iter_mut().zip(term.data()) {
                *s += t;
            }
        }
        Ok(acc)
    }

    /// Computes `e^{τA_μ}` for every direction.
    pub fn prepare(&self, tau: f64) -> Result<PropagatorCache<T>> {
        if !tau.is_finite() {
            return Err(Error::InvalidInput(format!("time step {tau} is not finite")));
        }
        let t = T::from_f64(tau);
        let exps = self
            .factors
            .iter()
            .map(|a| a.scale(t).exp())
            .collect::<Result<Vec<_>>>()?;
        Ok(PropagatorCache {
            tau,
            exps,
            shape: self.shape.clone(),
            revision: self.revision,
        })
    }

    /// One-off `e^{τM}U` without keeping the cache.
    pub fn propagate(&self, u: &Tensor<T>, tau: f64) -> Result<Tensor<T>> {
        self.prepare(tau)?.step(u)
    }

    fn check_state(&self, u: &Tensor<T>) -> Result<()> {
        if u.shape() != &self.shape {
            return Err(Error::shape(format!(
                "state has shape {}, operator has {}",
                u.shape(),
                self.shape
            )));
        }
        Ok(())
    }
}

/// The exponentials `e^{τA_μ}` for one step size.
#[derive(Clone, Debug)]
pub struct PropagatorCache<T> {
    tau: f64,
    exps: Vec<DenseMatrix<T>>,
    shape: Shape,
    revision: u64,
}

impl<T: Scalar> PropagatorCache<T> {
    /// Builds a cache from precomputed propagator factors.
    pub fn from_exponentials(tau: f64, exps: Vec<DenseMatrix<T>>) -> Result<Self> {
        let op = KroneckerOp::new(exps)?;
        Ok(PropagatorCache {
            tau,
            shape: op.shape,
            exps: op.factors,
            revision: 0,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn exponentials(&self) -> &[DenseMatrix<T>] {
        &self.exps
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Whether this cache was prepared from `op` (unchanged since) with step `tau`.
    pub fn is_valid_for(&self, op: &KroneckerOp<T>, tau: f64) -> bool {
        self.revision == op.revision && self.tau == tau
    }

    /// Advances `U` by one step: `U ×_1 e^{τA_1} ⋯ ×_d e^{τA_d}`.
    pub fn step(&self, u: &Tensor<T>) -> Result<Tensor<T>> {
        if u.shape() != &self.shape {
            return Err(Error::shape(format!(
                "state has shape {}, propagator has {}",
                u.shape(),
                self.shape
            )));
        }
        let before = tensor::multiply_add_count();
        let slots: Vec<Option<&DenseMatrix<T>>> = self.exps.iter().map(Some).collect();
        let out = tensor::tucker(u, &slots)?;
        debug_assert_eq!(
            tensor::multiply_add_count() - before,
            self.multiply_adds_per_step(),
            "μ-mode step issued an unexpected number of multiply-adds"
        );
        Ok(out)
    }

    /// `Σ_μ N·n_μ`.
    pub fn multiply_adds_per_step(&self) -> u64 {
        let n = self.shape.len() as u64;
        self.shape.dims().iter().map(|&k| n * k as u64).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_real_op(rng: &mut StdRng, dims: &[usize]) -> KroneckerOp<f64> {
        KroneckerOp::new(
            dims.iter()
                .map(|&n| DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn random_tensor(rng: &mut StdRng, shape: &Shape) -> Tensor<f64> {
        Tensor::from_fn(shape.clone(), |_| rng.gen_range(-1.0..1.0))
    }

    fn dense_apply<T: Scalar>(m: &DenseMatrix<T>, u: &Tensor<T>) -> Tensor<T> {
        let v = DenseMatrix::from_col_major(u.len(), 1, u.data().to_vec()).unwrap();
        Tensor::from_vec(u.shape().clone(), m.matmul(&v).unwrap().data().to_vec()).unwrap()
    }

    fn rel<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> f64 {
        a.sub(b).unwrap().norm_two().as_f64() / b.norm_two().as_f64()
    }

    use crate::scalar::RealScalar;

    #[test]
    fn rejects_non_square_factor() {
        assert!(KroneckerOp::new(vec![DenseMatrix::<f64>::zeros(2, 3)]).is_err());
    }

    #[test]
    fn assemble_small_cases() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let op = KroneckerOp::new(vec![a.clone()]).unwrap();
        assert_eq!(op.assemble_full().unwrap(), a);
        let z = KroneckerOp::new(vec![DenseMatrix::<f64>::zeros(1, 1); 2]).unwrap();
        assert_eq!(z.assemble_full().unwrap(), DenseMatrix::zeros(1, 1));
        let big = KroneckerOp::new(vec![DenseMatrix::<f64>::zeros(70, 70); 2]).unwrap();
        assert_eq!(
            big.assemble_full().unwrap_err(),
            Error::OracleSize { size: 4900, limit: 4096 }
        );
    }

    #[test]
    fn assembled_matrix_matches_mode_products() {
        let mut rng = StdRng::seed_from_u64(1);
        let op = random_real_op(&mut rng, &[2, 3]);
        let u = random_tensor(&mut rng, op.shape());
        let full = op.assemble_full().unwrap();
        let mut expect = tensor::mu_mode_product(&u, &op.factors()[0], 1).unwrap();
        expect
            .axpy(1.0, &tensor::mu_mode_product(&u, &op.factors()[1], 2).unwrap())
            .unwrap();
        assert!(rel(&dense_apply(&full, &u), &expect) <= 1e-14);
        assert!(rel(&op.matvec(&u).unwrap(), &expect) <= 1e-14);
    }

    #[test]
    fn matvec_trivial_factors() {
        let shape = Shape::new(vec![3, 2, 4]).unwrap();
        let u = Tensor::from_fn(shape.clone(), |i| (i[0] + 3 * i[1] + 7 * i[2]) as f64);
        let zero = KroneckerOp::new(shape.dims().iter().map(|&n| DenseMatrix::zeros(n, n)).collect()).unwrap();
        assert_eq!(zero.matvec(&u).unwrap(), Tensor::zeros(shape.clone()));
        let eye = KroneckerOp::new(shape.dims().iter().map(|&n| DenseMatrix::identity(n)).collect()).unwrap();
        assert_eq!(eye.matvec(&u).unwrap(), u.scaled(3.0));
        let wrong = Tensor::<f64>::zeros(Shape::new(vec![3, 2]).unwrap());
        assert!(eye.matvec(&wrong).is_err());
    }

    #[test]
    fn prepare_examples() {
        let mut rng = StdRng::seed_from_u64(2);
        let op = random_real_op(&mut rng, &[3, 4]);
        let cache = op.prepare(0.0).unwrap();
        assert_eq!(cache.exponentials()[0], DenseMatrix::identity(3));
        assert_eq!(cache.exponentials()[1], DenseMatrix::identity(4));

        let lam: [f64; 3] = [-1.0, 0.5, 2.0];
        let diag = KroneckerOp::new(vec![DenseMatrix::from_diagonal(&lam)]).unwrap();
        let e = diag.prepare(0.3).unwrap();
        for (i, l) in lam.iter().enumerate() {
            assert!((e.exponentials()[0].get(i, i) - (0.3 * l).exp()).abs() < 1e-15);
        }

        let c = op.prepare(0.7).unwrap();
        for (mu, a) in op.factors().iter().enumerate() {
            assert_eq!(c.exponentials()[mu], a.scale(0.7).exp().unwrap());
        }
        assert!(c.is_valid_for(&op, 0.7));
        assert!(!c.is_valid_for(&op, 0.8));
        let mut changed = op.clone();
        changed.set_factor(1, DenseMatrix::identity(3)).unwrap();
        assert!(!c.is_valid_for(&changed, 0.7));
        assert!(op.prepare(f64::NAN).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let mut rng = StdRng::seed_from_u64(3);
        let op = random_real_op(&mut rng, &[3, 3, 2]);
        let u = random_tensor(&mut rng, op.shape());
        assert_eq!(op.prepare(0.0).unwrap().step(&u).unwrap(), u);
    }

    #[test]
    fn step_matches_dense_exponential() {
        let mut rng = StdRng::seed_from_u64(4);
        let op = random_real_op(&mut rng, &[3, 3]);
        let u = random_tensor(&mut rng, op.shape());
        let got = op.prepare(0.7).unwrap().step(&u).unwrap();
        let dense = op.assemble_full().unwrap().scale(0.7).exp().unwrap();
        assert!(rel(&got, &dense_apply(&dense, &u)) <= 1e-12);
    }

    #[test]
    fn skew_hermitian_step_preserves_norm() {
        let mut rng = StdRng::seed_from_u64(5);
        let factors = (0..3)
            .map(|_| {
                let h = DenseMatrix::from_fn(4, 4, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                h.sub(&h.adjoint()).unwrap()
            })
            .collect();
        let op = KroneckerOp::new(factors).unwrap();
        let u = Tensor::from_fn(op.shape().clone(), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let v = op.prepare(1.3).unwrap().step(&u).unwrap();
        assert!((v.norm_two() - u.norm_two()).abs() <= 1e-13 * u.norm_two());
    }

    #[test]
    fn semigroup_and_commutation() {
        let mut rng = StdRng::seed_from_u64(6);
        let op = random_real_op(&mut rng, &[4, 3, 5]);
        let u = random_tensor(&mut rng, op.shape());
        let one = op.prepare(0.9).unwrap().step(&u).unwrap();
        let cache = op.prepare(0.9 / 6.0).unwrap();
        let mut many = u.clone();
        for _ in 0..6 {
            many = cache.step(&many).unwrap();
        }
        assert!(rel(&many, &one) <= 1e-11);

        let c = op.prepare(0.9).unwrap();
        let e = c.exponentials();
        let mut reversed = u.clone();
        for mu in (1..=3).rev() {
            reversed = tensor::mu_mode_product(&reversed, &e[mu - 1], mu).unwrap();
        }
        assert!(rel(&reversed, &one) <= 1e-12);
    }

    #[test]
    fn counts_multiply_adds() {
        let op = KroneckerOp::new(vec![
            DenseMatrix::<f64>::identity(3),
            DenseMatrix::identity(4),
            DenseMatrix::identity(5),
        ])
        .unwrap();
        let cache = op.prepare(0.1).unwrap();
        let u = Tensor::zeros(op.shape().clone());
        tensor::reset_multiply_add_count();
        cache.step(&u).unwrap();
        assert_eq!(tensor::multiply_add_count(), 60 * (3 + 4 + 5));
        assert_eq!(cache.multiply_adds_per_step(), 720);
    }
}
