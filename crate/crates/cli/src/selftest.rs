//! Oracle-equivalence checks runnable from the command line.

use std::fmt::Write as _;

use kronmode::fd::Accuracy;
use kronmode::hermite::{forward_transform, inverse_transform, HermiteBasis};
use kronmode::krylov::arnoldi_expmv;
use kronmode::problems::gpe::{gpe_setup, GpeInitial, DEFAULT_STRETCH};
use kronmode::problems::heat::{heat3d_run, heat_operator, heat_second_order_error, HeatConfig};
use kronmode::problems::{gpe_strang_step, relative_error};
use kronmode::{Complex64, DenseMatrix, KroneckerOp, NormKind, Shape, Tensor};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub failures: Vec<(&'static str, String)>,
}

impl Outcome {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(Check::passed)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "{tag} {}: {:.3e} (tolerance {:.1e})", c.name, c.value, c.tolerance);
        }
        for (name, msg) in &self.failures {
            let _ = writeln!(s, "FAIL {name}: {msg}");
        }
        let passed = self.checks.iter().filter(|c| c.passed()).count();
        let total = self.checks.len() + self.failures.len();
        let _ = writeln!(s, "{passed}/{total} checks passed");
        s
    }
}

fn random_matrix(rng: &mut StdRng, n: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Largest relative deviation of the exact step from the dense exponential.
fn kronecker_vs_dense(seed: u64) -> kronmode::Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let d = rng.gen_range(2..=3);
        let dims: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=6)).collect();
        let tau = rng.gen_range(0.1..1.0);
        let factors: Vec<DenseMatrix<f64>> = dims.iter().map(|&n| random_matrix(&mut rng, n)).collect();
        let shape = Shape::new(dims.clone())?;
        if case % 2 == 0 {
            let op = KroneckerOp::new(factors)?;
            let u = Tensor::from_fn(shape, |_| rng.gen_range(-1.0..1.0));
            let dense = op.assemble_full()?.scale(tau).exp()?;
            let v = dense.matmul(&DenseMatrix::from_col_major(u.len(), 1, u.data().to_vec())?)?;
            let step = op.propagate(&u, tau)?;
            let expect = Tensor::from_vec(u.shape().clone(), v.data().to_vec())?;
            worst = worst.max(relative_error(&step, &expect, &NormKind::Two)?);
        } else {
            let cf: Vec<DenseMatrix<Complex64>> = factors
                .iter()
                .map(|a| DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| Complex64::new(a.get(i, j), rng.gen_range(-1.0..1.0))))
                .collect();
            let op = KroneckerOp::new(cf)?;
            let u = Tensor::from_fn(shape, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let dense = op.assemble_full()?.scale(Complex64::new(tau, 0.0)).exp()?;
            let v = dense.matmul(&DenseMatrix::from_col_major(u.len(), 1, u.data().to_vec())?)?;
            let step = op.propagate(&u, tau)?;
            let expect = Tensor::from_vec(u.shape().clone(), v.data().to_vec())?;
            worst = worst.max(relative_error(&step, &expect, &NormKind::Two)?);
        }
    }
    Ok(worst)
}

fn heat_closed_form() -> kronmode::Result<f64> {
    let run = heat3d_run::<f64>(&HeatConfig { n: 24, ..Default::default() })?;
    Ok((run.report.rel_error.unwrap_or(f64::NAN) - heat_second_order_error(24, 1.0)).abs())
}

fn hermite_orthonormality() -> kronmode::Result<f64> {
    let b = HermiteBasis::new(64)?;
    Ok(b.gram().sub(&DenseMatrix::identity(64))?.max_abs())
}

fn hermite_round_trip(seed: u64) -> kronmode::Result<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let b = HermiteBasis::new(16)?;
    let bases = [b.clone(), b.clone(), b];
    let c = Tensor::from_fn(Shape::cube(16, 3)?, |_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let back = forward_transform(&bases, &inverse_transform(&bases, &c, None)?)?;
    relative_error(&back, &c, &NormKind::Two)
}

fn krylov_vs_exact() -> kronmode::Result<f64> {
    let op = heat_operator::<f64>(12, Accuracy::Order(2))?;
    let u = Tensor::from_fn(op.shape().clone(), |i| ((i[0] + 2 * i[1] + 3 * i[2]) % 5) as f64 - 2.0);
    let exact = op.propagate(&u, 0.5)?;
    let k = arnoldi_expmv(&op, &u, 0.5, 1e-10, 50)?;
    relative_error(&k, &exact, &NormKind::Max)
}

fn gpe_background() -> kronmode::Result<f64> {
    let s = gpe_setup(16, DEFAULT_STRETCH)?;
    let psi = s.initial(GpeInitial::Background)?;
    let cache = s.generator.prepare(0.1)?;
    let out = gpe_strang_step(&cache, &s.weighted.weights, &psi, 0.1)?;
    relative_error(&out, &psi, &NormKind::Max)
}

pub fn run_all(seed: u64) -> Outcome {
    let mut outcome = Outcome::default();
    let mut record = |name: &'static str, tolerance: f64, r: kronmode::Result<f64>| match r {
        Ok(value) => outcome.checks.push(Check { name, value, tolerance }),
        Err(e) => outcome.failures.push((name, e.to_string())),
    };
    record("exact step vs dense exponential", 1e-12, kronecker_vs_dense(seed));
    record("heat error vs closed form", 1e-12, heat_closed_form());
    record("Hermite discrete orthonormality", 1e-12, hermite_orthonormality());
    record("Hermite transform round trip", 1e-11, hermite_round_trip(seed));
    record("Arnoldi baseline vs exact step", 1e-8, krylov_vs_exact());
    record("stationary GPE background", 1e-12, gpe_background());
    outcome
}
