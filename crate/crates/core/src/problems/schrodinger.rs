//! Linear Schrödinger equations in a Hermite basis: a time-independent
//! potential integrated exactly in one step, and a time-dependent one
//! integrated with the exponential midpoint rule.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hermite::{forward_transform, hamiltonian_factor, inverse_transform, position_operator, HermiteBasis};
use crate::kron::{KroneckerOp, PropagatorCache};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use crate::tensor::{NormKind, Tensor};

use super::{drift, relative_error, Phase, PhaseTimer, Precision, ProblemId, Run, RunReport, TimeGrid};

/// `2^{−5/2}π^{−3/4}(x₁ + i x₂)e^{−|x|²/4}`.
pub fn psi0(x: &[f64]) -> Complex64 {
    let c = 2f64.powf(-2.5) * PI.powf(-0.75);
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Complex64::new(x[0], x[1]) * (c * (-0.25 * r2).exp())
}

fn cube_bases(k: usize) -> Result<Vec<HermiteBasis>> {
    let b = HermiteBasis::new(k)?;
    Ok(vec![b.clone(), b.clone(), b])
}

/// Hermite coefficients of the initial datum (interpolated at the nodes).
pub fn initial_coefficients(bases: &[HermiteBasis]) -> Result<Tensor<Complex64>> {
    let axes: Vec<&[f64]> = bases.iter().map(|b| b.nodes()).collect();
    let values = Tensor::from_grid(&axes, psi0)?;
    forward_transform(bases, &values)
}

/// Generator with `V₁ = cos 2πx₁` (or `x₁²/2` when `harmonic_only`),
/// `V₂ = x₂²/2`, `V₃ = x₃²/2`.
pub fn hkp_operator(basis: &HermiteBasis, harmonic_only: bool) -> Result<KroneckerOp<Complex64>> {
    let a1 = if harmonic_only {
        hamiltonian_factor(basis, |x| 0.5 * x * x)?
    } else {
        hamiltonian_factor(basis, |x| (2.0 * PI * x).cos())?
    };
    let harm = hamiltonian_factor(basis, |x| 0.5 * x * x)?;
    KroneckerOp::new(vec![a1, harm.clone(), harm])
}

#[derive(Clone, Debug, PartialEq)]
pub struct HkpConfig {
    pub k: usize,
    pub t_final: f64,
    /// Basis size of the reference solution; `None` skips the comparison.
    pub reference_k: Option<usize>,
    pub harmonic_only: bool,
    pub norm: NormKind,
}

impl Default for HkpConfig {
    fn default() -> Self {
        HkpConfig {
            k: 40,
            t_final: 1.0,
            reference_k: Some(120),
            harmonic_only: false,
            norm: NormKind::Max,
        }
    }
}

struct HkpSolution {
    bases: Vec<HermiteBasis>,
    initial: Tensor<Complex64>,
    last: Tensor<Complex64>,
}

fn hkp_solve(k: usize, t_final: f64, harmonic_only: bool, timer: &mut PhaseTimer, phase_exp: Phase, phase_step: Phase) -> Result<HkpSolution> {
    let bases = cube_bases(k)?;
    let op = hkp_operator(&bases[0], harmonic_only)?;
    let initial = initial_coefficients(&bases)?;
    let cache = timer.time(phase_exp, || op.prepare(t_final))?;
    let last = timer.time(phase_step, || cache.step(&initial))?;
    Ok(HkpSolution { bases, initial, last })
}

/// One exact step to `T`. The state is the coefficient tensor. The error is
/// measured on the values at the `k`-point node grid against a solution with
/// `reference_k` basis functions evaluated at the same points.
pub fn hkp_run(cfg: &HkpConfig) -> Result<Run<Complex64>> {
    if cfg.k < 8 {
        return Err(Error::Config(format!("Hermite problems need k ≥ 8, got {}", cfg.k)));
    }
    let grid = TimeGrid::new(0.0, cfg.t_final, 1)?;
    let mut timer = PhaseTimer::start();
    let sol = hkp_solve(cfg.k, cfg.t_final, cfg.harmonic_only, &mut timer, Phase::Exponentials, Phase::MuMode)?;

    let shape = sol.last.shape().dims().to_vec();
    let mut report = RunReport::new(ProblemId::SchrodingerTi, &shape, &grid, Precision::Double, &cfg.norm);
    report.k = Some(cfg.k);
    report.norm_drift = Some(drift(sol.initial.norm_two(), sol.last.norm_two()));

    if let Some(kr) = cfg.reference_k {
        let reference = {
            let mut ref_timer = PhaseTimer::start();
            let r = hkp_solve(kr, cfg.t_final, cfg.harmonic_only, &mut ref_timer, Phase::Reference, Phase::Reference)?;
            let pts: Vec<Vec<f64>> = sol.bases.iter().map(|b| b.nodes().to_vec()).collect();
            timer.time(Phase::Reference, || inverse_transform(&r.bases, &r.last, Some(&pts)))?
        };
        let values = inverse_transform(&sol.bases, &sol.last, None)?;
        report.rel_error = Some(relative_error(&values, &reference, &cfg.norm)?);
    }
    timer.finish(&mut report);
    Ok(Run { report, state: sol.last })
}

/// `e^{τA(t+τ/2)}u` for a generator in Kronecker form.
pub fn magnus_midpoint_step<T: Scalar>(
    factors_of_t: impl Fn(f64) -> Result<KroneckerOp<T>>,
    u: &Tensor<T>,
    t: f64,
    tau: f64,
) -> Result<Tensor<T>> {
    let op = factors_of_t(t + 0.5 * tau)?;
    op.propagate(u, tau)
}

/// Generator of the time-dependent problem: harmonic in every direction,
/// with the linear term `sin²(t)·x₃` in direction 3.
#[derive(Clone, Debug)]
pub struct HkmpGenerator {
    harmonic: DenseMatrix<Complex64>,
    position: DenseMatrix<Complex64>,
}

impl HkmpGenerator {
    pub fn new(basis: &HermiteBasis) -> Result<Self> {
        let k = basis.k();
        let mi = Complex64::new(0.0, -1.0);
        let harmonic = DenseMatrix::from_fn(k, k, |i, j| if i == j { mi * (i as f64 + 0.5) } else { Complex64::new(0.0, 0.0) });
        let position = position_operator(basis)?.map(|x| mi * x);
        Ok(HkmpGenerator { harmonic, position })
    }

    /// `A₃(t) = −i[diag(i + ½) + sin²(t)·X]`.
    pub fn factor3(&self, t: f64) -> DenseMatrix<Complex64> {
        let s = t.sin().powi(2);
        self.harmonic.add(&self.position.scale(Complex64::new(s, 0.0))).expect("same size")
    }

    pub fn operator(&self, t: f64) -> Result<KroneckerOp<Complex64>> {
        KroneckerOp::new(vec![self.harmonic.clone(), self.harmonic.clone(), self.factor3(t)])
    }

    /// Propagates over `grid` with the exponential midpoint rule. The
    /// exponentials of the two time-independent factors are computed once.
    pub fn integrate(&self, u0: &Tensor<Complex64>, grid: &TimeGrid, timer: &mut PhaseTimer) -> Result<(Tensor<Complex64>, f64)> {
        let tau = grid.tau();
        let fixed = timer.time(Phase::Exponentials, || self.harmonic.scale(Complex64::new(tau, 0.0)).exp())?;
        let n0 = u0.norm_two();
        let mut worst = 0.0f64;
        let mut u = u0.clone();
        for j in 0..grid.steps() {
            let tm = grid.time(j) + 0.5 * tau;
            let e3 = timer.time(Phase::Exponentials, || self.factor3(tm).scale(Complex64::new(tau, 0.0)).exp())?;
            let cache = PropagatorCache::from_exponentials(tau, vec![fixed.clone(), fixed.clone(), e3])?;
            u = timer.time(Phase::MuMode, || cache.step(&u))?;
            worst = worst.max(drift(n0, u.norm_two()));
        }
        Ok((u, worst))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HkmpConfig {
    pub k: usize,
    pub t_final: f64,
    pub steps: usize,
    /// Step count of the reference on the same basis; `None` skips it.
    pub reference_steps: Option<usize>,
    pub norm: NormKind,
}

impl Default for HkmpConfig {
    fn default() -> Self {
        HkmpConfig {
            k: 20,
            t_final: 1.0,
            steps: 50,
            reference_steps: Some(2048),
            norm: NormKind::Max,
        }
    }
}

/// Exponential midpoint integration; the state is the coefficient tensor
/// and the error is measured on the node-grid values.
pub fn hkmp_run(cfg: &HkmpConfig) -> Result<Run<Complex64>> {
    if cfg.k < 8 {
        return Err(Error::Config(format!("Hermite problems need k ≥ 8, got {}", cfg.k)));
    }
    let grid = TimeGrid::new(0.0, cfg.t_final, cfg.steps)?;
    let mut timer = PhaseTimer::start();
    let bases = cube_bases(cfg.k)?;
    let generator = HkmpGenerator::new(&bases[0])?;
    let c0 = initial_coefficients(&bases)?;
    let (c, worst) = generator.integrate(&c0, &grid, &mut timer)?;

    let mut report = RunReport::new(ProblemId::SchrodingerTd, c.shape().dims(), &grid, Precision::Double, &cfg.norm);
    report.k = Some(cfg.k);
    report.norm_drift = Some(worst);
    if let Some(rs) = cfg.reference_steps {
        let rgrid = TimeGrid::new(0.0, cfg.t_final, rs)?;
        let mut ref_timer = PhaseTimer::start();
        let (r, _) = timer.time(Phase::Reference, || generator.integrate(&c0, &rgrid, &mut ref_timer))?;
        let values = inverse_transform(&bases, &c, None)?;
        let reference = inverse_transform(&bases, &r, None)?;
        report.rel_error = Some(relative_error(&values, &reference, &cfg.norm)?);
    }
    timer.finish(&mut report);
    Ok(Run { report, state: c })
}
