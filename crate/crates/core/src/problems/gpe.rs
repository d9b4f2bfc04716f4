//! Gross–Pitaevskii equation `ψ' = (i/2)Δψ + (i/2)(1 − |ψ|²)ψ` on
//! `[−20, 20]³` with Neumann boundaries, discretized on a clustered grid
//! and integrated by Strang splitting.
//!
//! The unknowns are the weighted values `φ = W^{1/2}ψ`, in which the
//! discrete Laplacian is symmetric and the plain two-norm of `φ` is the
//! weighted norm of `ψ`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fd::{gpe_weighted_factors, Grid1D, WeightedOperator};
use crate::kron::{KroneckerOp, PropagatorCache};
use crate::tensor::{NormKind, Shape, Tensor};

use super::{drift, Phase, PhaseTimer, Precision, ProblemId, Run, RunReport, TimeGrid};

pub const HALF_WIDTH: f64 = 20.0;
pub const DEFAULT_STRETCH: f64 = 2.0;

/// Core profile `f(r) = √(r²(a₁ + a₂r²)/(1 + b₁r² + a₂r⁴))` of a straight vortex.
pub mod vortex {
    pub const A1: f64 = 11.0 / 32.0;
    pub const A2: f64 = 11.0 / 384.0;
    pub const B1: f64 = 1.0 / 3.0;
    /// Distance of each vortex line from the origin.
    pub const OFFSET: f64 = 2.0;

    /// `f(r)/r` as a function of `r²`.
    pub fn amplitude_over_r(r2: f64) -> f64 {
        ((A1 + A2 * r2) / (1.0 + B1 * r2 + A2 * r2 * r2)).sqrt()
    }

    pub fn profile(r: f64) -> f64 {
        r * amplitude_over_r(r * r)
    }
}

/// `f(r)e^{iθ}` in the plane `(a, b)`: `(a + ib)·f(r)/r`.
fn single_vortex(a: f64, b: f64) -> Complex64 {
    Complex64::new(a, b) * vortex::amplitude_over_r(a * a + b * b)
}

/// Product of a vortex along `x₃` through `(x₁, x₂) = (0, −d)` and a vortex
/// along `x₁` through `(x₂, x₃) = (d, 0)`.
pub fn two_vortex(x: &[f64]) -> Complex64 {
    let d = vortex::OFFSET;
    single_vortex(x[0], x[1] + d) * single_vortex(x[1] - d, x[2])
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GpeInitial {
    #[default]
    Vortices,
    /// `ψ ≡ 1`.
    Background,
}

/// Grids, weights and the linear generator `i·(⊕ W^{1/2}(½D₂)W^{−1/2})`.
#[derive(Clone, Debug)]
pub struct GpeSetup {
    pub grids: Vec<Grid1D>,
    pub weighted: WeightedOperator,
    pub generator: KroneckerOp<Complex64>,
}

pub fn gpe_setup(n: usize, stretch: f64) -> Result<GpeSetup> {
    let g = Grid1D::sinh_clustered(HALF_WIDTH, n, stretch)?;
    let grids = vec![g.clone(), g.clone(), g];
    let weighted = gpe_weighted_factors(&grids)?;
    let i = Complex64::new(0.0, 1.0);
    let generator = KroneckerOp::new(weighted.op.factors().iter().map(|a| a.map(|x| i * x)).collect())?;
    Ok(GpeSetup { grids, weighted, generator })
}

impl GpeSetup {
    pub fn shape(&self) -> &Shape {
        self.generator.shape()
    }

    /// Initial state in weighted variables.
    pub fn initial(&self, kind: GpeInitial) -> Result<Tensor<Complex64>> {
        let axes: Vec<&[f64]> = self.grids.iter().map(|g| g.points()).collect();
        let psi = Tensor::from_grid(&axes, |x| match kind {
            GpeInitial::Vortices => two_vortex(x),
            GpeInitial::Background => Complex64::new(1.0, 0.0),
        })?;
        let w = weight_tensor(&self.weighted.weights, self.shape())?;
        let mut out = psi;
        for (v, wi) in out.data_mut().iter_mut().zip(w.data()) {
            *v *= wi.sqrt();
        }
        Ok(out)
    }

    pub fn weight_tensor(&self) -> Result<Tensor<f64>> {
        weight_tensor(&self.weighted.weights, self.shape())
    }
}

/// `w(i) = Π_μ w_μ(i_μ)`.
pub fn weight_tensor(weights: &[Vec<f64>], shape: &Shape) -> Result<Tensor<f64>> {
    if weights.len() != shape.order() {
        return Err(Error::Shape {
            direction: None,
            message: format!("{} weight vectors for an order-{} tensor", weights.len(), shape.order()),
        });
    }
    for (mu, (w, &n)) in weights.iter().zip(shape.dims()).enumerate() {
        if w.len() != n {
            return Err(Error::Shape {
                direction: Some(mu + 1),
                message: format!("{} weights for extent {n}", w.len()),
            });
        }
    }
    Ok(Tensor::from_fn(shape.clone(), |i| i.iter().zip(weights).map(|(&j, w)| w[j]).product()))
}

/// Exact flow of `φ' = (i/2)(1 − |φ|²/w)φ` over time `h`.
pub fn nonlinear_phase(psi: &mut Tensor<Complex64>, w: &Tensor<f64>, h: f64) -> Result<()> {
    if psi.shape() != w.shape() {
        return Err(Error::Shape {
            direction: None,
            message: format!("state {} and weights {} differ", psi.shape(), w.shape()),
        });
    }
    for (v, &wi) in psi.data_mut().iter_mut().zip(w.data()) {
        let angle = 0.5 * (1.0 - v.norm_sqr() / wi) * h;
        *v *= Complex64::from_polar(1.0, angle);
    }
    Ok(())
}

fn strang(cache: &PropagatorCache<Complex64>, w: &Tensor<f64>, psi: &Tensor<Complex64>, tau: f64, timer: &mut PhaseTimer) -> Result<Tensor<Complex64>> {
    let mut u = psi.clone();
    nonlinear_phase(&mut u, w, 0.5 * tau)?;
    let mut u = timer.time(Phase::MuMode, || cache.step(&u))?;
    nonlinear_phase(&mut u, w, 0.5 * tau)?;
    Ok(u)
}

fn check_tau(cache: &PropagatorCache<Complex64>, tau: f64) -> Result<()> {
    if (cache.tau() - tau).abs() > 1e-14 * tau.abs().max(1.0) {
        return Err(Error::Config(format!(
            "propagator prepared for τ = {}, step requested with τ = {tau}",
            cache.tau()
        )));
    }
    Ok(())
}

/// Half step of the nonlinear flow, full linear step from `linear`, half
/// nonlinear step. `linear` must hold the exponentials for `tau`.
pub fn gpe_strang_step(
    linear: &PropagatorCache<Complex64>,
    weights: &[Vec<f64>],
    psi: &Tensor<Complex64>,
    tau: f64,
) -> Result<Tensor<Complex64>> {
    check_tau(linear, tau)?;
    if psi.shape() != linear.shape() {
        return Err(Error::Shape {
            direction: None,
            message: format!("state {} and propagator {} differ", psi.shape(), linear.shape()),
        });
    }
    let w = weight_tensor(weights, psi.shape())?;
    strang(linear, &w, psi, tau, &mut PhaseTimer::start())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GpeConfig {
    pub n: usize,
    pub t_final: f64,
    pub tau: f64,
    pub stretch: f64,
    pub initial: GpeInitial,
}

impl Default for GpeConfig {
    fn default() -> Self {
        GpeConfig {
            n: 32,
            t_final: 1.0,
            tau: 0.1,
            stretch: DEFAULT_STRETCH,
            initial: GpeInitial::Vortices,
        }
    }
}

/// Number of steps of size `tau` that make up `t_final`.
pub fn step_count(t_final: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && t_final > 0.0) {
        return Err(Error::Config(format!("need positive τ and T (got τ={tau}, T={t_final})")));
    }
    let s = (t_final / tau).round();
    if s < 1.0 || (s * tau - t_final).abs() > 1e-9 * t_final {
        return Err(Error::Config(format!("T = {t_final} is not a multiple of τ = {tau}")));
    }
    Ok(s as usize)
}

/// Strang splitting to `t_final`. The report carries the largest relative
/// drift of the weighted norm; the state is in weighted variables.
pub fn gpe_run(cfg: &GpeConfig) -> Result<Run<Complex64>> {
    if cfg.n < 16 {
        return Err(Error::Config(format!("Gross–Pitaevskii runs need n ≥ 16, got {}", cfg.n)));
    }
    let steps = step_count(cfg.t_final, cfg.tau)?;
    let grid = TimeGrid::new(0.0, cfg.t_final, steps)?;
    let mut timer = PhaseTimer::start();
    let setup = gpe_setup(cfg.n, cfg.stretch)?;
    let w = setup.weight_tensor()?;
    let mut psi = setup.initial(cfg.initial)?;
    let cache = timer.time(Phase::Exponentials, || setup.generator.prepare(grid.tau()))?;

    let n0 = psi.norm_two();
    let mut worst = 0.0f64;
    for _ in 0..steps {
        psi = strang(&cache, &w, &psi, grid.tau(), &mut timer)?;
        worst = worst.max(drift(n0, psi.norm_two()));
    }

    let norm = NormKind::WeightedTwo(setup.weighted.weights.clone());
    let mut report = RunReport::new(ProblemId::Gpe, setup.shape().dims(), &grid, Precision::Double, &norm);
    report.n = Some(cfg.n);
    report.p = Some("2".into());
    report.norm_drift = Some(worst);
    timer.finish(&mut report);
    Ok(Run { report, state: psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::arnoldi_expmv;
    use crate::problems::{observed_orders, relative_error};

    #[test]
    fn profile_limits() {
        assert_eq!(vortex::profile(0.0), 0.0);
        assert!((vortex::profile(1e4) - 1.0).abs() < 1e-6);
        let small = vortex::profile(1e-3);
        assert!((small / 1e-3 - vortex::A1.sqrt()).abs() < 1e-6);
        let v = two_vortex(&[0.0, -vortex::OFFSET, 5.0]);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn nonlinear_phase_keeps_modulus() {
        let s = gpe_setup(8, DEFAULT_STRETCH).unwrap();
        let w = s.weight_tensor().unwrap();
        let psi = s.initial(GpeInitial::Vortices).unwrap();
        let mut out = psi.clone();
        nonlinear_phase(&mut out, &w, 0.37).unwrap();
        for (a, b) in psi.data().iter().zip(out.data()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let s = gpe_setup(8, DEFAULT_STRETCH).unwrap();
        let psi = s.initial(GpeInitial::Vortices).unwrap();
        let cache = s.generator.prepare(0.0).unwrap();
        let out = gpe_strang_step(&cache, &s.weighted.weights, &psi, 0.0).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn background_is_stationary() {
        let s = gpe_setup(16, DEFAULT_STRETCH).unwrap();
        let psi = s.initial(GpeInitial::Background).unwrap();
        let cache = s.generator.prepare(0.1).unwrap();
        let mut u = psi.clone();
        for _ in 0..5 {
            u = gpe_strang_step(&cache, &s.weighted.weights, &u, 0.1).unwrap();
        }
        let rel = relative_error(&u, &psi, &NormKind::Max).unwrap();
        assert!(rel <= 1e-12, "{rel:e}");
    }

    #[test]
    fn norm_conserved() {
        let run = gpe_run(&GpeConfig { n: 16, ..Default::default() }).unwrap();
        assert_eq!(run.report.steps, 10);
        assert!(run.report.norm_drift.unwrap() <= 1e-10);
        assert_eq!(run.report.norm, "weighted_two");
    }

    #[test]
    fn linear_substep_matches_krylov() {
        let s = gpe_setup(16, DEFAULT_STRETCH).unwrap();
        let psi = s.initial(GpeInitial::Vortices).unwrap();
        let exact = s.generator.propagate(&psi, 0.1).unwrap();
        let k = arnoldi_expmv(&s.generator, &psi, 0.1, 1e-10, 50).unwrap();
        assert!(relative_error(&exact, &k, &NormKind::Two).unwrap() <= 1e-8);
    }

    #[test]
    fn strang_is_second_order() {
        let s = gpe_setup(8, DEFAULT_STRETCH).unwrap();
        let w = s.weight_tensor().unwrap();
        let psi = s.initial(GpeInitial::Vortices).unwrap();
        let solve = |steps: usize| {
            let tau = 1.0 / steps as f64;
            let cache = s.generator.prepare(tau).unwrap();
            let mut u = psi.clone();
            for _ in 0..steps {
                u = strang(&cache, &w, &u, tau, &mut PhaseTimer::start()).unwrap();
            }
            u
        };
        let reference = solve(1000);
        let errs: Vec<f64> = [10, 20, 40]
            .iter()
            .map(|&m| relative_error(&solve(m), &reference, &NormKind::Two).unwrap())
            .collect();
        for o in observed_orders(&errs) {
            assert!((1.8..=2.2).contains(&o), "{:?}", observed_orders(&errs));
        }
    }

    #[test]
    fn validation() {
        let s = gpe_setup(8, DEFAULT_STRETCH).unwrap();
        let psi = s.initial(GpeInitial::Vortices).unwrap();
        let cache = s.generator.prepare(0.1).unwrap();
        assert!(gpe_strang_step(&cache, &s.weighted.weights, &psi, 0.2).is_err());
        assert!(gpe_strang_step(&cache, &s.weighted.weights[..2], &psi, 0.1).is_err());
        assert!(step_count(1.0, 0.3).is_err());
        assert_eq!(step_count(2.5, 0.1).unwrap(), 25);
        assert!(gpe_run(&GpeConfig { n: 8, ..Default::default() }).is_err());
    }
}
