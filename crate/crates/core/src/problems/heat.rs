//! Three-dimensional heat equation on `[0, 2π)³` with periodic boundaries.

use crate::error::{Error, Result};
use crate::fd::{heat_factors, heat_grid, Accuracy};
use crate::kron::KroneckerOp;
use crate::scalar::{RealScalar, Scalar};
use crate::tensor::{NormKind, Shape, Tensor};

use super::{relative_error, to_f64, Phase, PhaseTimer, Precision, ProblemId, Run, RunReport, TimeGrid};

#[derive(Clone, Debug, PartialEq)]
pub struct HeatConfig {
    pub n: usize,
    pub accuracy: Accuracy,
    pub t_final: f64,
    pub steps: usize,
    pub norm: NormKind,
}

impl Default for HeatConfig {
    fn default() -> Self {
        HeatConfig {
            n: 40,
            accuracy: Accuracy::Order(2),
            t_final: 1.0,
            steps: 1,
            norm: NormKind::Max,
        }
    }
}

/// `cos x₁ + cos x₂ + cos x₃` on the grid.
pub fn heat_initial(n: usize) -> Result<Tensor<f64>> {
    let g = heat_grid(n)?;
    let c: Vec<f64> = g.points().iter().map(|x| x.cos()).collect();
    Ok(Tensor::from_fn(Shape::cube(n, 3)?, |i| c[i[0]] + c[i[1]] + c[i[2]]))
}

/// Generator of the discretized problem in working precision `T`.
pub fn heat_operator<T: RealScalar>(n: usize, accuracy: Accuracy) -> Result<KroneckerOp<T>> {
    let op = heat_factors(n, accuracy)?;
    KroneckerOp::new(op.factors().iter().map(|a| a.map(<T as Scalar>::from_f64)).collect())
}

/// Integrates with `steps` exact steps and compares against
/// `e^{−T}(cos x₁ + cos x₂ + cos x₃)`.
pub fn heat3d_run<T: RealScalar>(cfg: &HeatConfig) -> Result<Run<T>> {
    if cfg.n < 8 {
        return Err(Error::Config(format!("heat problem needs n ≥ 8, got {}", cfg.n)));
    }
    let grid = TimeGrid::new(0.0, cfg.t_final, cfg.steps)?;
    let mut timer = PhaseTimer::start();

    let op = heat_operator::<T>(cfg.n, cfg.accuracy)?;
    let u0 = heat_initial(cfg.n)?;
    let mut u: Tensor<T> = u0.map(<T as Scalar>::from_f64);

    let cache = timer.time(Phase::Exponentials, || op.prepare(grid.tau()))?;
    for _ in 0..grid.steps() {
        u = timer.time(Phase::MuMode, || cache.step(&u))?;
    }

    let exact = u0.scaled((-cfg.t_final).exp());
    let err = relative_error(&to_f64(&u), &exact, &cfg.norm)?;

    let mut report = RunReport::new(ProblemId::Heat, op.shape().dims(), &grid, Precision::of::<T>(), &cfg.norm);
    report.n = Some(cfg.n);
    report.p = Some(cfg.accuracy.to_string());
    report.rel_error = Some(err);
    timer.finish(&mut report);
    Ok(Run { report, state: u })
}

/// `|e^{−λ_h T} − e^{−T}|/e^{−T}` with `λ_h = (2 − 2cos h)/h²`, the error of
/// the second-order scheme for this initial datum.
pub fn heat_second_order_error(n: usize, t_final: f64) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let lam = (2.0 - 2.0 * h.cos()) / (h * h);
    ((-lam * t_final).exp() - (-t_final).exp()).abs() / (-t_final).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_error() {
        for n in [16, 40] {
            for norm in [NormKind::Max, NormKind::Two] {
                let cfg = HeatConfig { n, norm, ..Default::default() };
                let run = heat3d_run::<f64>(&cfg).unwrap();
                let err = run.report.rel_error.unwrap();
                assert!((err - heat_second_order_error(n, 1.0)).abs() <= 1e-12, "n={n}: {err}");
            }
        }
    }

    #[test]
    fn step_count_invariance() {
        let one = heat3d_run::<f64>(&HeatConfig { n: 16, ..Default::default() }).unwrap();
        let many = heat3d_run::<f64>(&HeatConfig { n: 16, steps: 100, ..Default::default() }).unwrap();
        let rel = relative_error(&many.state, &one.state, &NormKind::Max).unwrap();
        assert!(rel <= 1e-12, "{rel:e}");
    }

    #[test]
    fn higher_orders_and_spectral() {
        let e2 = heat3d_run::<f64>(&HeatConfig { n: 16, ..Default::default() }).unwrap();
        let e4 = heat3d_run::<f64>(&HeatConfig { n: 16, accuracy: Accuracy::Order(4), ..Default::default() }).unwrap();
        let es = heat3d_run::<f64>(&HeatConfig { n: 16, accuracy: Accuracy::Spectral, ..Default::default() }).unwrap();
        let (a, b, c) = (
            e2.report.rel_error.unwrap(),
            e4.report.rel_error.unwrap(),
            es.report.rel_error.unwrap(),
        );
        assert!(b < a / 10.0);
        assert!(c < 1e-12);
        assert_eq!(es.report.p.as_deref(), Some("inf"));
    }

    #[test]
    fn single_precision() {
        let run = heat3d_run::<f32>(&HeatConfig { n: 16, ..Default::default() }).unwrap();
        assert_eq!(run.report.precision, Precision::Single);
        let err = run.report.rel_error.unwrap();
        assert!((err - heat_second_order_error(16, 1.0)).abs() < 1e-4);
    }

    #[test]
    fn report_fields() {
        let run = heat3d_run::<f64>(&HeatConfig { n: 8, steps: 4, ..Default::default() }).unwrap();
        let r = &run.report;
        assert_eq!(r.shape, vec![8, 8, 8]);
        assert_eq!(r.steps, 4);
        assert_eq!(r.tau, 0.25);
        assert_eq!(r.norm, "max");
        assert!(r.time_exp_s >= 0.0 && r.time_mumode_s >= 0.0 && r.time_other_s >= 0.0);
        assert!(r.total_s >= r.time_exp_s + r.time_mumode_s - 1e-9);
        assert!(heat3d_run::<f64>(&HeatConfig { n: 6, ..Default::default() }).is_err());
        assert!(heat3d_run::<f64>(&HeatConfig { steps: 0, ..Default::default() }).is_err());
    }
}
