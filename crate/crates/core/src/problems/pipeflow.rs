//! Radially symmetric diffusion–advection of a concentration in a pipe.

use crate::error::{Error, Result};
use crate::fd::{pipeflow_factors, PipeGrids};
use crate::kron::KroneckerOp;
use crate::krylov::{arnoldi_expmv, DEFAULT_M_MAX};
use crate::tensor::{NormKind, Tensor};

use super::{relative_error, Phase, PhaseTimer, Precision, ProblemId, Run, RunReport, TimeGrid};

pub const RHO0: f64 = (0.1 + 5.0) / 2.0;
pub const Z0: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct PipeflowConfig {
    pub n: usize,
    pub t_final: f64,
    pub steps: usize,
    pub norm: NormKind,
    /// Compare against the Arnoldi baseline at this tolerance.
    pub reference_tol: Option<f64>,
}

impl Default for PipeflowConfig {
    fn default() -> Self {
        PipeflowConfig {
            n: 32,
            t_final: 4.0,
            steps: 1,
            norm: NormKind::Max,
            reference_tol: Some(1e-10),
        }
    }
}

/// `exp(−8(ρ − ρ₀)² − 8(z − z₀)²)` on the grid; direction 1 is ρ.
pub fn pipeflow_initial(grids: &PipeGrids) -> Result<Tensor<f64>> {
    Tensor::from_grid(&[grids.rho.points(), grids.z.points()], |x| {
        (-8.0 * (x[0] - RHO0).powi(2) - 8.0 * (x[1] - Z0).powi(2)).exp()
    })
}

pub fn pipeflow_setup(n: usize) -> Result<(KroneckerOp<f64>, Tensor<f64>)> {
    let (op, grids) = pipeflow_factors(n)?;
    let c0 = pipeflow_initial(&grids)?;
    Ok((op, c0))
}

pub fn pipeflow_run(cfg: &PipeflowConfig) -> Result<Run<f64>> {
    if cfg.n < 16 {
        return Err(Error::Config(format!("pipe flow needs n ≥ 16, got {}", cfg.n)));
    }
    let grid = TimeGrid::new(0.0, cfg.t_final, cfg.steps)?;
    let mut timer = PhaseTimer::start();

    let (op, c0) = pipeflow_setup(cfg.n)?;
    let cache = timer.time(Phase::Exponentials, || op.prepare(grid.tau()))?;
    let mut c = c0.clone();
    for _ in 0..grid.steps() {
        c = timer.time(Phase::MuMode, || cache.step(&c))?;
    }

    let mut report = RunReport::new(ProblemId::Pipeflow, op.shape().dims(), &grid, Precision::Double, &cfg.norm);
    report.n = Some(cfg.n);
    report.p = Some("2".into());
    if let Some(tol) = cfg.reference_tol {
        let reference = timer.time(Phase::Reference, || arnoldi_expmv(&op, &c0, cfg.t_final, tol, DEFAULT_M_MAX))?;
        report.rel_error = Some(relative_error(&c, &reference, &cfg.norm)?);
    }
    timer.finish(&mut report);
    Ok(Run { report, state: c })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_krylov_baseline() {
        let run = pipeflow_run(&PipeflowConfig { n: 16, ..Default::default() }).unwrap();
        let err = run.report.rel_error.unwrap();
        assert!(err <= 1e-8, "{err:e}");
        assert!(run.report.time_reference_s >= 0.0);
    }

    #[test]
    fn step_count_invariance() {
        let base = PipeflowConfig { n: 24, reference_tol: None, ..Default::default() };
        let one = pipeflow_run(&base).unwrap();
        let many = pipeflow_run(&PipeflowConfig { steps: 16, ..base }).unwrap();
        let rel = relative_error(&many.state, &one.state, &NormKind::Max).unwrap();
        assert!(rel <= 1e-11, "{rel:e}");
        assert!(one.report.rel_error.is_none());
    }

    fn undershoot(n: usize) -> f64 {
        let run = pipeflow_run(&PipeflowConfig { n, t_final: 1.0, reference_tol: None, ..Default::default() }).unwrap();
        let d = run.state.data();
        assert!(d.iter().all(|x| x.is_finite()));
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max > 0.0 && max <= 1.0);
        (-min).max(0.0) / max
    }

    #[test]
    fn undershoot_shrinks_under_refinement() {
        // Centered advection is dispersive at this Péclet number; negative
        // lobes are a property of the discretization and vanish as h → 0.
        let coarse = undershoot(64);
        let fine = undershoot(128);
        assert!(fine < coarse / 10.0, "{coarse:e} → {fine:e}");
    }

    #[test]
    fn initial_peak() {
        let (_, c0) = pipeflow_setup(16).unwrap();
        let max = c0.norm_max();
        assert!(max <= 1.0 && max > 0.5);
        assert!(pipeflow_run(&PipeflowConfig { n: 8, ..Default::default() }).is_err());
    }
}
