//! End-to-end drivers: heat, pipe flow, Schrödinger (time independent and
//! time dependent potential) and Gross–Pitaevskii, plus the shared report
//! and timing types.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};
use crate::tensor::{NormKind, Tensor};

pub mod gpe;
pub mod heat;
pub mod pipeflow;
pub mod schrodinger;

pub use gpe::{gpe_run, gpe_strang_step, GpeConfig, GpeInitial};
pub use heat::{heat3d_run, HeatConfig};
pub use pipeflow::{pipeflow_run, PipeflowConfig};
pub use schrodinger::{hkmp_run, hkp_run, magnus_midpoint_step, HkmpConfig, HkpConfig};

/// Uniform steps from `t0` to `t_final`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_final: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_final: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("number of steps must be positive".into()));
        }
        if !(t0.is_finite() && t_final.is_finite() && t_final > t0) {
            return Err(Error::Config(format!(
                "final time must exceed the initial time (got {t0} → {t_final})"
            )));
        }
        Ok(TimeGrid { t0, t_final, steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        (self.t_final - self.t0) / self.steps as f64
    }

    /// Start time of step `j`.
    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.tau()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    Heat,
    Pipeflow,
    SchrodingerTi,
    SchrodingerTd,
    Gpe,
}

impl ProblemId {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemId::Heat => "heat",
            ProblemId::Pipeflow => "pipeflow",
            ProblemId::SchrodingerTi => "schrodinger-ti",
            ProblemId::SchrodingerTd => "schrodinger-td",
            ProblemId::Gpe => "gpe",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heat" => Ok(ProblemId::Heat),
            "pipeflow" => Ok(ProblemId::Pipeflow),
            "schrodinger-ti" => Ok(ProblemId::SchrodingerTi),
            "schrodinger-td" => Ok(ProblemId::SchrodingerTd),
            "gpe" => Ok(ProblemId::Gpe),
            other => Err(Error::Config(format!("unknown problem '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Single,
    #[default]
    Double,
}

impl Precision {
    pub fn of<T: Scalar>() -> Self {
        if std::mem::size_of::<T::Real>() == 4 {
            Precision::Single
        } else {
            Precision::Double
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one run. Times are wall-clock seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemId,
    pub shape: Vec<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub p: Option<String>,
    pub steps: usize,
    pub tau: f64,
    pub t_final: f64,
    pub precision: Precision,
    pub norm: String,
    pub rel_error: Option<f64>,
    /// Relative change of the conserved norm over the run, where one exists.
    pub norm_drift: Option<f64>,
    pub time_exp_s: f64,
    pub time_mumode_s: f64,
    pub time_other_s: f64,
    pub total_s: f64,
    /// Time spent computing the reference solution; not part of `total_s`.
    pub time_reference_s: f64,
}

/// Final state together with its report.
#[derive(Clone, Debug)]
pub struct Run<T> {
    pub report: RunReport,
    pub state: Tensor<T>,
}

/// Accumulates wall-clock time per phase.
#[derive(Debug)]
pub struct PhaseTimer {
    exp: Duration,
    mumode: Duration,
    reference: Duration,
    start: Instant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Exponentials,
    MuMode,
    Reference,
}

impl PhaseTimer {
    pub fn start() -> Self {
        PhaseTimer {
            exp: Duration::ZERO,
            mumode: Duration::ZERO,
            reference: Duration::ZERO,
            start: Instant::now(),
        }
    }

    pub fn time<R>(&mut self, phase: Phase, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let out = f();
        let dt = t.elapsed();
        match phase {
            Phase::Exponentials => self.exp += dt,
            Phase::MuMode => self.mumode += dt,
            Phase::Reference => self.reference += dt,
        }
        out
    }

    /// Writes the phase times into `report`; "other" is everything else.
    pub fn finish(&self, report: &mut RunReport) {
        let wall = self.start.elapsed();
        let total = wall.saturating_sub(self.reference);
        report.time_exp_s = self.exp.as_secs_f64();
        report.time_mumode_s = self.mumode.as_secs_f64();
        report.time_other_s = total.saturating_sub(self.exp + self.mumode).as_secs_f64();
        report.total_s = total.as_secs_f64();
        report.time_reference_s = self.reference.as_secs_f64();
    }
}

impl RunReport {
    pub(crate) fn new(problem: ProblemId, shape: &[usize], grid: &TimeGrid, precision: Precision, norm: &NormKind) -> Self {
        RunReport {
            problem,
            shape: shape.to_vec(),
            n: None,
            k: None,
            p: None,
            steps: grid.steps(),
            tau: grid.tau(),
            t_final: grid.t_final(),
            precision,
            norm: norm.name().to_string(),
            rel_error: None,
            norm_drift: None,
            time_exp_s: 0.0,
            time_mumode_s: 0.0,
            time_other_s: 0.0,
            total_s: 0.0,
            time_reference_s: 0.0,
        }
    }
}

/// `‖u − reference‖/‖reference‖` in the given norm.
pub fn relative_error<T: Scalar>(u: &Tensor<T>, reference: &Tensor<T>, norm: &NormKind) -> Result<f64> {
    let diff = u.sub(reference)?;
    let r = reference.norm(norm)?;
    if r == 0.0 || !r.is_finite() {
        return Err(Error::InvalidReference);
    }
    Ok(diff.norm(norm)? / r)
}

/// `|b − a|/a` for norms `a`, `b`.
pub(crate) fn drift(initial: f64, current: f64) -> f64 {
    (current - initial).abs() / initial
}

/// Converts a real tensor to double precision.
pub(crate) fn to_f64<R: RealScalar>(t: &Tensor<R>) -> Tensor<f64> {
    t.map(|x| x.as_f64())
}

/// Observed orders `log2(e_j/e_{j+1})` for errors at successively halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn time_grid() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.tau(), 0.25);
        assert_eq!(g.time(2), 0.5);
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 3).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 3).is_err());
    }

    #[test]
    fn relative_error_cases() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let r = Tensor::from_vec(s.clone(), vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        assert_eq!(relative_error(&r, &r, &NormKind::Max).unwrap(), 0.0);
        let twice = r.scaled(2.0);
        assert_eq!(relative_error(&twice, &r, &NormKind::Max).unwrap(), 1.0);
        assert!((relative_error(&twice, &r, &NormKind::Two).unwrap() - 1.0).abs() < 1e-15);
        let z = Tensor::zeros(s);
        assert_eq!(relative_error(&r, &z, &NormKind::Max), Err(Error::InvalidReference));
    }

    #[test]
    fn names_round_trip() {
        for p in [
            ProblemId::Heat,
            ProblemId::Pipeflow,
            ProblemId::SchrodingerTi,
            ProblemId::SchrodingerTd,
            ProblemId::Gpe,
        ] {
            assert_eq!(p.name().parse::<ProblemId>().unwrap(), p);
        }
        assert!("wave".parse::<ProblemId>().is_err());
        assert_eq!(Precision::of::<f32>(), Precision::Single);
        assert_eq!(Precision::of::<crate::Complex64>(), Precision::Double);
    }

    #[test]
    fn orders() {
        let o = observed_orders(&[1.0, 0.25, 0.0625]);
        assert_eq!(o, vec![2.0, 2.0]);
    }
}
