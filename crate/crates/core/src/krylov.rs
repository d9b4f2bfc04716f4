//! Matrix-free Arnoldi approximation of `e^{τM}v` for Kronecker-sum `M`.
//!
//! This is the reference method the μ-mode propagator is checked against.
//! The subspace is built with modified Gram–Schmidt plus one
//! reorthogonalization pass; the approximation is
//! `y = ‖v‖·V_m·e^{τH_m}·e_1`. The error is estimated by the difference
//! between the approximations at consecutive even subspace sizes. If the
//! estimate has not met the tolerance at `m_max`, the step is split into
//! twice as many equal substeps and the computation restarts from the last
//! accepted substep.

use crate::error::{Error, Result};
use crate::kron::KroneckerOp;
use crate::linalg::DenseMatrix;
use num_traits::{One, Zero};

use crate::scalar::{RealScalar, Scalar};
use crate::tensor::Tensor;

pub const DEFAULT_M_MAX: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-10;
/// Maximum number of times the step is halved before giving up.
pub const MAX_HALVINGS: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    pub tol: f64,
    pub m_max: usize,
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: DEFAULT_TOL,
            m_max: DEFAULT_M_MAX,
            max_halvings: MAX_HALVINGS,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome<T> {
    pub result: Tensor<T>,
    /// Estimated relative error of `result`.
    pub estimate: f64,
    pub substeps: usize,
    pub matvecs: usize,
}

/// Arnoldi state for one substep.
pub struct KrylovWorkspace<T> {
    basis: Vec<Tensor<T>>,
    hess: DenseMatrix<T>,
    m_max: usize,
    tol: f64,
}

impl<T: Scalar> KrylovWorkspace<T> {
    pub fn new(m_max: usize, tol: f64) -> Self {
        KrylovWorkspace {
            basis: Vec::with_capacity(m_max + 1),
            hess: DenseMatrix::zeros(m_max + 1, m_max),
            m_max,
            tol,
        }
    }

    pub fn basis(&self) -> &[Tensor<T>] {
        &self.basis
    }

    pub fn hessenberg(&self) -> &DenseMatrix<T> {
        &self.hess
    }
}

enum SubstepResult<T> {
    Converged {
        y: Tensor<T>,
        abs_estimate: f64,
        matvecs: usize,
    },
    Failed {
        abs_estimate: f64,
        matvecs: usize,
    },
}

/// `e^{h·H_k} e_1` for the leading `k×k` block of the Hessenberg matrix.
fn projected_exp<T: Scalar>(hess: &DenseMatrix<T>, k: usize, h: f64) -> Result<Vec<T>> {
    let hk = DenseMatrix::from_fn(k, k, |i, j| hess.get(i, j) * T::from_f64(h));
    Ok(hk.exp()?.column(0).to_vec())
}

fn coeff_diff_norm<T: Scalar>(new: &[T], old: &[T]) -> f64 {
    new.iter()
        .enumerate()
        .map(|(i, &c)| {
            let o = old.get(i).copied().unwrap_or_else(T::zero);
            (c - o).abs_sqr().as_f64()
        })
        .sum::<f64>()
        .sqrt()
}

fn coeff_norm<T: Scalar>(c: &[T]) -> f64 {
    c.iter().map(|&x| x.abs_sqr().as_f64()).sum::<f64>().sqrt()
}

impl<T: Scalar> KrylovWorkspace<T> {
    fn combine(&self, coeffs: &[T], beta: T::Real) -> Tensor<T> {
        let mut y = Tensor::zeros(self.basis[0].shape().clone());
        for (c, v) in coeffs.iter().zip(&self.basis) {
            y.axpy(c.scale(beta), v).expect("basis tensors share one shape");
        }
        y
    }

    fn substep(&mut self, op: &KroneckerOp<T>, w: &Tensor<T>, h: f64) -> Result<SubstepResult<T>> {
        self.basis.clear();
        self.hess = DenseMatrix::zeros(self.m_max + 1, self.m_max);
        let beta = w.norm_two();
        if beta == T::Real::zero() {
            return Ok(SubstepResult::Converged {
                y: w.clone(),
                abs_estimate: 0.0,
                matvecs: 0,
            });
        }
        let inv_beta = T::Real::one() / beta;
        self.basis.push(w.map(|x| x.scale(inv_beta)));

        let mut prev: Option<Vec<T>> = None;
        let mut last_estimate = f64::INFINITY;
        let mut hscale = T::Real::zero();
        let mut matvecs = 0;

        for j in 0..self.m_max {
            let mut p = op.matvec(&self.basis[j])?;
            matvecs += 1;
            for _pass in 0..2 {
                for i in 0..=j {
                    let c = self.basis[i].dot(&p)?;
                    p.axpy(-c, &self.basis[i])?;
                    self.hess.add_to(i, j, c);
                }
            }
            let next = p.norm_two();
            self.hess.set(j + 1, j, T::from_real(next));
            for i in 0..=j + 1 {
                let m = self.hess.get(i, j).modulus();
                if m > hscale {
                    hscale = m;
                }
            }
            let size = j + 1;

            // Happy breakdown: the Krylov space is invariant under M.
            let tiny = hscale * <T::Real as Scalar>::from_f64(1e-13);
            if next <= tiny {
                let c = projected_exp(&self.hess, size, h)?;
                return Ok(SubstepResult::Converged {
                    y: self.combine(&c, beta),
                    abs_estimate: 0.0,
                    matvecs,
                });
            }
            let inv = T::Real::one() / next;
            self.basis.push(p.map(|x| x.scale(inv)));

            if size % 2 == 0 || size == self.m_max {
                let c = projected_exp(&self.hess, size, h)?;
                if let Some(old) = &prev {
                    let est = coeff_diff_norm(&c, old);
                    last_estimate = est * beta.as_f64();
                    if est <= self.tol * coeff_norm(&c) {
                        return Ok(SubstepResult::Converged {
                            y: self.combine(&c, beta),
                            abs_estimate: last_estimate,
                            matvecs,
                        });
                    }
                }
                prev = Some(c);
            }
        }
        Ok(SubstepResult::Failed {
            abs_estimate: last_estimate,
            matvecs,
        })
    }
}

/// Approximates `e^{τM}v` to relative tolerance `tol` with at most `m_max`
/// Arnoldi vectors per substep.
pub fn arnoldi_expmv<T: Scalar>(
    op: &KroneckerOp<T>,
    v: &Tensor<T>,
    tau: f64,
    tol: f64,
    m_max: usize,
) -> Result<Tensor<T>> {
    let opts = KrylovOptions {
        tol,
        m_max,
        ..KrylovOptions::default()
    };
    arnoldi_expmv_with(op, v, tau, &opts).map(|o| o.result)
}

/// As [`arnoldi_expmv`], also reporting the error estimate and work done.
pub fn arnoldi_expmv_with<T: Scalar>(
    op: &KroneckerOp<T>,
    v: &Tensor<T>,
    tau: f64,
    opts: &KrylovOptions,
) -> Result<KrylovOutcome<T>> {
    if v.shape() != op.shape() {
        return Err(Error::shape(format!(
            "vector has shape {}, operator has {}",
            v.shape(),
            op.shape()
        )));
    }
    if !(opts.tol >= 1e-14) {
        return Err(Error::InvalidInput(format!(
            "tolerance {} below 1e-14",
            opts.tol
        )));
    }
    if opts.m_max == 0 {
        return Err(Error::InvalidInput("m_max must be at least 1".into()));
    }
    if !tau.is_finite() {
        return Err(Error::InvalidInput(format!("time step {tau} is not finite")));
    }
    if tau == 0.0 {
        return Ok(KrylovOutcome {
            result: v.clone(),
            estimate: 0.0,
            substeps: 0,
            matvecs: 0,
        });
    }

    let mut ws = KrylovWorkspace::new(opts.m_max, opts.tol);
    let mut w = v.clone();
    let mut substeps = 1usize;
    let mut done = 0usize;
    let mut halvings = 0u32;
    let mut abs_estimate = 0.0;
    let mut matvecs = 0;

    while done < substeps {
        let h = tau / substeps as f64;
        match ws.substep(op, &w, h)? {
            SubstepResult::Converged {
                y,
                abs_estimate: e,
                matvecs: k,
            } => {
                w = y;
                abs_estimate += e;
                matvecs += k;
                done += 1;
            }
            SubstepResult::Failed {
                abs_estimate: e,
                matvecs: k,
            } => {
                matvecs += k;
                halvings += 1;
                if halvings > opts.max_halvings {
                    let norm = w.norm_two().as_f64().max(f64::MIN_POSITIVE);
                    return Err(Error::NoConvergence {
                        estimate: (abs_estimate + e) / norm,
                        substeps,
                    });
                }
                substeps *= 2;
                done *= 2;
            }
        }
    }
    let norm = w.norm_two().as_f64();
    let estimate = if norm > 0.0 { abs_estimate / norm } else { 0.0 };
    Ok(KrylovOutcome {
        result: w,
        estimate,
        substeps,
        matvecs,
    })
}
