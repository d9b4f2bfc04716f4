//! Hermite functions, Gauss–Hermite quadrature and the spectral transforms
//! between values on the node grid and Hermite coefficients.
//!
//! Transforms in several directions are Tucker operators built from the
//! per-direction matrices `Φ_{iℓ} = φ_i(X_ℓ)` (forward, applied to values
//! multiplied by the modified weights) and `Ψ = Φᵀ` (inverse).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_tridiagonal_eigenvalues, DenseMatrix};
use crate::scalar::Scalar;
use crate::tensor::{tucker, Shape, Tensor};

pub const MAX_NODES: usize = 500;

/// `φ_0(x), …, φ_{k−1}(x)`, the orthonormal Hermite functions.
pub fn hermite_eval(k: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for i in 0..k {
        out.push(cur);
        let next = (2.0 / (i + 1) as f64).sqrt() * x * cur - (i as f64 / (i + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// `(φ_{k−1}(x), φ_k(x))`.
fn hermite_pair(k: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for i in 0..k {
        let next = (2.0 / (i + 1) as f64).sqrt() * x * cur - (i as f64 / (i + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Gauss–Hermite nodes and modified weights `w_ℓ = e^{X_ℓ²}λ_ℓ`.
pub fn gauss_hermite(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if k == 0 || k > MAX_NODES {
        return Err(Error::Config(format!(
            "number of Hermite nodes must be in 1..={MAX_NODES}, got {k}"
        )));
    }
    let diag = vec![0.0; k];
    let off: Vec<f64> = (1..k).map(|i| (i as f64 / 2.0).sqrt()).collect();
    let mut nodes = symmetric_tridiagonal_eigenvalues(&diag, &off)?;

    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let (pm, p) = hermite_pair(k, *x);
            let dp = (2.0 * k as f64).sqrt() * pm - *x * p;
            if dp == 0.0 {
                break;
            }
            let dx = p / dp;
            *x -= dx;
            if dx.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
    }
    for l in 0..k / 2 {
        let a = 0.5 * (nodes[k - 1 - l] - nodes[l]);
        nodes[l] = -a;
        nodes[k - 1 - l] = a;
    }
    if k % 2 == 1 {
        nodes[k / 2] = 0.0;
    }

    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| 1.0 / hermite_eval(k, x).iter().map(|p| p * p).sum::<f64>())
        .collect();
    for l in 0..k / 2 {
        let a = 0.5 * (weights[l] + weights[k - 1 - l]);
        weights[l] = a;
        weights[k - 1 - l] = a;
    }
    Ok((nodes, weights))
}

/// `k×m` matrix of `φ_i` at the given points.
fn eval_rows(k: usize, points: &[f64]) -> DenseMatrix<f64> {
    let mut m = DenseMatrix::zeros(k, points.len());
    for (l, &x) in points.iter().enumerate() {
        for (i, v) in hermite_eval(k, x).into_iter().enumerate() {
            m.set(i, l, v);
        }
    }
    m
}

/// `Φ·diag(v·w)·Φᵀ`.
fn galerkin(phi: &DenseMatrix<f64>, nodes: &[f64], weights: &[f64], v: impl Fn(f64) -> f64) -> Result<DenseMatrix<f64>> {
    let mut scaled = phi.clone();
    for (l, (&x, &w)) in nodes.iter().zip(weights).enumerate() {
        let vx = v(x);
        if !vx.is_finite() {
            return Err(Error::InvalidPotential(format!("non-finite value {vx} at node {x}")));
        }
        for i in 0..phi.rows() {
            scaled.set(i, l, phi.get(i, l) * vx * w);
        }
    }
    let p = scaled.matmul(&phi.transpose())?;
    // Symmetric up to rounding; make it exact.
    let n = p.rows();
    Ok(DenseMatrix::from_fn(n, n, |i, j| 0.5 * (p.get(i, j) + p.get(j, i))))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermiteBasis {
    k: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    phi: DenseMatrix<f64>,
}

impl HermiteBasis {
    pub fn new(k: usize) -> Result<Self> {
        let (nodes, weights) = gauss_hermite(k)?;
        let phi = eval_rows(k, &nodes);
        Ok(HermiteBasis { k, nodes, weights, phi })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Φ_{iℓ} = φ_i(X_ℓ)`.
    pub fn phi(&self) -> &DenseMatrix<f64> {
        &self.phi
    }

    /// `Ψ_{pi} = φ_i(X_p)` at the quadrature nodes.
    pub fn psi(&self) -> DenseMatrix<f64> {
        self.phi.transpose()
    }

    /// `Ψ_{pi} = φ_i(Y_p)` at arbitrary points.
    pub fn eval_matrix(&self, points: &[f64]) -> DenseMatrix<f64> {
        eval_rows(self.k, points).transpose()
    }

    /// `Φ·diag(w)·Φᵀ`, the identity up to rounding.
    pub fn gram(&self) -> DenseMatrix<f64> {
        galerkin(&self.phi, &self.nodes, &self.weights, |_| 1.0).expect("finite weights")
    }
}

fn shape_of(bases: &[HermiteBasis]) -> Result<Shape> {
    Shape::new(bases.iter().map(|b| b.k).collect::<Vec<_>>())
}

fn check_shape<T: Scalar>(bases: &[HermiteBasis], t: &Tensor<T>, what: &str) -> Result<()> {
    let expect = shape_of(bases)?;
    if t.shape() != &expect {
        return Err(Error::Shape {
            direction: None,
            message: format!("{what} has shape {}, bases expect {expect}", t.shape()),
        });
    }
    Ok(())
}

fn convert<T: Scalar>(m: &DenseMatrix<f64>) -> DenseMatrix<T> {
    m.map(T::from_f64)
}

/// Coefficients of the Hermite expansion interpolating `values` given on
/// the tensor grid of quadrature nodes.
pub fn forward_transform<T: Scalar>(bases: &[HermiteBasis], values: &Tensor<T>) -> Result<Tensor<T>> {
    check_shape(bases, values, "values")?;
    let weighted = apply_weights(bases, values);
    let mats: Vec<DenseMatrix<T>> = bases.iter().map(|b| convert(&b.phi)).collect();
    let refs: Vec<Option<&DenseMatrix<T>>> = mats.iter().map(Some).collect();
    tucker(&weighted, &refs)
}

/// Values of the expansion on the node grid, or at `points` (one list per
/// direction) when given.
pub fn inverse_transform<T: Scalar>(
    bases: &[HermiteBasis],
    coeffs: &Tensor<T>,
    points: Option<&[Vec<f64>]>,
) -> Result<Tensor<T>> {
    check_shape(bases, coeffs, "coefficients")?;
    let mats: Vec<DenseMatrix<T>> = match points {
        None => bases.iter().map(|b| convert(&b.psi())).collect(),
        Some(pts) => {
            if pts.len() != bases.len() {
                return Err(Error::Shape {
                    direction: None,
                    message: format!("{} point lists for {} directions", pts.len(), bases.len()),
                });
            }
            if let Some(mu) = pts.iter().position(|p| p.is_empty()) {
                return Err(Error::shape_at(mu + 1, "empty list of evaluation points"));
            }
            bases.iter().zip(pts).map(|(b, p)| convert(&b.eval_matrix(p))).collect()
        }
    };
    let refs: Vec<Option<&DenseMatrix<T>>> = mats.iter().map(Some).collect();
    tucker(coeffs, &refs)
}

/// `values` multiplied by the tensor-product modified weights.
pub fn apply_weights<T: Scalar>(bases: &[HermiteBasis], values: &Tensor<T>) -> Tensor<T> {
    let dims = values.shape().dims().to_vec();
    let mut out = values.clone();
    let mut index = vec![0usize; dims.len()];
    for (off, v) in out.data_mut().iter_mut().enumerate() {
        let mut rest = off;
        for (mu, &n) in dims.iter().enumerate() {
            index[mu] = rest % n;
            rest /= n;
        }
        let w: f64 = index.iter().zip(bases).map(|(&i, b)| b.weights[i]).product();
        *v = v.scale(<T::Real as Scalar>::from_f64(w));
    }
    out
}

/// Tensor of harmonic-oscillator eigenvalues `Σ_μ (i_μ + 1/2)`.
pub fn harmonic_eigenvalues(ks: &[usize]) -> Result<Tensor<f64>> {
    let shape = Shape::new(ks.to_vec())?;
    Ok(Tensor::from_fn(shape, |i| i.iter().map(|&q| q as f64 + 0.5).sum()))
}

/// Galerkin matrix of multiplication by `x`.
pub fn position_operator(basis: &HermiteBasis) -> Result<DenseMatrix<f64>> {
    if basis.k < 2 {
        return Err(Error::Config("position operator needs k ≥ 2".into()));
    }
    galerkin(&basis.phi, &basis.nodes, &basis.weights, |x| x)
}

/// Galerkin matrix of multiplication by `V`, with the basis' own quadrature.
pub fn potential_operator(basis: &HermiteBasis, v: impl Fn(f64) -> f64) -> Result<DenseMatrix<f64>> {
    galerkin(&basis.phi, &basis.nodes, &basis.weights, v)
}

/// As [`potential_operator`] but integrated with `2k` nodes. Intended for
/// verification.
pub fn potential_operator_enlarged(k: usize, v: impl Fn(f64) -> f64) -> Result<DenseMatrix<f64>> {
    let (nodes, weights) = gauss_hermite(2 * k)?;
    let phi = eval_rows(k, &nodes);
    galerkin(&phi, &nodes, &weights, v)
}

/// Factor of `ψ' = −iHψ` in coefficient space for `H = −½∂² + V`:
/// `−i[diag(i + ½) + P(V − x²/2)]`.
pub fn hamiltonian_factor(basis: &HermiteBasis, v: impl Fn(f64) -> f64) -> Result<DenseMatrix<Complex64>> {
    let p = potential_operator(basis, |x| v(x) - 0.5 * x * x)?;
    let mi = Complex64::new(0.0, -1.0);
    Ok(DenseMatrix::from_fn(basis.k, basis.k, |i, j| {
        let d = if i == j { i as f64 + 0.5 } else { 0.0 };
        mi * (d + p.get(i, j))
    }))
}
