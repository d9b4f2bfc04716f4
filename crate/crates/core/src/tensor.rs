//! Dense order-`d` tensors in column-major layout, μ-mode products and the
//! Tucker operator.
//!
//! Directions `μ` are numbered from 1 to `d`, in keeping with the usual
//! notation `U ×_μ L`; element indices are 0-based. Entry `(i_1, …, i_d)` is
//! stored at `i_1 + n_1 i_2 + n_1 n_2 i_3 + …`.
//!
//! A μ-mode product never permutes the tensor. With `left = n_1⋯n_{μ-1}` and
//! `right = n_{μ+1}⋯n_d`, the stored array is viewed as `right` consecutive
//! slabs, each an `n_μ × left` matrix with row stride `left`, and every slab
//! is multiplied by `L` in place of the global unfolding. For `μ = 1` the
//! slabs degenerate to columns and the whole product is a single
//! `n_1 × right` multiplication.

use std::cell::Cell;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{RealScalar, Scalar};
use num_complex::Complex;
use num_traits::Zero;

/// Extents `(n_1, …, n_d)` of a tensor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::shape("a shape needs at least one direction"));
        }
        if let Some(mu) = dims.iter().position(|&n| n == 0) {
            return Err(Error::shape_at(mu + 1, "extent must be positive"));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::shape("total size overflows usize"))?;
        Ok(Shape { dims })
    }

    pub fn cube(n: usize, d: usize) -> Result<Self> {
        Shape::new(vec![n; d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries `N`.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Extent `n_μ` of direction `mu` (1-based).
    pub fn extent(&self, mu: usize) -> Result<usize> {
        self.check_direction(mu)?;
        Ok(self.dims[mu - 1])
    }

    pub(crate) fn check_direction(&self, mu: usize) -> Result<()> {
        if mu == 0 || mu > self.dims.len() {
            Err(Error::InvalidDirection {
                mu,
                order: self.dims.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Linear offset of a 0-based multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (&i, &n) in index.iter().zip(&self.dims) {
            debug_assert!(i < n);
            off += i * stride;
            stride *= n;
        }
        off
    }

    /// Inverse of [`Shape::offset`].
    pub fn multi_index(&self, mut offset: usize, index: &mut [usize]) {
        for (slot, &n) in index.iter_mut().zip(&self.dims) {
            *slot = offset % n;
            offset /= n;
        }
    }

    fn with_extent(&self, mu: usize, m: usize) -> Shape {
        let mut dims = self.dims.clone();
        dims[mu - 1] = m;
        Shape { dims }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Number of μ-fibers of a tensor of the given shape, `N / n_μ`.
pub fn mu_fiber_count(shape: &Shape, mu: usize) -> Result<usize> {
    Ok(shape.len() / shape.extent(mu)?)
}

/// Dense tensor with column-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self {
        let data = vec![T::zero(); shape.len()];
        Tensor { shape, data }
    }

    pub fn filled(shape: Shape, value: T) -> Self {
        let data = vec![value; shape.len()];
        Tensor { shape, data }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::shape(format!(
                "data has {} entries but shape {} needs {}",
                data.len(),
                shape,
                shape.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    /// Builds a tensor from a function of the 0-based multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let mut index = vec![0; shape.order()];
        let data = (0..shape.len())
            .map(|off| {
                shape.multi_index(off, &mut index);
                f(&index)
            })
            .collect();
        Tensor { shape, data }
    }

    /// Samples `f` on the Cartesian grid spanned by the per-direction coordinates.
    pub fn from_grid<R: Copy>(axes: &[&[R]], mut f: impl FnMut(&[R]) -> T) -> Result<Self> {
        let shape = Shape::new(axes.iter().map(|a| a.len()).collect::<Vec<_>>())?;
        let mut point: Vec<R> = axes.iter().map(|a| a[0]).collect();
        Ok(Tensor::from_fn(shape, |idx| {
            for (mu, &i) in idx.iter().enumerate() {
                point[mu] = axes[mu][i];
            }
            f(&point)
        }))
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> T {
        self.data[self.shape.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let off = self.shape.offset(index);
        self.data[off] = value;
    }

    pub fn map<S: Scalar>(&self, f: impl Fn(T) -> S) -> Tensor<S> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        self.map(|x| x * alpha)
    }

    /// `self ← self + alpha·x`.
    pub fn axpy(&mut self, alpha: T, x: &Tensor<T>) -> Result<()> {
        self.check_same_shape(x)?;
        for (y, &xi) in self.data.iter_mut().zip(&x.data) {
            *y += alpha * xi;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Inner product `⟨self, other⟩ = Σ conj(self_i)·other_i`.
    pub fn dot(&self, other: &Tensor<T>) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.conj() * b)
            .sum())
    }

    pub fn norm_two(&self) -> T::Real {
        let mut sum = T::Real::zero();
        for &x in &self.data {
            sum += x.abs_sqr();
        }
        num_traits::Float::sqrt(sum)
    }

    pub fn norm_max(&self) -> T::Real {
        self.data
            .iter()
            .map(|&x| x.modulus())
            .fold(T::Real::zero(), |a, b| if b > a { b } else { a })
    }

    /// Norm of the requested kind, evaluated in double precision.
    pub fn norm(&self, kind: &NormKind) -> Result<f64> {
        match kind {
            NormKind::Max => Ok(self.norm_max().as_f64()),
            NormKind::Two => Ok(self.norm_two().as_f64()),
            NormKind::WeightedTwo(weights) => {
                if weights.len() != self.shape.order() {
                    return Err(Error::shape(format!(
                        "{} weight vectors for an order-{} tensor",
                        weights.len(),
                        self.shape.order()
                    )));
                }
                for (mu, (w, &n)) in weights.iter().zip(self.shape.dims()).enumerate() {
                    if w.len() != n {
                        return Err(Error::shape_at(
                            mu + 1,
                            format!("{} weights for extent {}", w.len(), n),
                        ));
                    }
                }
                let mut index = vec![0; self.shape.order()];
                let mut sum = 0.0;
                for (off, &x) in self.data.iter().enumerate() {
                    self.shape.multi_index(off, &mut index);
                    let w: f64 = index.iter().zip(weights).map(|(&i, w)| w[i]).product();
                    sum += w * x.abs_sqr().as_f64();
                }
                Ok(sum.sqrt())
            }
        }
    }

    fn check_same_shape(&self, other: &Tensor<T>) -> Result<()> {
        if self.shape != other.shape {
            Err(Error::shape(format!(
                "shapes {} and {} differ",
                self.shape, other.shape
            )))
        } else {
            Ok(())
        }
    }
}

impl<R: RealScalar> Tensor<R> {
    pub fn to_complex(&self) -> Tensor<Complex<R>>
    where
        Complex<R>: Scalar,
    {
        self.map(|x| Complex::new(x, R::zero()))
    }
}

/// Norm used for error reporting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Max,
    Two,
    /// `sqrt(Σ w(i)|U(i)|²)` with `w(i) = Π_μ w_μ(i_μ)`.
    WeightedTwo(Vec<Vec<f64>>),
}

impl NormKind {
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::Max => "max",
            NormKind::Two => "two",
            NormKind::WeightedTwo(_) => "weighted_two",
        }
    }
}

thread_local! {
    static MULTIPLY_ADDS: Cell<u64> = const { Cell::new(0) };
}

/// Multiply-adds issued by μ-mode products on the current thread.
pub fn multiply_add_count() -> u64 {
    MULTIPLY_ADDS.with(|c| c.get())
}

pub fn reset_multiply_add_count() {
    MULTIPLY_ADDS.with(|c| c.set(0));
}

fn record_multiply_adds(n: u64) {
    MULTIPLY_ADDS.with(|c| c.set(c.get() + n));
}

/// Below this many multiply-adds a product runs on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 18;
/// Column block handed to one worker. Fixed so results do not depend on the
/// size of the thread pool.
const COLUMN_BLOCK: usize = 512;

#[derive(Clone, Copy)]
struct SendPtr<T>(*mut T);
unsafe impl<T> Send for SendPtr<T> {}
unsafe impl<T> Sync for SendPtr<T> {}

/// `dst ← src ×_μ L` on raw column-major storage. `dst` must hold
/// `len(src) / n_μ · m` entries.
fn apply_mode<T: Scalar>(src: &[T], dims: &[usize], l: &DenseMatrix<T>, mu: usize, dst: &mut [T]) {
    let n_mu = dims[mu - 1];
    let m = l.rows();
    let left: usize = dims[..mu - 1].iter().product();
    let right: usize = dims[mu..].iter().product();
    debug_assert_eq!(l.cols(), n_mu);
    debug_assert_eq!(src.len(), left * n_mu * right);
    debug_assert_eq!(dst.len(), left * m * right);

    record_multiply_adds((m * n_mu * left * right) as u64);

    // Each task multiplies L (m×n_μ) onto a block of `cols` columns.
    // (base_src, base_dst, cols, rs_b, cs_b, rs_c, cs_c)
    let a_ptr = l.data().as_ptr() as usize;
    let (rsa, csa) = (1isize, m as isize);
    let src_ptr = src.as_ptr() as usize;
    let dst_ptr = SendPtr(dst.as_mut_ptr());

    let run = |src_off: usize, dst_off: usize, cols: usize, rsb: usize, csb: usize, rsc: usize, csc: usize| {
        let dst = dst_ptr;
        // SAFETY: every task writes a disjoint set of output columns and the
        // strides stay inside `src`/`dst` by construction of the offsets.
        unsafe {
            T::gemm(
                m,
                n_mu,
                cols,
                a_ptr as *const T,
                rsa,
                csa,
                (src_ptr as *const T).add(src_off),
                rsb as isize,
                csb as isize,
                dst.0.add(dst_off),
                rsc as isize,
                csc as isize,
            );
        }
    };

    let parallel = m * n_mu * left * right >= PARALLEL_THRESHOLD;

    if left == 1 {
        // One n_μ × right multiplication, columns contiguous.
        let blocks = right.div_ceil(COLUMN_BLOCK);
        let task = |blk: usize| {
            let c0 = blk * COLUMN_BLOCK;
            let cols = COLUMN_BLOCK.min(right - c0);
            run(c0 * n_mu, c0 * m, cols, 1, n_mu, 1, m);
        };
        if parallel && blocks > 1 {
            (0..blocks).into_par_iter().for_each(task);
        } else {
            (0..blocks).for_each(task);
        }
    } else {
        // `right` slabs, each n_μ × left with row stride `left`.
        let blocks_per_slab = left.div_ceil(COLUMN_BLOCK);
        let task = |t: usize| {
            let b = t / blocks_per_slab;
            let c0 = (t % blocks_per_slab) * COLUMN_BLOCK;
            let cols = COLUMN_BLOCK.min(left - c0);
            run(b * n_mu * left + c0, b * m * left + c0, cols, left, 1, left, 1);
        };
        let tasks = right * blocks_per_slab;
        if parallel && tasks > 1 {
            (0..tasks).into_par_iter().for_each(task);
        } else {
            (0..tasks).for_each(task);
        }
    }
}

fn check_factor<T: Scalar>(shape: &Shape, l: &DenseMatrix<T>, mu: usize) -> Result<()> {
    let n_mu = shape.extent(mu)?;
    if l.cols() != n_mu {
        return Err(Error::shape_at(
            mu,
            format!("matrix has {} columns but n_{} = {}", l.cols(), mu, n_mu),
        ));
    }
    Ok(())
}

/// `U ×_μ L`: multiplies `L` (`m × n_μ`) onto every μ-fiber of `U`.
pub fn mu_mode_product<T: Scalar>(u: &Tensor<T>, l: &DenseMatrix<T>, mu: usize) -> Result<Tensor<T>> {
    check_factor(&u.shape, l, mu)?;
    let shape = u.shape.with_extent(mu, l.rows());
    let mut data = vec![T::zero(); shape.len()];
    apply_mode(&u.data, u.shape.dims(), l, mu, &mut data);
    Ok(Tensor { shape, data })
}

/// Tucker operator `U ×_1 L_1 ×_2 ⋯ ×_d L_d`, skipping absent slots.
///
/// Products are applied in ascending direction order, reusing two buffers.
pub fn tucker<T: Scalar>(u: &Tensor<T>, mats: &[Option<&DenseMatrix<T>>]) -> Result<Tensor<T>> {
    if mats.len() != u.shape.order() {
        return Err(Error::shape(format!(
            "{} matrix slots for an order-{} tensor",
            mats.len(),
            u.shape.order()
        )));
    }
    for (i, l) in mats.iter().enumerate() {
        if let Some(l) = l {
            check_factor(&u.shape, l, i + 1)?;
        }
    }

    let mut current: Option<Tensor<T>> = None;
    let mut spare: Vec<T> = Vec::new();
    for (i, l) in mats.iter().enumerate() {
        let Some(l) = l else { continue };
        let mu = i + 1;
        let src = current.as_ref().unwrap_or(u);
        let shape = src.shape.with_extent(mu, l.rows());
        // Reuse the buffer released two products ago; beta = 0 overwrites it.
        spare.resize(shape.len(), T::zero());
        apply_mode(&src.data, src.shape.dims(), l, mu, &mut spare);
        let next = Tensor {
            shape,
            data: std::mem::take(&mut spare),
        };
        if let Some(prev) = current.replace(next) {
            spare = prev.data;
        }
    }
    Ok(current.unwrap_or_else(|| u.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_tensor(rng: &mut StdRng, dims: &[usize]) -> Tensor<f64> {
        let shape = Shape::new(dims.to_vec()).unwrap();
        let n = shape.len();
        Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn random_matrix(rng: &mut StdRng, r: usize, c: usize) -> DenseMatrix<f64> {
        DenseMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    /// Direct evaluation of S(…,i,…) = Σ_j L_ij U(…,j,…).
    fn naive_mode_product(u: &Tensor<f64>, l: &DenseMatrix<f64>, mu: usize) -> Tensor<f64> {
        let mut dims = u.shape().dims().to_vec();
        dims[mu - 1] = l.rows();
        let shape = Shape::new(dims).unwrap();
        Tensor::from_fn(shape, |idx| {
            let mut src = idx.to_vec();
            let mut acc = 0.0;
            for j in 0..l.cols() {
                src[mu - 1] = j;
                acc += l.get(idx[mu - 1], j) * u.get(&src);
            }
            acc
        })
    }

    fn rel(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        a.sub(b).unwrap().norm_two() / b.norm_two()
    }

    #[test]
    fn fiber_counts() {
        let s = Shape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(mu_fiber_count(&s, 2).unwrap(), 8);
        assert_eq!(mu_fiber_count(&Shape::new(vec![5]).unwrap(), 1).unwrap(), 1);
        assert_eq!(mu_fiber_count(&Shape::cube(40, 3).unwrap(), 3).unwrap(), 1600);
        assert_eq!(
            mu_fiber_count(&s, 4),
            Err(Error::InvalidDirection { mu: 4, order: 3 })
        );
        assert!(mu_fiber_count(&s, 0).is_err());
    }

    #[test]
    fn shape_rejects_zero_extent() {
        assert!(Shape::new(vec![3, 0]).is_err());
        assert!(Shape::new(Vec::new()).is_err());
    }

    #[test]
    fn identity_product_is_bitwise_identity() {
        let mut rng = StdRng::seed_from_u64(1);
        let u = random_tensor(&mut rng, &[3, 4, 5]);
        for mu in 1..=3 {
            let eye = DenseMatrix::identity(u.shape().dims()[mu - 1]);
            assert_eq!(mu_mode_product(&u, &eye, mu).unwrap(), u);
        }
    }

    #[test]
    fn row_swap_on_matrix() {
        let u = Tensor::from_vec(Shape::new(vec![2, 2]).unwrap(), vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let l = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let s = mu_mode_product(&u, &l, 1).unwrap();
        assert_eq!(s.data(), &[3.0, 1.0, 4.0, 2.0]);
    }

    #[test]
    fn product_matches_definition_2x3x2() {
        let mut rng = StdRng::seed_from_u64(7);
        let u = random_tensor(&mut rng, &[2, 3, 2]);
        let l = random_matrix(&mut rng, 3, 3);
        let s = mu_mode_product(&u, &l, 2).unwrap();
        assert!(rel(&s, &naive_mode_product(&u, &l, 2)) <= 1e-14);
    }

    #[test]
    fn rectangular_factor_changes_extent() {
        let mut rng = StdRng::seed_from_u64(8);
        let u = random_tensor(&mut rng, &[3, 4, 2]);
        let l = random_matrix(&mut rng, 6, 4);
        let s = mu_mode_product(&u, &l, 2).unwrap();
        assert_eq!(s.shape().dims(), &[3, 6, 2]);
        assert!(rel(&s, &naive_mode_product(&u, &l, 2)) <= 1e-14);
    }

    #[test]
    fn product_errors() {
        let u = Tensor::<f64>::zeros(Shape::new(vec![2, 3]).unwrap());
        let l = DenseMatrix::<f64>::identity(2);
        assert!(matches!(
            mu_mode_product(&u, &l, 2),
            Err(Error::Shape { direction: Some(2), .. })
        ));
        assert!(matches!(
            mu_mode_product(&u, &l, 3),
            Err(Error::InvalidDirection { .. })
        ));
    }

    #[test]
    fn large_parallel_product_matches_serial_reference() {
        let mut rng = StdRng::seed_from_u64(11);
        let u = random_tensor(&mut rng, &[37, 41, 45]);
        for mu in 1..=3 {
            let n = u.shape().dims()[mu - 1];
            let l = random_matrix(&mut rng, n, n);
            let s = mu_mode_product(&u, &l, mu).unwrap();
            let again = mu_mode_product(&u, &l, mu).unwrap();
            assert_eq!(s, again, "non-deterministic result in direction {mu}");
            assert!(rel(&s, &naive_mode_product(&u, &l, mu)) <= 1e-13);
        }
    }

    #[test]
    fn complex_product_matches_definition() {
        let mut rng = StdRng::seed_from_u64(3);
        let shape = Shape::new(vec![3, 2, 4]).unwrap();
        let u = Tensor::from_fn(shape, |_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let l = DenseMatrix::from_fn(4, 4, |_, _| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let s = mu_mode_product(&u, &l, 3).unwrap();
        let expect = Tensor::from_fn(s.shape().clone(), |idx| {
            let mut src = idx.to_vec();
            (0..4)
                .map(|j| {
                    src[2] = j;
                    l.get(idx[2], j) * u.get(&src)
                })
                .sum()
        });
        assert!(s.sub(&expect).unwrap().norm_two() <= 1e-14 * expect.norm_two());
    }

    #[test]
    fn single_precision_product() {
        let u = Tensor::from_fn(Shape::new(vec![4, 3]).unwrap(), |i| (i[0] + 2 * i[1]) as f32);
        let l = DenseMatrix::<f32>::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.0 });
        let s = mu_mode_product(&u, &l, 2).unwrap();
        assert_eq!(s, u.scaled(2.0));
    }

    #[test]
    fn tucker_empty_and_two_dimensional() {
        let mut rng = StdRng::seed_from_u64(5);
        let u = random_tensor(&mut rng, &[3, 4]);
        assert_eq!(tucker(&u, &[None, None]).unwrap(), u);

        let l1 = random_matrix(&mut rng, 3, 3);
        let l2 = random_matrix(&mut rng, 4, 4);
        let t = tucker(&u, &[Some(&l1), Some(&l2)]).unwrap();
        // L_1 · U · L_2ᵀ with U viewed as a 3×4 column-major matrix.
        let um = DenseMatrix::from_col_major(3, 4, u.data().to_vec()).unwrap();
        let expect = l1.matmul(&um).unwrap().matmul(&l2.transpose()).unwrap();
        let got = DenseMatrix::from_col_major(3, 4, t.data().to_vec()).unwrap();
        assert!(got.sub(&expect).unwrap().max_abs() <= 1e-14);
    }

    #[test]
    fn tucker_matches_dense_kronecker_identity() {
        let mut rng = StdRng::seed_from_u64(9);
        let u = random_tensor(&mut rng, &[3, 3, 3]);
        let ls: Vec<_> = (0..3).map(|_| random_matrix(&mut rng, 3, 3)).collect();
        let t = tucker(&u, &[Some(&ls[0]), Some(&ls[1]), Some(&ls[2])]).unwrap();
        let big = ls[2].kron(&ls[1]).kron(&ls[0]);
        let vec_u = DenseMatrix::from_col_major(27, 1, u.data().to_vec()).unwrap();
        let expect = big.matmul(&vec_u).unwrap();
        let got = Tensor::from_vec(u.shape().clone(), expect.data().to_vec()).unwrap();
        assert!(rel(&t, &got) <= 1e-13);
    }

    #[test]
    fn tucker_reports_offending_direction() {
        let u = Tensor::<f64>::zeros(Shape::new(vec![2, 3, 4]).unwrap());
        let a = DenseMatrix::identity(2);
        let bad = DenseMatrix::identity(5);
        let err = tucker(&u, &[Some(&a), None, Some(&bad)]).unwrap_err();
        assert!(matches!(err, Error::Shape { direction: Some(3), .. }));
        assert!(tucker(&u, &[Some(&a)]).is_err());
    }

    #[test]
    fn norms() {
        let z = Tensor::<f64>::zeros(Shape::new(vec![2, 2]).unwrap());
        let w = NormKind::WeightedTwo(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        for kind in [NormKind::Max, NormKind::Two, w.clone()] {
            assert_eq!(z.norm(&kind).unwrap(), 0.0);
        }
        let single = Tensor::from_vec(Shape::new(vec![1]).unwrap(), vec![3.0]).unwrap();
        assert_eq!(single.norm(&NormKind::Max).unwrap(), 3.0);
        assert_eq!(single.norm(&NormKind::Two).unwrap(), 3.0);
        let ones = Tensor::filled(Shape::new(vec![2, 2]).unwrap(), 1.0);
        assert!((ones.norm(&w).unwrap() - 1.0).abs() < 1e-15);
        let bad = NormKind::WeightedTwo(vec![vec![1.0], vec![1.0, 1.0]]);
        assert!(matches!(ones.norm(&bad), Err(Error::Shape { direction: Some(1), .. })));
    }

    #[test]
    fn multiply_add_counter_tracks_products() {
        let u = Tensor::<f64>::zeros(Shape::new(vec![3, 4, 5]).unwrap());
        reset_multiply_add_count();
        let l = DenseMatrix::identity(4);
        mu_mode_product(&u, &l, 2).unwrap();
        assert_eq!(multiply_add_count(), 60 * 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
            prop::collection::vec(1usize..=4, 1..=4)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn agrees_with_definition(dims in dims_strategy(), seed in any::<u64>(), mu_pick in 0usize..4) {
                let mut rng = StdRng::seed_from_u64(seed);
                let u = random_tensor(&mut rng, &dims);
                let mu = mu_pick % dims.len() + 1;
                let n = dims[mu - 1];
                let l = random_matrix(&mut rng, n, n);
                let s = mu_mode_product(&u, &l, mu).unwrap();
                let expect = naive_mode_product(&u, &l, mu);
                let scale = l.frobenius_norm() * u.norm_two();
                prop_assert!(s.sub(&expect).unwrap().norm_two() <= 1e-14 * scale);
            }

            #[test]
            fn distinct_modes_commute(dims in prop::collection::vec(1usize..=5, 2..=4), seed in any::<u64>()) {
                let mut rng = StdRng::seed_from_u64(seed);
                let mut u = random_tensor(&mut rng, &dims);
                let un = u.norm_two();
                u = u.scaled(1.0 / un);
                let (mu, nu) = (1, dims.len());
                let mut l = random_matrix(&mut rng, dims[mu - 1], dims[mu - 1]);
                let mut k = random_matrix(&mut rng, dims[nu - 1], dims[nu - 1]);
                l = l.scale(1.0 / l.frobenius_norm());
                k = k.scale(1.0 / k.frobenius_norm());
                let a = mu_mode_product(&mu_mode_product(&u, &l, mu).unwrap(), &k, nu).unwrap();
                let b = mu_mode_product(&mu_mode_product(&u, &k, nu).unwrap(), &l, mu).unwrap();
                prop_assert!(a.sub(&b).unwrap().norm_two() <= 1e-13);
            }

            #[test]
            fn tucker_is_kronecker_matvec(dims in prop::collection::vec(1usize..=4, 1..=3), seed in any::<u64>()) {
                prop_assume!(dims.iter().product::<usize>() <= 64);
                let mut rng = StdRng::seed_from_u64(seed);
                let u = random_tensor(&mut rng, &dims);
                let ls: Vec<_> = dims.iter().map(|&n| random_matrix(&mut rng, n, n)).collect();
                let slots: Vec<_> = ls.iter().map(Some).collect();
                let t = tucker(&u, &slots).unwrap();
                let mut big = DenseMatrix::identity(1);
                for l in ls.iter().rev() {
                    big = big.kron(l);
                }
                let n = u.len();
                let v = big.matmul(&DenseMatrix::from_col_major(n, 1, u.data().to_vec()).unwrap()).unwrap();
                let expect = Tensor::from_vec(u.shape().clone(), v.data().to_vec()).unwrap();
                prop_assert!(t.sub(&expect).unwrap().norm_two() <= 1e-13 * expect.norm_two().max(1e-300));
            }
        }
    }
}
