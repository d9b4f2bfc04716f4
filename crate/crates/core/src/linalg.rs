//! Small dense matrices: products, LU solves, and the matrix exponential by
//! scaling and squaring with diagonal Padé approximants.

use num_complex::Complex;
use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{RealScalar, Scalar};

/// Column-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i + i * n] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Row-major literal, mostly for tests. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i + j * self.rows] = value;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, value: T) {
        self.data[i + j * self.rows] += value;
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn map<S: Scalar>(&self, f: impl Fn(T) -> S) -> DenseMatrix<S> {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, alpha: T) -> Self {
        self.map(|x| x * alpha)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::shape(format!(
                "{}x{} and {}x{} operands",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        if self.rows == 0 || other.cols == 0 {
            return Ok(out);
        }
        // SAFETY: all three operands are dense column-major buffers of the
        // stated sizes.
        unsafe {
            T::gemm(
                self.rows,
                self.cols,
                other.cols,
                self.data.as_ptr(),
                1,
                self.rows as isize,
                other.data.as_ptr(),
                1,
                other.rows as isize,
                out.data.as_mut_ptr(),
                1,
                self.rows as isize,
            );
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.rows, other.cols);
        Self::from_fn(self.rows * p, self.cols * q, |i, j| {
            self.get(i / p, j / q) * other.get(i % p, j % q)
        })
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T::Real {
        let mut best = T::Real::zero();
        for j in 0..self.cols {
            let mut s = T::Real::zero();
            for &x in self.column(j) {
                s += x.modulus();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn max_abs(&self) -> T::Real {
        self.data
            .iter()
            .map(|&x| x.modulus())
            .fold(T::Real::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn frobenius_norm(&self) -> T::Real {
        let mut s = T::Real::zero();
        for &x in &self.data {
            s += x.abs_sqr();
        }
        Float::sqrt(s)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|&x| Scalar::is_finite(x))
    }

    /// Solves `A·X = B` by LU factorization with partial pivoting.
    pub fn solve(&self, b: &Self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::shape(format!(
                "solve needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if b.rows != self.rows {
            return Err(Error::shape(format!(
                "right-hand side has {} rows, matrix has {}",
                b.rows, self.rows
            )));
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = b.clone();
        let scale = self.max_abs();
        let tiny = scale * <T::Real as Float>::epsilon() * <T::Real as Scalar>::from_f64(1e-3);

        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu.get(i, k).modulus()))
                .fold((k, T::Real::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= tiny || pmax == T::Real::zero() {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k + j * n, p + j * n);
                }
                for j in 0..x.cols {
                    x.data.swap(k + j * n, p + j * n);
                }
            }
            let pivot = lu.get(k, k);
            for i in k + 1..n {
                let f = lu.get(i, k) / pivot;
                lu.set(i, k, f);
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = lu.get(k, j);
                    lu.add_to(i, j, -f * v);
                }
                for j in 0..x.cols {
                    let v = x.get(k, j);
                    x.add_to(i, j, -f * v);
                }
            }
        }
        for j in 0..x.cols {
            for k in (0..n).rev() {
                let mut s = x.get(k, j);
                for c in k + 1..n {
                    s -= lu.get(k, c) * x.get(c, j);
                }
                x.set(k, j, s / lu.get(k, k));
            }
        }
        Ok(x)
    }

    /// Matrix exponential `e^A`.
    ///
    /// Scaling and squaring with a diagonal Padé approximant of degree
    /// 3, 5, 7, 9 or 13 picked from the exact one-norm against the double
    /// precision backward-error bounds θ_m.
    pub fn exp(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::shape(format!(
                "matrix exponential needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !self.is_finite() {
            return Err(Error::InvalidInput(
                "matrix exponential of a matrix with non-finite entries".into(),
            ));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(self.clone());
        }
        let norm = self.one_norm().as_f64();

        for (m, theta) in [(3, THETA_3), (5, THETA_5), (7, THETA_7), (9, THETA_9)] {
            if norm <= theta {
                return pade(self, m);
            }
        }

        let s = if norm > THETA_13 {
            (norm / THETA_13).log2().ceil().to_i32().unwrap_or(0).max(0)
        } else {
            0
        };
        let scaled = self.scale(T::from_f64(0.5f64.powi(s)));
        let mut r = pade13(&scaled)?;
        for _ in 0..s {
            r = r.matmul(&r)?;
        }
        Ok(r)
    }
}

impl<R: RealScalar> DenseMatrix<R> {
    pub fn to_complex(&self) -> DenseMatrix<Complex<R>>
    where
        Complex<R>: Scalar,
    {
        self.map(|x| Complex::new(x, R::zero()))
    }
}

/// `matmul` as a free function.
pub fn matmul<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.matmul(b)
}

pub fn solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.solve(b)
}

pub fn matexp<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.exp()
}

pub fn one_norm<T: Scalar>(a: &DenseMatrix<T>) -> T::Real {
    a.one_norm()
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `Σ c_j P_j` over matching powers.
fn combine<T: Scalar>(n: usize, terms: &[(f64, &DenseMatrix<T>)]) -> DenseMatrix<T> {
    let mut out = DenseMatrix::zeros(n, n);
    for &(c, p) in terms {
        let c = T::from_f64(c);
        for (o, &x) in out.data.iter_mut().zip(&p.data) {
            *o += c * x;
        }
    }
    out
}

/// Padé degree 3..9: `U = A Σ b_{2j+1} A^{2j}`, `V = Σ b_{2j} A^{2j}`.
fn pade<T: Scalar>(a: &DenseMatrix<T>, m: usize) -> Result<DenseMatrix<T>> {
    let b: &[f64] = match m {
        3 => &PADE_3,
        5 => &PADE_5,
        7 => &PADE_7,
        9 => &PADE_9,
        _ => unreachable!("unsupported Padé degree {m}"),
    };
    let n = a.rows;
    let eye = DenseMatrix::identity(n);
    let a2 = a.matmul(a)?;
    let mut powers = vec![eye, a2.clone()];
    for _ in 2..=m / 2 {
        let next = powers.last().unwrap().matmul(&a2)?;
        powers.push(next);
    }
    let odd: Vec<(f64, &DenseMatrix<T>)> = (0..=m / 2).map(|j| (b[2 * j + 1], &powers[j])).collect();
    let even: Vec<(f64, &DenseMatrix<T>)> = (0..=m / 2).map(|j| (b[2 * j], &powers[j])).collect();
    let u = a.matmul(&combine(n, &odd))?;
    let v = combine(n, &even);
    v.sub(&u)?.solve(&v.add(&u)?)
}

fn pade13<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let b = &PADE_13;
    let n = a.rows;
    let eye = DenseMatrix::identity(n);
    let a2 = a.matmul(a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;
    let inner_u = a6.matmul(&combine(n, &[(b[13], &a6), (b[11], &a4), (b[9], &a2)]))?;
    let u = a.matmul(&inner_u.add(&combine(
        n,
        &[(b[7], &a6), (b[5], &a4), (b[3], &a2), (b[1], &eye)],
    ))?)?;
    let inner_v = a6.matmul(&combine(n, &[(b[12], &a6), (b[10], &a4), (b[8], &a2)]))?;
    let v = inner_v.add(&combine(
        n,
        &[(b[6], &a6), (b[4], &a4), (b[2], &a2), (b[0], &eye)],
    ))?;
    v.sub(&u)?.solve(&v.add(&u)?)
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// sub-diagonal `off` (`off.len() == diag.len() - 1`), sorted ascending.
///
/// Implicit QL iteration with Wilkinson shifts.
pub fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::shape(format!(
            "{} off-diagonal entries for a {}x{} tridiagonal matrix",
            off.len(),
            n,
            n
        )));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence {
                    estimate: e[l].abs(),
                    substeps: iter,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}
