//! Small dense linear algebra and finite-difference helpers.
//!
//! Problem sizes here are at most a few dozen, so everything is plain
//! row-major `Vec<f64>` storage with fixed-order compensated reductions.
//! Results do not depend on thread count or evaluation order.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence, in iteration order.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<KahanSum>().value()
}

/// Compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    sum(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                out[(i, j)] = sum((0..self.cols).map(|k| self[(i, k)] * other[(k, j)]));
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> Self {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                s[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        s
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors a symmetric matrix, rejecting any pivot `<= tol`.
    pub fn factor_with_tol(a: &DenseMatrix, tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut acc = KahanSum::new();
            acc.add(a[(j, j)]);
            for k in 0..j {
                acc.add(-l[(j, k)] * l[(j, k)]);
            }
            let pivot = acc.value();
            if !pivot.is_finite() || pivot <= tol {
                return Err(Error::NotPositiveDefinite { row: j, pivot });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut acc = KahanSum::new();
                acc.add(a[(i, j)]);
                for k in 0..j {
                    acc.add(-l[(i, k)] * l[(j, k)]);
                }
                l[(i, j)] = acc.value() / d;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        Self::factor_with_tol(a, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = KahanSum::new();
            acc.add(b[i]);
            for k in 0..i {
                acc.add(-self.l[(i, k)] * y[k]);
            }
            y[i] = acc.value() / self.l[(i, i)];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = KahanSum::new();
            acc.add(y[i]);
            for k in i + 1..n {
                acc.add(-self.l[(k, i)] * x[k]);
            }
            x[i] = acc.value() / self.l[(i, i)];
        }
        Ok(x)
    }

    /// Explicit inverse; used only for reporting, never inside a solve.
    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Partial-pivot LU factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let threshold = 1e-14 * a.norm_inf();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !pivot.is_finite() || pivot <= threshold || pivot == 0.0 {
                return Err(Error::SingularMatrix { col: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            for i in k + 1..n {
                let factor = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = KahanSum::new();
            acc.add(y[i]);
            for k in 0..i {
                acc.add(-self.lu[(i, k)] * y[k]);
            }
            y[i] = acc.value();
        }
        for i in (0..n).rev() {
            let mut acc = KahanSum::new();
            acc.add(y[i]);
            for k in i + 1..n {
                acc.add(-self.lu[(i, k)] * y[k]);
            }
            y[i] = acc.value() / self.lu[(i, i)];
        }
        Ok(y)
    }
}

fn check_system(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: a.cols(),
        });
    }
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Solves `A x = b` for symmetric positive definite `A` by Cholesky.
///
/// A `NotPositiveDefinite` error is the signal to fall back on
/// [`solve_general`].
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_system(a, b)?;
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    if a.asymmetry() > 1e-12 * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (asymmetry {:e})",
            a.asymmetry()
        )));
    }
    Cholesky::factor(a)?.solve(b)
}

/// Solves `A x = b` by partial-pivot LU.
pub fn solve_general(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_system(a, b)?;
    Lu::factor(a)?.solve(b)
}

/// True iff the symmetric part of `a` admits a Cholesky factorization with
/// every pivot above `tol`.
pub fn is_spd(a: &DenseMatrix, tol: f64) -> bool {
    a.is_square() && Cholesky::factor_with_tol(&a.symmetrized(), tol).is_ok()
}

/// Central second-order finite-difference scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdScheme {
    /// Relative step factor: `h_i = step * max(1, |x_i|)`.
    pub step: f64,
}

impl FdScheme {
    /// `cbrt(eps)`, suited to differentiating quantities that already
    /// carry first derivatives.
    pub fn cbrt_eps() -> Self {
        Self {
            step: f64::EPSILON.cbrt(),
        }
    }

    /// `sqrt(eps)`.
    pub fn sqrt_eps() -> Self {
        Self {
            step: f64::EPSILON.sqrt(),
        }
    }

    pub fn with_step(step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidInput(format!(
                "finite-difference step {step} must be > 0"
            )));
        }
        Ok(Self { step })
    }

    #[inline]
    pub fn step_at(&self, x: f64) -> f64 {
        self.step * x.abs().max(1.0)
    }
}

impl Default for FdScheme {
    fn default() -> Self {
        Self::cbrt_eps()
    }
}

/// Central-difference Jacobian with entry `(i, j) = ∂field_j / ∂x_i`.
pub fn fd_jacobian<F>(field: F, x: &[f64], scheme: FdScheme) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = x.len();
    let mut probe = x.to_vec();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut width = None;
    for i in 0..n {
        let h = scheme.step_at(x[i]);
        probe[i] = x[i] + h;
        let plus = field(&probe)?;
        probe[i] = x[i] - h;
        let minus = field(&probe)?;
        probe[i] = x[i];
        let m = *width.get_or_insert(plus.len());
        if plus.len() != m || minus.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: plus.len().max(minus.len()),
            });
        }
        let row: Vec<f64> = plus.iter().zip(&minus).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("fd_jacobian"));
        }
        rows.push(row);
    }
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    DenseMatrix::from_rows(&rows)
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, x: &[f64], scheme: FdScheme) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = scheme.step_at(x[i]);
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        let g = (plus - minus) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFiniteValue("fd_gradient"));
        }
        grad.push(g);
    }
    Ok(grad)
}
