//! Dense vectors and row-major matrices.

use std::ops::{Deref, DerefMut};

use crate::error::{check_dim, Error, Result};
use crate::Scalar;

/// A dense real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealVec<S>(Vec<S>);

impl<S: Scalar> RealVec<S> {
    /// Wraps `data`, rejecting empty or non-finite input.
    pub fn new(data: Vec<S>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("vector"));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector entries".into()));
        }
        Ok(Self(data))
    }

    /// Wraps `data` without validation. Callers guarantee the invariants.
    #[inline]
    pub fn from_vec(data: Vec<S>) -> Self {
        Self(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![S::zero(); n])
    }

    pub fn from_slice(data: &[S]) -> Self {
        Self(data.to_vec())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<S> {
        self.0
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &[S]) -> S {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> S {
        norm(&self.0)
    }

    pub fn scaled(&self, k: S) -> Self {
        Self(self.0.iter().map(|&x| x * k).collect())
    }

    /// Unit-norm copy. Errors on a zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n <= S::zero() || !n.is_finite() {
            return Err(Error::ZeroNorm("normalize"));
        }
        Ok(self.scaled(S::one() / n))
    }

    pub fn cast<T: Scalar>(&self) -> RealVec<T> {
        RealVec(self.0.iter().map(|&x| T::of(x.to_f64_lossy())).collect())
    }
}

impl<S> Deref for RealVec<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S> DerefMut for RealVec<S> {
    fn deref_mut(&mut self) -> &mut [S] {
        &mut self.0
    }
}

impl<S> AsRef<[S]> for RealVec<S> {
    fn as_ref(&self) -> &[S] {
        &self.0
    }
}

impl<S> From<RealVec<S>> for Vec<S> {
    fn from(v: RealVec<S>) -> Vec<S> {
        v.0
    }
}

impl<S: Scalar> FromIterator<S> for RealVec<S> {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> RealMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("matrix"));
        }
        check_dim("matrix data", rows * cols, data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn data(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out = self * x`
    pub fn matvec_into(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), x);
        }
    }

    pub fn matvec(&self, x: &[S]) -> Result<RealVec<S>> {
        check_dim("matvec input", self.cols, x.len())?;
        let mut out = vec![S::zero(); self.rows];
        self.matvec_into(x, &mut out);
        Ok(RealVec::from_vec(out))
    }

    /// `out += selfᵀ * y`
    pub fn matvec_t_acc(&self, y: &[S], out: &mut [S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &yr) in y.iter().enumerate() {
            if yr != S::zero() {
                axpy(yr, self.row(r), out);
            }
        }
    }

    /// `self += y xᵀ`
    pub fn add_outer(&mut self, y: &[S], x: &[S]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        let cols = self.cols;
        for (r, &yr) in y.iter().enumerate() {
            if yr != S::zero() {
                axpy(yr, x, &mut self.data[r * cols..(r + 1) * cols]);
            }
        }
    }

    pub fn cast<T: Scalar>(&self) -> RealMat<T> {
        RealMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| T::of(x.to_f64_lossy())).collect(),
        }
    }
}
