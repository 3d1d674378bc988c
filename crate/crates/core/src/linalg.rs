//! Minimal dense matrix and 2-vector helpers.
//!
//! The networks and channel synthesis only need matrix-vector products,
//! rank-1 accumulation, and elementwise access, so a row-major `Vec`
//! container keeps the scalar-generic code free of heavyweight deps.

use crate::num::Real;
use num_complex::Complex;

/// Row-major dense matrix over a copyable element type.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Copy> Mat<E> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), rows * cols, "element count must match shape");
        Mat { rows, cols, data }
    }

    pub fn fill(rows: usize, cols: usize, value: E) -> Self {
        Mat { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<E> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, E> {
        self.data.iter()
    }

    pub fn map<F: Copy>(&self, mut f: impl FnMut(E) -> F) -> Mat<F> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&e| f(e)).collect(),
        }
    }
}

impl<E: Copy> std::ops::Index<(usize, usize)> for Mat<E> {
    type Output = E;
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E: Copy> std::ops::IndexMut<(usize, usize)> for Mat<E> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::fill(rows, cols, T::zero())
    }

    /// `y = A x` for an `rows x cols` matrix and a `cols` vector.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec input length");
        let mut y = vec![T::zero(); self.rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(x.iter()) {
                acc += *a * *b;
            }
            *yi = acc;
        }
        y
    }

    /// `y = A^T x` for an `rows x cols` matrix and a `rows` vector.
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows, "matvec_t input length");
        let mut y = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            let row = self.row(i);
            for (yj, a) in y.iter_mut().zip(row.iter()) {
                *yj += *a * xi;
            }
        }
        y
    }

    /// Rank-1 accumulation `A += u v^T`.
    pub fn add_outer(&mut self, u: &[T], v: &[T]) {
        assert_eq!(u.len(), self.rows, "outer product row length");
        assert_eq!(v.len(), self.cols, "outer product col length");
        for i in 0..self.rows {
            let ui = u[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (a, b) in row.iter_mut().zip(v.iter()) {
                *a += ui * *b;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Mat<T>) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add_assign");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn mean(&self) -> T {
        let n = T::cast(self.data.len() as f64);
        self.data.iter().copied().sum::<T>() / n
    }
}

impl<T: Real> Mat<Complex<T>> {
    pub fn czeros(rows: usize, cols: usize) -> Self {
        Mat::fill(rows, cols, Complex::new(T::zero(), T::zero()))
    }
}

// ── 2-vector helpers for planar geometry ────────────────────────────────────

pub fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

pub fn sub2<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn norm2<T: Real>(a: [T; 2]) -> T {
    dot2(a, a).sqrt()
}

pub fn normalize2<T: Real>(a: [T; 2]) -> [T; 2] {
    let n = norm2(a);
    [a[0] / n, a[1] / n]
}

/// Counter-clockwise perpendicular.
pub fn perp2<T: Real>(a: [T; 2]) -> [T; 2] {
    [-a[1], a[0]]
}
