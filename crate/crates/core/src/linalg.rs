//! Dense lower-triangular Cholesky factorisation and triangular solves.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Lower-triangular factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    dim: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorises a symmetric positive-definite matrix. Only the lower
    /// triangle of `a` is read.
    pub fn new(a: ArrayView2<'_, T>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::invalid(format!(
                "cholesky needs a square matrix, got {}x{}",
                dim,
                a.ncols()
            )));
        }
        let mut l = vec![T::zero(); dim * dim];
        for i in 0..dim {
            for j in 0..=i {
                let s = a[[i, j]] - dot(&l[i * dim..i * dim + j], &l[j * dim..j * dim + j]);
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[i * dim + i] = s.sqrt();
                } else {
                    l[i * dim + j] = s / l[j * dim + j];
                }
            }
        }
        Ok(Cholesky { dim, l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.l[i * self.dim + j]
    }

    pub fn factor(&self) -> Array2<T> {
        Array2::from_shape_vec((self.dim, self.dim), self.l.clone()).expect("square storage")
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [T]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.l[i * d..i * d + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * d + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_in_place(&self, b: &mut [T]) {
        let d = self.dim;
        for i in (0..d).rev() {
            let xi = b[i] / self.l[i * d + i];
            b[i] = xi;
            let row = &self.l[i * d..i * d + i];
            for (bk, &lik) in b[..i].iter_mut().zip(row) {
                *bk = *bk - lik * xi;
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &Array1<T>) -> Array1<T> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        Array1::from(x)
    }

    pub fn log_det(&self) -> T {
        (0..self.dim)
            .map(|i| self.l[i * self.dim + i].ln())
            .sum::<T>()
            * T::lit(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn factor_reconstructs_matrix() {
        let a = array![[4.0f64, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]];
        let c = Cholesky::new(a.view()).unwrap();
        let l = c.factor();
        let back = l.dot(&l.t());
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let b = array![1.0, -2.0, 0.5];
        let x = c.solve(&b);
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        let det: f64 = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.4) + 0.4 * (2.0 - 5.0 * 0.4);
        assert!((c.log_det() - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn reports_offending_pivot() {
        let a = array![[1.0f64, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]];
        match Cholesky::new(a.view()) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = array![[2.0f32, 1.0], [1.0, 2.0]];
        let x = Cholesky::new(a.view()).unwrap().solve(&array![3.0f32, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6);
    }
}
