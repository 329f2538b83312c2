//! Small dense complex matrices and pivoted-LU determinants.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::C64;

/// Square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from rows; panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self::from_fn(n, |i, j| rows[i][j])
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn hadamard(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| self[(i, j)] * other[(i, j)])
    }

    /// Submatrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        assert_eq!(rows.len(), cols.len());
        Self::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Product of the row norms, the Hadamard bound on `|det|`.
    pub fn hadamard_scale(&self) -> f64 {
        (0..self.n)
            .map(|i| norm2(&self.data[i * self.n..(i + 1) * self.n]))
            .product()
    }

    pub fn det(&self) -> C64 {
        let mut work = self.data.clone();
        det_in_place(&mut work, self.n)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Determinant by LU decomposition with partial pivoting on magnitude.
///
/// `a` is an `n x n` row-major matrix and is overwritten. A zero pivot
/// column yields exactly zero.
pub fn det_in_place(a: &mut [C64], n: usize) -> C64 {
    assert_eq!(a.len(), n * n);
    let mut det = C64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for row in col + 1..n {
            let mag = a[row * n + col].norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let factor = a[row * n + col] / p;
            if factor == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col + 1..n {
                let upd = factor * a[col * n + j];
                a[row * n + j] -= upd;
            }
        }
    }
    det
}

/// Parity of the permutation that sorts `keys` ascending: `+1` or `-1`.
///
/// Counts inversions directly; inputs here are at most a few dozen long.
pub fn inversion_sign<T: PartialOrd>(keys: &[T]) -> i8 {
    let mut inversions = 0usize;
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i] > keys[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn dot_bilinear(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hermitian inner product, antilinear in the first argument.
pub fn dot_hermitian(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm2(a: &[C64]) -> f64 {
    libm::sqrt(a.iter().map(|x| x.norm_sqr()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn det_of_small_matrices() {
        assert_eq!(CMatrix::identity(4).det(), c(1.0, 0.0));
        let m = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!((m.det() - c(-2.0, 0.0)).norm() < 1e-14);
        let m = CMatrix::from_rows(&[
            vec![c(0.0, 1.0), c(1.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, -1.0)],
        ]);
        // i*(-i) - 2 = -1
        assert!((m.det() - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_gives_exact_zero() {
        let m = CMatrix::from_fn(3, |_, _| c(1.0, 0.0));
        assert_eq!(m.det(), c(0.0, 0.0));
        let strictly_lower =
            CMatrix::from_fn(3, |i, j| if i > j { c(0.5, 0.0) } else { c(0.0, 0.0) });
        assert_eq!(strictly_lower.det(), c(0.0, 0.0));
    }

    #[test]
    fn permutation_parity() {
        assert_eq!(inversion_sign(&[1, 2, 3]), 1);
        assert_eq!(inversion_sign(&[2, 1, 3]), -1);
        assert_eq!(inversion_sign(&[3, 1, 2]), 1);
    }
}
