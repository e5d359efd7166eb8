//! Dense complex matrices and LU factorization with partial pivoting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `y += s A x`.
    pub fn matvec_acc(&self, x: &[C64], s: C64, y: &mut [C64]) {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        assert_eq!(y.len(), self.rows, "matvec dimension mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            let v: C64 = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
            *yi += s * v;
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&mut self, s: C64) {
        for v in &mut self.data {
            *v *= s;
        }
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with unit lower triangular `L`, stored in place.
#[derive(Clone, Debug)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors a square matrix; `label` names the block in singularity errors.
    pub fn factor(mut a: Matrix, label: &str) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let max_entry = a.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tiny = max_entry * 1e-15 * n as f64;
        for k in 0..n {
            let (mut p, mut best) = (k, a[(k, k)].norm());
            for i in k + 1..n {
                let v = a[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::Singular { block: format!("{label} (pivot {k})") });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
            }
            let pivot = a[(k, k)];
            let inv = pivot.inv();
            let (upper, lower) = a.data.split_at_mut((k + 1) * n);
            let krow = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l == C64::new(0.0, 0.0) {
                    continue;
                }
                for (x, u) in row[k + 1..].iter_mut().zip(&krow[k + 1..]) {
                    *x -= l * u;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "LU solve dimension mismatch");
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solution polished by `steps` rounds of iterative refinement against the
    /// unfactored matrix `a`.
    pub fn solve_refined(&self, a: &Matrix, b: &[C64], steps: usize) -> Vec<C64> {
        let mut x = self.solve(b);
        for _ in 0..steps {
            let ax = a.matvec(&x);
            let r: Vec<C64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            let dx = self.solve(&r);
            for (x, d) in x.iter_mut().zip(&dx) {
                *x += d;
            }
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(b.rows, b.cols);
        let mut col = vec![C64::new(0.0, 0.0); b.rows];
        for j in 0..b.cols {
            for i in 0..b.rows {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..b.rows {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// Solves a general square system once.
pub fn solve(a: Matrix, b: &[C64], label: &str) -> Result<Vec<C64>> {
    Ok(LuFactors::factor(a, label)?.solve(b))
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1, 2, 5, 40] {
            let a = random_matrix(n, &mut rng);
            let x: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
            let b = a.matvec(&x);
            let got = solve(a, &b, "test").unwrap();
            for (g, e) in got.iter().zip(&x) {
                assert!((g - e).norm() < 1e-10 * (1.0 + e.norm()));
            }
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let a = Matrix::from_fn(3, 3, |i, j| C64::new((i + j) as f64, 0.0));
        assert!(matches!(LuFactors::factor(a, "blk"), Err(Error::Singular { .. })));
    }

    #[test]
    fn adjoint_and_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(4, &mut rng);
        let b = random_matrix(4, &mut rng);
        let lhs = a.matmul(&b).adjoint();
        let rhs = b.adjoint().matmul(&a.adjoint());
        for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            assert!((x - y).norm() < 1e-14);
        }
    }
}
