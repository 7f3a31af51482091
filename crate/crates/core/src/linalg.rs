//! Small dense square matrices: just enough for Hessians and the BFGS update.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::rng::SeededRng;

/// Row-major `n × n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.concat(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| math::dot(self.row(i), x)).collect()
    }

    /// `Mᵀx`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += m * xi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.add(i, j, a * other.get(k, j));
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `xᵀMx`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        math::dot(x, &self.mul_vec(x))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max)
    }

    /// Lower-triangular `L` with `LLᵀ = M`, or `None` if a pivot is not
    /// strictly positive. Only the lower triangle of `M` is read.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            let d = math::sqrt(d);
            l.set(j, j, d);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Some(l)
    }

    /// Haar-ish random orthogonal matrix: modified Gram–Schmidt on columns with
    /// entries uniform in `(−1, 1)`.
    pub fn random_orthogonal(n: usize, rng: &mut SeededRng) -> Matrix {
        loop {
            let mut cols: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .collect();
            let mut ok = true;
            for c in 0..n {
                for p in 0..c {
                    let proj = math::dot(&cols[c], &cols[p]);
                    let (head, tail) = cols.split_at_mut(c);
                    for (v, &b) in tail[0].iter_mut().zip(&head[p]) {
                        *v -= proj * b;
                    }
                }
                let norm = math::norm2(&cols[c]);
                if norm < 1e-8 {
                    ok = false;
                    break;
                }
                for v in &mut cols[c] {
                    *v /= norm;
                }
            }
            if ok {
                let mut m = Matrix::zeros(n);
                for (j, col) in cols.iter().enumerate() {
                    for (i, &v) in col.iter().enumerate() {
                        m.set(i, j, v);
                    }
                }
                return m;
            }
        }
    }
}
