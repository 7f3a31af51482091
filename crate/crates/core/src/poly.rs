//! Real polynomials in ascending coefficient order and Sturm root counting.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Coefficients below `TRIM_REL · max|c|` are treated as zero when a Sturm
/// remainder is formed.
const TRIM_REL: f64 = 1e-13;

/// `c[0] + c[1] x + … + c[n] xⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        let mut p = Self(coefficients);
        p.trim_exact();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Degree of the zero polynomial is reported as 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.0.is_empty() || other.0.is_empty() {
            return Self::new(Vec::new());
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        Self::new(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.0.iter().map(|c| math::abs(*c)).fold(0.0, f64::max)
    }

    /// Remainder of division by `divisor`, with coefficients that fall below
    /// the relative trim threshold removed.
    pub fn rem(&self, divisor: &Self) -> Self {
        let d = &divisor.0;
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let lead = d[d.len() - 1];
        let mut r = self.0.clone();
        while r.len() >= d.len() {
            let f = r[r.len() - 1] / lead;
            let shift = r.len() - d.len();
            for (k, &c) in d.iter().enumerate() {
                r[shift + k] -= f * c;
            }
            r.pop();
        }
        let scale = self
            .max_abs_coefficient()
            .max(divisor.max_abs_coefficient());
        let mut out = Self(r);
        out.trim_relative(scale);
        out
    }

    fn trim_exact(&mut self) {
        while self.0.len() > 1 && self.0[self.0.len() - 1] == 0.0 {
            self.0.pop();
        }
    }

    fn trim_relative(&mut self, scale: f64) {
        let tol = TRIM_REL * scale;
        for c in &mut self.0 {
            if math::abs(*c) <= tol {
                *c = 0.0;
            }
        }
        while !self.0.is_empty() && self.0[self.0.len() - 1] == 0.0 {
            self.0.pop();
        }
    }

    fn normalized(&self) -> Self {
        let m = self.max_abs_coefficient();
        if m > 0.0 {
            self.scale(1.0 / m)
        } else {
            self.clone()
        }
    }

    /// `p, p', −rem(p, p'), …` with every member rescaled to unit max
    /// coefficient (positive scaling leaves sign variations unchanged).
    pub fn sturm_sequence(&self) -> Vec<Polynomial> {
        let mut seq = vec![self.normalized()];
        let d = self.derivative();
        if d.is_zero() {
            return seq;
        }
        seq.push(d.normalized());
        loop {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]);
            if r.0.is_empty() {
                break;
            }
            seq.push(r.scale(-1.0).normalized());
            if seq[seq.len() - 1].degree() == 0 {
                break;
            }
        }
        seq
    }

    /// Number of distinct real roots in `(a, b]`.
    pub fn count_roots(&self, a: f64, b: f64) -> usize {
        let seq = self.sturm_sequence();
        let va = sign_changes(&seq, a);
        let vb = sign_changes(&seq, b);
        va.saturating_sub(vb)
    }
}

fn sign_changes(seq: &[Polynomial], x: f64) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for p in seq {
        let v = p.eval(x);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Polynomial {
        roots.iter().fold(Polynomial::constant(1.0), |p, &r| {
            p.mul(&Polynomial::linear(-r, 1.0))
        })
    }

    #[test]
    fn eval_and_derivative() {
        let p = Polynomial::new(vec![1.0, -3.0, 2.0]);
        assert_eq!(p.eval(2.0), 3.0);
        assert_eq!(p.derivative().coefficients(), &[-3.0, 4.0]);
    }

    #[test]
    fn counts_roots_in_half_open_interval() {
        let p = from_roots(&[0.1, 0.3, 0.7, -2.0]);
        assert_eq!(p.count_roots(0.0, 0.5), 2);
        assert_eq!(p.count_roots(0.0, 1.0), 3);
        assert_eq!(p.count_roots(0.2, 0.5), 1);
        assert_eq!(p.count_roots(-3.0, 0.2), 2);
    }

    #[test]
    fn positive_polynomial_has_no_roots() {
        let p = Polynomial::new(vec![1.0, -0.5, 0.3]);
        assert_eq!(p.count_roots(-10.0, 10.0), 0);
    }

    #[test]
    fn double_root_counts_once() {
        let p = from_roots(&[0.25, 0.25, 0.4]);
        assert_eq!(p.count_roots(0.0, 0.5), 2);
    }
}
