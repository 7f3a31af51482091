//! The Bethe free energy on the Bethe box.
//!
//! For a binary pairwise model every pairwise pseudo-marginal is fixed by the
//! singleton values `q_i = P(x_i = +1)` through the stationary value `ξ*_ij`,
//! the root of
//!
//! ```text
//! α ξ² − (1 + α(q_i + q_j)) ξ + (1 + α) q_i q_j = 0,    α = e^{4βJ_ij} − 1,
//! ```
//!
//! inside `max(0, q_i + q_j − 1) < ξ < min(q_i, q_j)`. The joint table of an
//! edge is then
//!
//! ```text
//!            x_j = +1        x_j = −1
//! x_i = +1   ξ               q_i − ξ
//! x_i = −1   q_j − ξ         1 + ξ − q_i − q_j
//! ```
//!
//! Subtracting nearly equal numbers to get the last three entries loses all
//! precision near the faces of the box, so [`PairTable`] computes each entry
//! as a root of its own quadratic: flipping one spin maps the table onto the
//! table of the reflected marginal with the coupling sign inverted.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Model;
use crate::linalg::Matrix;
use crate::math;

/// Components of a [`BethePoint`] are clamped to `[BOX_EPS, 1 − BOX_EPS]`.
pub const BOX_EPS: f64 = 1e-9;

/// Tolerance on the residual of the defining quadratic of `ξ*`.
pub const XI_TOL: f64 = 1e-10;

/// Below this `|α|` the first-order series of `ξ*` is used.
pub const SERIES_SWITCH: f64 = 1e-8;

/// A point `q` of the Bethe box, strictly inside the unit cube.
#[derive(Clone, Debug, PartialEq)]
pub struct BethePoint(Vec<f64>);

impl BethePoint {
    /// Clamps every component to `[BOX_EPS, 1 − BOX_EPS]`. Non-finite input is
    /// rejected rather than clamped.
    pub fn new(mut q: Vec<f64>) -> Result<Self> {
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain("non-finite component in q"));
        }
        for v in &mut q {
            *v = clamp(*v);
        }
        Ok(Self(q))
    }

    /// The constant point `q_i ≡ value`.
    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl core::ops::Index<usize> for BethePoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn clamp(v: f64) -> f64 {
    v.clamp(BOX_EPS, 1.0 - BOX_EPS)
}

/// `ξ*_ij(q_i, q_j)` for `α > −1`.
pub fn xi_star(q_i: f64, q_j: f64, alpha: f64) -> f64 {
    xi_root(q_i, q_j, alpha, 1.0 + alpha)
}

/// Root of `α ξ² − Qξ + c = 0` with `c = (1+α) q_i q_j`. `one_plus_alpha` is
/// passed separately so callers holding `4βJ` can supply `e^{4βJ}` exactly.
fn xi_root(q_i: f64, q_j: f64, alpha: f64, one_plus_alpha: f64) -> f64 {
    let p = q_i * q_j;
    if math::abs(alpha) < SERIES_SWITCH {
        return p + alpha * p * ((1.0 - q_i) * (1.0 - q_j));
    }
    let q = 1.0 + alpha * (q_i + q_j);
    let c = one_plus_alpha * p;
    let disc = (q * q - 4.0 * alpha * c).max(0.0);
    let root = math::sqrt(disc);
    if q >= 0.0 {
        2.0 * c / (q + root)
    } else {
        // Only reachable for α < −1/2, so the division is safe.
        (q - root) / (2.0 * alpha)
    }
}

/// Residual of the defining quadratic at `xi`.
pub fn xi_residual(q_i: f64, q_j: f64, alpha: f64, xi: f64) -> f64 {
    (1.0 + alpha * (q_i + q_j)) * xi - alpha * xi * xi - (1.0 + alpha) * q_i * q_j
}

/// `T_ij = q_i q_j (1−q_i)(1−q_j) − (ξ − q_i q_j)²`, evaluated as written.
///
/// [`PairTable::t`] evaluates the same quantity without cancellation.
pub fn t_ij(q_i: f64, q_j: f64, xi: f64) -> Result<f64> {
    let cov = xi - q_i * q_j;
    let t = q_i * q_j * (1.0 - q_i) * (1.0 - q_j) - cov * cov;
    if t > 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(Error::NumericalDomain("T_ij is not positive"))
    }
}

/// Derived per-edge quantities at a point of the box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeAux {
    pub alpha: f64,
    /// `Q_ij = 1 + α(q_i + q_j)`.
    pub q: f64,
    pub xi: f64,
    pub t: f64,
}

pub fn edge_aux(q_i: f64, q_j: f64, alpha: f64) -> Result<EdgeAux> {
    let table = PairTable::new(q_i, q_j, alpha);
    Ok(EdgeAux {
        alpha,
        q: 1.0 + alpha * (q_i + q_j),
        xi: table.pp,
        t: table.t()?,
    })
}

/// Joint table of one edge; `pm` is `P(x_i = +1, x_j = −1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTable {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairTable {
    pub fn new(q_i: f64, q_j: f64, alpha: f64) -> Self {
        Self::from_log_coupling(q_i, q_j, math::ln1p(alpha))
    }

    /// Table for `k = 4βJ_ij`.
    pub fn from_log_coupling(q_i: f64, q_j: f64, k: f64) -> Self {
        let (a, opa) = (math::expm1(k), math::exp(k));
        let (a_flip, opa_flip) = (math::expm1(-k), math::exp(-k));
        Self {
            pp: xi_root(q_i, q_j, a, opa),
            pm: xi_root(q_i, 1.0 - q_j, a_flip, opa_flip),
            mp: xi_root(1.0 - q_i, q_j, a_flip, opa_flip),
            mm: xi_root(1.0 - q_i, 1.0 - q_j, a, opa),
        }
    }

    /// Product table of independent spins.
    pub fn independent(q_i: f64, q_j: f64) -> Self {
        Self {
            pp: q_i * q_j,
            pm: q_i * (1.0 - q_j),
            mp: (1.0 - q_i) * q_j,
            mm: (1.0 - q_i) * (1.0 - q_j),
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    /// `ξ − q_i q_j`, written as the 2×2 determinant.
    pub fn covariance(&self) -> f64 {
        self.pp * self.mm - self.pm * self.mp
    }

    /// `T_ij`. For a normalized table `T = abc + abd + acd + bcd`; the factor
    /// `a+b+c+d` keeps the identity exact when the entries carry rounding.
    pub fn t(&self) -> Result<f64> {
        let [a, b, c, d] = self.entries();
        let t = (a + b + c + d) * (a * b * (c + d) + c * d * (a + b));
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(Error::NumericalDomain("T_ij is not positive"))
        }
    }

    /// `Σ −p log p` over the four entries.
    pub fn entropy(&self) -> f64 {
        -self.entries().iter().map(|&p| math::xlogx(p)).sum::<f64>()
    }

    /// `E[x_i x_j]`.
    pub fn correlation(&self) -> f64 {
        self.pp + self.mm - self.pm - self.mp
    }
}

fn binary_entropy(q: f64) -> f64 {
    -(math::xlogx(q) + math::xlogx(1.0 - q))
}

fn check_len(model: &Model, q: &[f64]) -> Result<()> {
    if q.len() != model.node_count() {
        return Err(Error::DimensionMismatch {
            expected: model.node_count(),
            got: q.len(),
        });
    }
    Ok(())
}

fn log_coupling(model: &Model, edge: usize) -> f64 {
    4.0 * model.beta() * model.couplings()[edge]
}

/// One table per edge, in [`Model::edges`] order.
pub fn pairwise_marginals_from_q(model: &Model, q: &BethePoint) -> Result<Vec<PairTable>> {
    check_len(model, q.as_slice())?;
    Ok(tables(model, q.as_slice()))
}

fn tables(model: &Model, q: &[f64]) -> Vec<PairTable> {
    model
        .edges()
        .iter()
        .enumerate()
        .map(|(k, e)| PairTable::from_log_coupling(q[e.i], q[e.j], log_coupling(model, k)))
        .collect()
}

/// `F_B(q) = U_B − S_B/β` with every pairwise marginal at its stationary value.
pub fn bethe_free_energy(model: &Model, q: &BethePoint) -> Result<f64> {
    check_len(model, q.as_slice())?;
    evaluate(model, q.as_slice(), None)
}

/// `∇F_B(q)`.
pub fn bethe_gradient(model: &Model, q: &BethePoint) -> Result<Vec<f64>> {
    let mut g = vec![0.0; q.len()];
    check_len(model, q.as_slice())?;
    evaluate(model, q.as_slice(), Some(&mut g))?;
    Ok(g)
}

/// `F_B(q)` and `∇F_B(q)` in a single pass over the edges.
pub fn free_energy_and_gradient(model: &Model, q: &BethePoint) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; q.len()];
    check_len(model, q.as_slice())?;
    let f = evaluate(model, q.as_slice(), Some(&mut g))?;
    Ok((f, g))
}

/// Slice entry point used by the optimizer, whose iterates are already in the
/// clamped box.
pub(crate) fn evaluate(model: &Model, q: &[f64], grad: Option<&mut [f64]>) -> Result<f64> {
    let beta = model.beta();
    let mut energy = 0.0;
    let mut entropy = 0.0;
    let mut grad = grad;
    if let Some(g) = grad.as_deref_mut() {
        for (i, gi) in g.iter_mut().enumerate() {
            let d = model.neighbors(i).len() as f64;
            *gi = (d - 1.0) * (math::ln(1.0 - q[i]) - math::ln(q[i]));
        }
    }
    for (k, e) in model.edges().iter().enumerate() {
        let j_ij = model.couplings()[k];
        let t = PairTable::from_log_coupling(q[e.i], q[e.j], log_coupling(model, k));
        energy -= j_ij * t.correlation();
        entropy += t.entropy();
        if let Some(g) = grad.as_deref_mut() {
            let ln_mm = math::ln(t.mm);
            g[e.i] += math::ln(t.pm) - ln_mm;
            g[e.j] += math::ln(t.mp) - ln_mm;
        }
    }
    for (i, (&qi, &theta)) in q.iter().zip(model.fields()).enumerate() {
        let d = model.neighbors(i).len() as f64;
        energy += (1.0 - 2.0 * qi) * theta;
        entropy -= (d - 1.0) * binary_entropy(qi);
    }
    if let Some(g) = grad {
        for (i, gi) in g.iter_mut().enumerate() {
            let pull: f64 = model
                .neighbors(i)
                .iter()
                .map(|nb| model.couplings()[nb.edge])
                .sum();
            *gi = -2.0 * model.fields()[i] + 2.0 * pull + *gi / beta;
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain("non-finite gradient"));
        }
    }
    let f = energy - entropy / beta;
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NumericalDomain("non-finite free energy"))
    }
}

/// Dense symmetric Hessian of `F_B`; entries off the adjacency pattern are
/// exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BetheHessian(Matrix);

impl BetheHessian {
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Cholesky factorization succeeds.
    pub fn is_positive_definite(&self) -> bool {
        self.0.cholesky().is_some()
    }
}

/// `∇²F_B(q)`. Does not depend on the fields.
pub fn bethe_hessian(model: &Model, q: &BethePoint) -> Result<BetheHessian> {
    check_len(model, q.as_slice())?;
    let q = q.as_slice();
    let n = model.node_count();
    let inv_beta = 1.0 / model.beta();
    let mut h = Matrix::zeros(n);
    for (i, &qi) in q.iter().enumerate() {
        let d = model.neighbors(i).len() as f64;
        h.set(i, i, -(d - 1.0) / (qi * (1.0 - qi)));
    }
    for (k, e) in model.edges().iter().enumerate() {
        let (qi, qj) = (q[e.i], q[e.j]);
        let table = PairTable::from_log_coupling(qi, qj, log_coupling(model, k));
        let t = table.t()?;
        h.add(e.i, e.i, qj * (1.0 - qj) / t);
        h.add(e.j, e.j, qi * (1.0 - qi) / t);
        let off = -table.covariance() / t;
        h.set(e.i, e.j, off);
        h.set(e.j, e.i, off);
    }
    h.scale(inv_beta);
    Ok(BetheHessian(h))
}

/// First and second partial derivatives of `ξ*_ij` in `(q_i, q_j)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiDerivatives {
    pub d_qi: f64,
    pub d_qj: f64,
    pub d_qi_qi: f64,
    pub d_qi_qj: f64,
    pub d_qj_qj: f64,
}

/// Implicit differentiation of the defining quadratic, with
/// `A = 1 + α(q_i + q_j − 2ξ*)`.
pub fn xi_derivatives(q_i: f64, q_j: f64, alpha: f64) -> XiDerivatives {
    let xi = xi_star(q_i, q_j, alpha);
    let a = 1.0 + alpha * (q_i + q_j - 2.0 * xi);
    let n_i = alpha * (q_j - xi) + q_j;
    let n_j = alpha * (q_i - xi) + q_i;
    let d_qi = n_i / a;
    let d_qj = n_j / a;
    let d_qi_qj = ((alpha * (1.0 - d_qj) + 1.0) * a - n_i * alpha * (1.0 - 2.0 * d_qj)) / (a * a);
    XiDerivatives {
        d_qi,
        d_qj,
        d_qi_qi: -2.0 * alpha * d_qi * (1.0 - d_qi) / a,
        d_qi_qj,
        d_qj_qj: -2.0 * alpha * d_qj * (1.0 - d_qj) / a,
    }
}
