//! Sufficient conditions for convexity of `F_B` on the Bethe box.
//!
//! Two certificates are implemented:
//!
//! * **Diagonal dominance.** The Hessian is diagonally dominant everywhere on
//!   the box iff, for every node, the polynomial
//!   `Ψ_i(q) = −(d_i−1) Π_j (1+α_ij q) + Σ_j (1+α_ij q²) Π_{k≠j} (1+α_ik q)`
//!   is strictly positive on `(0, 0.5]`, with `α_ij = e^{4β|J_ij|} − 1`.
//! * **Sum decomposition.** Splitting the Hessian into one 2×2 block per edge
//!   (node curvature shared evenly, `s_ij = 1/d_i`), every block is positive
//!   definite iff `β` is below a closed-form per-edge threshold.
//!
//! Both are sufficient only. A report never asserts non-convexity.

use alloc::vec;
use alloc::vec::Vec;

use crate::bethe::{BethePoint, PairTable};
use crate::error::{Error, Result};
use crate::graph::{Edge, Model};
use crate::linalg::Matrix;
use crate::math;
use crate::poly::Polynomial;

/// Bisection tolerance on `β` for [`critical_beta_diag_dominance`].
pub const TOL_BETA: f64 = 1e-4;

/// Default upper end of the critical-β search bracket.
pub const DEFAULT_BETA_MAX: f64 = 5.0;

/// Relative amount by which `Ψ_i` is lowered before Sturm counting, so that a
/// root that merely touches zero is not missed.
pub const STURM_GUARD: f64 = 1e-12;

/// Sign-sampling resolution on `(0, 0.5]`.
pub const SAMPLES: usize = 4096;

/// `Ψ_i` of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiPolynomial {
    pub node: usize,
    pub poly: Polynomial,
}

impl PsiPolynomial {
    /// Ascending coefficients.
    pub fn coefficients(&self) -> &[f64] {
        self.poly.coefficients()
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.poly.eval(q)
    }
}

/// `Ψ_i` from the sign-free couplings `e^{4β|J_ij|} − 1` of node `i`.
pub fn psi_polynomial(model: &Model, i: usize) -> Result<PsiPolynomial> {
    let d = model.degree(i)?;
    let alphas: Vec<f64> = model
        .neighbors(i)
        .iter()
        .map(|nb| model.alpha_abs(nb.edge))
        .collect();
    Ok(PsiPolynomial {
        node: i,
        poly: psi_from_alphas(&alphas, d),
    })
}

/// `Ψ` for a node whose incident edges have coupling strengths `alphas`.
pub fn psi_from_alphas(alphas: &[f64], degree: usize) -> Polynomial {
    let factors: Vec<Polynomial> = alphas.iter().map(|&a| Polynomial::linear(1.0, a)).collect();
    // prefix[k] = Π_{m<k}, suffix[k] = Π_{m≥k}
    let mut prefix = vec![Polynomial::constant(1.0)];
    for f in &factors {
        let next = prefix[prefix.len() - 1].mul(f);
        prefix.push(next);
    }
    let mut suffix = vec![Polynomial::constant(1.0); factors.len() + 1];
    for k in (0..factors.len()).rev() {
        suffix[k] = suffix[k + 1].mul(&factors[k]);
    }
    let mut psi = prefix[factors.len()].scale(-(degree as f64 - 1.0));
    for (k, &a) in alphas.iter().enumerate() {
        let quad = Polynomial::new(vec![1.0, 0.0, a]);
        psi = psi.add(&quad.mul(&prefix[k]).mul(&suffix[k + 1]));
    }
    psi
}

/// The pieces of the positivity decision for one `Ψ_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiVerdict {
    /// Sturm root count of the lowered polynomial on `(0, 0.5]`.
    pub sturm_roots: usize,
    /// Smallest value found by sampling plus local refinement.
    pub sampled_min: f64,
    pub positive: bool,
}

/// Both checks must report positivity; any disagreement is "not positive".
pub fn psi_verdict(psi: &PsiPolynomial) -> PsiVerdict {
    let p = &psi.poly;
    let bound: f64 = p
        .coefficients()
        .iter()
        .enumerate()
        .map(|(k, c)| math::abs(*c) * libm::pow(0.5, k as f64))
        .sum();
    let lowered = p.add(&Polynomial::constant(-STURM_GUARD * bound.max(1.0)));
    let sturm_roots = lowered.count_roots(0.0, 0.5);
    let sampled_min = sampled_minimum(p);
    PsiVerdict {
        sturm_roots,
        sampled_min,
        positive: sturm_roots == 0 && sampled_min > 0.0,
    }
}

/// `Ψ_i > 0` on `(0, 0.5]`. A root at `0.5` counts as failure.
pub fn psi_positive_on_interval(psi: &PsiPolynomial) -> bool {
    psi_verdict(psi).positive
}

fn sampled_minimum(p: &Polynomial) -> f64 {
    let h = 0.5 / SAMPLES as f64;
    let values: Vec<f64> = (0..=SAMPLES).map(|k| p.eval(k as f64 * h)).collect();
    let mut min = values[1..].iter().copied().fold(f64::INFINITY, f64::min);
    for k in 1..SAMPLES {
        if values[k] <= values[k - 1] && values[k] <= values[k + 1] {
            min = min.min(refine_minimum(p, (k - 1) as f64 * h, (k + 1) as f64 * h));
        }
    }
    min.min(values[SAMPLES])
}

/// Golden-section search for a local minimum bracketed by `[a, b]`.
fn refine_minimum(p: &Polynomial, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (p.eval(c), p.eval(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = p.eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = p.eval(d);
        }
    }
    fc.min(fd)
}

/// Per-node `Ψ_i` positivity at the model's `β`.
pub fn diag_dominance_verdicts(model: &Model) -> Result<Vec<bool>> {
    (0..model.node_count())
        .map(|i| psi_polynomial(model, i).map(|p| psi_positive_on_interval(&p)))
        .collect()
}

/// The diagonal-dominance certificate holds at the model's `β`.
pub fn diag_dominance_holds(model: &Model) -> Result<bool> {
    for i in 0..model.node_count() {
        if !psi_positive_on_interval(&psi_polynomial(model, i)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest `β ∈ (0, beta_max]` at which some `Ψ_i` acquires a root in
/// `(0, 0.5]`, to within [`TOL_BETA`]. The returned value is the upper end of
/// the final bracket, so the certificate fails there. `None` means the
/// certificate still holds at `beta_max`. Independent of the model's own `β`.
pub fn critical_beta_diag_dominance(model: &Model, beta_max: f64) -> Result<Option<f64>> {
    if !(beta_max.is_finite() && beta_max > 0.0) {
        return Err(Error::InvalidConfig(
            "beta_max must be finite and > 0".into(),
        ));
    }
    // Nodes with the same multiset of |J| share Ψ; test each class once.
    let mut classes: Vec<Vec<f64>> = Vec::new();
    for i in 0..model.node_count() {
        let mut js: Vec<f64> = model
            .neighbors(i)
            .iter()
            .map(|nb| math::abs(model.couplings()[nb.edge]))
            .collect();
        js.sort_by(f64::total_cmp);
        if js.len() >= 2 && !classes.contains(&js) {
            classes.push(js);
        }
    }
    let holds = |beta: f64| {
        classes.iter().all(|js| {
            let alphas: Vec<f64> = js.iter().map(|j| math::expm1(4.0 * beta * j)).collect();
            psi_positive_on_interval(&PsiPolynomial {
                node: 0,
                poly: psi_from_alphas(&alphas, js.len()),
            })
        })
    };
    if holds(beta_max) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, beta_max);
    while hi - lo > TOL_BETA {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

/// Per-edge critical inverse temperature of the sum-decomposition
/// certificate, `arccosh(1 + 2/D) / (2|J|)` with `D = d_i d_j − d_i − d_j`.
///
/// `+∞` when `J = 0` or `D ≤ 0`: a leaf edge or an edge between two degree-2
/// nodes has a positive 2×2 determinant at every temperature.
pub fn edge_beta_star(d_i: usize, d_j: usize, coupling: f64) -> f64 {
    let d = (d_i * d_j) as f64 - d_i as f64 - d_j as f64;
    if coupling == 0.0 || d <= 0.0 {
        return f64::INFINITY;
    }
    math::acosh(1.0 + 2.0 / d) / (2.0 * math::abs(coupling))
}

/// Determinant of the 2×2 block of edge `(i, j)` in the sum decomposition,
/// without the `1/β²` factor.
pub fn det_h2x2(model: &Model, edge: (usize, usize), q_i: f64, q_j: f64) -> Result<f64> {
    let k = model.edge_index(edge.0, edge.1)?;
    let d_i = model.degree(edge.0)?;
    let d_j = model.degree(edge.1)?;
    det_h2x2_raw(d_i, d_j, q_i, q_j, model.alpha(k))
}

/// [`det_h2x2`] from degrees and `α_ij`.
pub fn det_h2x2_raw(d_i: usize, d_j: usize, q_i: f64, q_j: f64, alpha: f64) -> Result<f64> {
    if d_i == 0 || d_j == 0 {
        return Err(Error::InvalidConfig(
            "edge endpoints have degree ≥ 1".into(),
        ));
    }
    let a = (d_i as f64 - 1.0) / d_i as f64;
    let b = (d_j as f64 - 1.0) / d_j as f64;
    let p = q_i * q_j * (1.0 - q_i) * (1.0 - q_j);
    let t = PairTable::new(q_i, q_j, alpha).t()?;
    Ok(a * b / p + (1.0 - a - b) / t)
}

/// The 2×2 block of one edge, indexed `[i, j] × [i, j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeHessian {
    pub edge: Edge,
    pub block: [[f64; 2]; 2],
}

impl EdgeHessian {
    pub fn determinant(&self) -> f64 {
        let m = &self.block;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

/// The Hessian as a sum of edge blocks plus the curvature of isolated nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct SumDecomposition {
    pub edge_terms: Vec<EdgeHessian>,
    /// `(node, 1/(β q(1−q)))` for every node without neighbours.
    pub isolated_terms: Vec<(usize, f64)>,
}

impl SumDecomposition {
    /// Dense `n × n` embedding of one edge block.
    pub fn embed(&self, term: usize, n: usize) -> Matrix {
        let t = &self.edge_terms[term];
        let idx = [t.edge.i, t.edge.j];
        let mut m = Matrix::zeros(n);
        for (r, &a) in idx.iter().enumerate() {
            for (c, &b) in idx.iter().enumerate() {
                m.set(a, b, t.block[r][c]);
            }
        }
        m
    }

    pub fn total(&self, n: usize) -> Matrix {
        let mut m = Matrix::zeros(n);
        for t in &self.edge_terms {
            let idx = [t.edge.i, t.edge.j];
            for (r, &a) in idx.iter().enumerate() {
                for (c, &b) in idx.iter().enumerate() {
                    m.add(a, b, t.block[r][c]);
                }
            }
        }
        for &(i, v) in &self.isolated_terms {
            m.add(i, i, v);
        }
        m
    }
}

/// Edge-specific Hessians with `s_ij = 1/d_i`.
pub fn sum_decomposition_hessians(model: &Model, q: &BethePoint) -> Result<SumDecomposition> {
    if q.len() != model.node_count() {
        return Err(Error::DimensionMismatch {
            expected: model.node_count(),
            got: q.len(),
        });
    }
    let inv_beta = 1.0 / model.beta();
    let deg = model.degrees();
    let node_part = |i: usize| {
        let d = deg[i] as f64;
        -(d - 1.0) / (d * q[i] * (1.0 - q[i]))
    };
    let mut edge_terms = Vec::with_capacity(model.edge_count());
    for (k, &e) in model.edges().iter().enumerate() {
        let (qi, qj) = (q[e.i], q[e.j]);
        let table = PairTable::new(qi, qj, model.alpha(k));
        let t = table.t()?;
        let off = -table.covariance() / t * inv_beta;
        edge_terms.push(EdgeHessian {
            edge: e,
            block: [
                [(node_part(e.i) + qj * (1.0 - qj) / t) * inv_beta, off],
                [off, (node_part(e.j) + qi * (1.0 - qi) / t) * inv_beta],
            ],
        });
    }
    let isolated_terms = (0..model.node_count())
        .filter(|&i| deg[i] == 0)
        .map(|i| (i, inv_beta / (q[i] * (1.0 - q[i]))))
        .collect();
    Ok(SumDecomposition {
        edge_terms,
        isolated_terms,
    })
}

/// Critical inverse temperatures of a `d`-regular model with uniform coupling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdTable {
    pub exact: f64,
    pub dobrushin: f64,
    pub simon: f64,
    pub diag_dominance: f64,
    pub heskes: f64,
}

pub fn symmetric_model_thresholds(d: usize, coupling: f64) -> Result<ThresholdTable> {
    if d < 3 {
        return Err(Error::InvalidConfig(
            "symmetric thresholds need degree d ≥ 3".into(),
        ));
    }
    if coupling == 0.0 || !coupling.is_finite() {
        return Err(Error::InvalidConfig(
            "symmetric thresholds need a finite J ≠ 0".into(),
        ));
    }
    let j = math::abs(coupling);
    let df = d as f64;
    let dobrushin = if d % 2 == 1 {
        math::atanh(1.0 / df) / j
    } else {
        math::atanh(2.0 / df) / (2.0 * j)
    };
    Ok(ThresholdTable {
        exact: math::atanh(1.0 / (df - 1.0)) / j,
        dobrushin,
        simon: 1.0 / (j * df),
        diag_dominance: math::ln((df + 1.0) * (df + 1.0) / ((df - 1.0) * (df - 1.0))) / (4.0 * j),
        heskes: math::ln((df - 1.0) / (df - 2.0)) / (4.0 * j),
    })
}

/// `r⁺_ij(q_i, q_j) = (q_j(1−q_j) − ξ* + q_i q_j) / T_ij`, the contribution of
/// a ferromagnetic edge to the diagonal-dominance margin of node `i`.
pub fn r_plus(q_i: f64, q_j: f64, alpha: f64) -> Result<f64> {
    let table = PairTable::new(q_i, q_j, alpha);
    Ok((q_j * (1.0 - q_j) - table.covariance()) / table.t()?)
}

/// `inf_{q_j} r⁺_ij(q_i, q_j)`, attained in the limit `q_j → 0` for
/// `q_i ≤ 0.5` and `q_j → 1` otherwise.
pub fn r_plus_infimum(q_i: f64, alpha: f64) -> f64 {
    let s = if q_i <= 0.5 { q_i } else { 1.0 - q_i };
    (1.0 + alpha * s * s) / ((1.0 + alpha * s) * q_i * (1.0 - q_i))
}

/// Both certificates at the model's `β`, plus the critical `β` of each.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityReport {
    pub beta: f64,
    pub per_node_psi_positive: Vec<bool>,
    pub diag_dominance_convex: bool,
    /// In [`Model::edges`] order; `+∞` where the edge imposes no limit.
    pub per_edge_beta_star: Vec<f64>,
    pub sum_decomposition_convex: bool,
    /// `None` when the diagonal-dominance certificate holds up to the search
    /// bound.
    pub beta_star_diag: Option<f64>,
    /// Minimum of `per_edge_beta_star`; `+∞` without constraining edges.
    pub beta_star_sum: f64,
}

impl ConvexityReport {
    pub fn is_certified(&self) -> bool {
        self.diag_dominance_convex || self.sum_decomposition_convex
    }
}

pub fn certify(model: &Model) -> Result<ConvexityReport> {
    certify_with(model, DEFAULT_BETA_MAX)
}

pub fn certify_with(model: &Model, beta_max: f64) -> Result<ConvexityReport> {
    let per_node_psi_positive = diag_dominance_verdicts(model)?;
    let per_edge_beta_star = per_edge_thresholds(model);
    let beta_star_sum = per_edge_beta_star
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport {
        beta: model.beta(),
        diag_dominance_convex: per_node_psi_positive.iter().all(|&b| b),
        per_node_psi_positive,
        sum_decomposition_convex: model.beta() < beta_star_sum,
        per_edge_beta_star,
        beta_star_diag: critical_beta_diag_dominance(model, beta_max)?,
        beta_star_sum,
    })
}

/// [`edge_beta_star`] for every edge.
pub fn per_edge_thresholds(model: &Model) -> Vec<f64> {
    let deg = model.degrees();
    model
        .edge_triples()
        .map(|(i, j, c)| edge_beta_star(deg[i], deg[j], c))
        .collect()
}
