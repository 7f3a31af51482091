//! Errors of the Bethe estimates against exact inference.

use crate::bethe::{pairwise_marginals_from_q, BethePoint};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::graph::Model;
use crate::math;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorRecord {
    pub partition_error: f64,
    pub singleton_error: f64,
    pub pairwise_error: f64,
}

/// `log Z_B = −β min F_B`.
pub fn bethe_log_partition(f_bethe_min: f64, beta: f64) -> f64 {
    -beta * f_bethe_min
}

/// `|−log Z + log Z_B|`.
pub fn partition_error(exact: &ExactSolution, f_bethe_min: f64, beta: f64) -> f64 {
    math::abs(bethe_log_partition(f_bethe_min, beta) - exact.log_z)
}

/// `(2/N) Σ_i |p_i(+1) − q_i|`.
pub fn singleton_error(exact: &ExactSolution, q: &BethePoint) -> Result<f64> {
    let n = exact.singleton.len();
    if q.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = exact
        .singleton
        .iter()
        .zip(q.as_slice())
        .map(|(p, q)| math::abs(p - q))
        .sum();
    Ok(2.0 * sum / n as f64)
}

/// Mean over edges of the ℓ¹ distance between the exact joint table and the
/// Bethe table reconstructed from `q`. Zero for a model without edges.
pub fn pairwise_error(exact: &ExactSolution, model: &Model, q: &BethePoint) -> Result<f64> {
    let tables = pairwise_marginals_from_q(model, q)?;
    if exact.pairwise.len() != tables.len() {
        return Err(Error::DimensionMismatch {
            expected: tables.len(),
            got: exact.pairwise.len(),
        });
    }
    if tables.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = exact
        .pairwise
        .iter()
        .zip(&tables)
        .map(|(p, b)| {
            p.entries()
                .iter()
                .zip(b.entries())
                .map(|(x, y)| math::abs(x - y))
                .sum::<f64>()
        })
        .sum();
    Ok(sum / tables.len() as f64)
}

/// All three errors for a minimizer `q` with value `f_bethe_min`.
pub fn error_record(
    exact: &ExactSolution,
    model: &Model,
    q: &BethePoint,
    f_bethe_min: f64,
) -> Result<ErrorRecord> {
    Ok(ErrorRecord {
        partition_error: partition_error(exact, f_bethe_min, model.beta()),
        singleton_error: singleton_error(exact, q)?,
        pairwise_error: pairwise_error(exact, model, q)?,
    })
}
