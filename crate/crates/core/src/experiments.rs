//! Per-cell logic of the phase-transition sweeps: one model at one `β`.
//!
//! The parallel driver, configuration files and table output live in the
//! `bethe` crate; everything here is deterministic given its seeds.

use alloc::vec::Vec;

use crate::convexity::{self, per_edge_thresholds};
use crate::error::{Error, Result};
use crate::exact::ExactSolution;
use crate::graph::Model;
use crate::math;
use crate::metrics::{error_record, ErrorRecord};
use crate::optimizer::{multi_restart_minimize, OptimizerConfig, RestartSummary};
use crate::rng::mix_seed;

/// Stand-in for `β = 0`, where `F_B` is undefined.
pub const BETA_ZERO_SUBSTITUTE: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    ConvexCertified,
    UniqueMinimumObserved,
    MultipleMinima,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::ConvexCertified => "convex-certified",
            Stage::UniqueMinimumObserved => "unique-minimum-observed",
            Stage::MultipleMinima => "multiple-minima",
        }
    }
}

/// `start, start + step, …` up to `stop` inclusive, with non-positive values
/// replaced by [`BETA_ZERO_SUBSTITUTE`].
pub fn beta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
        return Err(Error::InvalidConfig(
            "β grid needs step > 0 and stop ≥ start".into(),
        ));
    }
    let count = ((stop - start) / step + 1e-9) as usize + 1;
    Ok((0..count)
        .map(|k| {
            let b = start + k as f64 * step;
            // Snap to the decimal grid so 0.1 * 3 prints as 0.3.
            let b = math::round_to(b, 12);
            if b <= 0.0 {
                BETA_ZERO_SUBSTITUTE
            } else {
                b
            }
        })
        .collect())
}

/// Whether either certificate holds at the model's `β`.
pub fn certified_at_beta(model: &Model) -> Result<(bool, bool)> {
    let diag = convexity::diag_dominance_holds(model)?;
    let beta_star_sum = per_edge_thresholds(model)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((diag, model.beta() < beta_star_sum))
}

pub fn classify(certified: bool, restarts: &RestartSummary) -> Stage {
    if certified {
        Stage::ConvexCertified
    } else if restarts.distinct_minima() <= 1 {
        Stage::UniqueMinimumObserved
    } else {
        Stage::MultipleMinima
    }
}

pub fn stage_classification(
    model: &Model,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<Stage> {
    let (diag, sum) = certified_at_beta(model)?;
    let summary = multi_restart_minimize(model, restarts, seed, config)?;
    Ok(classify(diag || sum, &summary))
}

/// Everything recorded for one (model, β) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub beta: f64,
    /// Minimum of `F_B` over the restarts.
    pub f_best: f64,
    pub log_z_bethe: f64,
    pub log_z_exact: Option<f64>,
    /// Errors of the lowest-`F_B` converged run.
    pub best: Option<ErrorRecord>,
    /// Errors averaged over converged runs.
    pub run_mean: Option<ErrorRecord>,
    pub runs: usize,
    pub converged_runs: usize,
    /// Mean iteration count over all runs.
    pub mean_iterations: f64,
    pub distinct_minima: usize,
    pub diag_convex: bool,
    pub sum_convex: bool,
    pub stage: Stage,
}

/// Minimizes with restarts, certifies, and compares against `exact` when
/// given.
pub fn evaluate_cell(
    model: &Model,
    exact: Option<&ExactSolution>,
    restarts: usize,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<CellResult> {
    let summary = multi_restart_minimize(model, restarts, seed, config)?;
    let (diag, sum) = certified_at_beta(model)?;
    let best_run = summary.best_run();
    let converged: Vec<_> = summary.runs.iter().filter(|r| r.converged).collect();
    let (best, run_mean) = match exact {
        Some(ex) if !converged.is_empty() => {
            let best = error_record(ex, model, &best_run.q_star, best_run.f_value)?;
            let mut mean = ErrorRecord::default();
            for r in &converged {
                let e = error_record(ex, model, &r.q_star, r.f_value)?;
                mean.partition_error += e.partition_error;
                mean.singleton_error += e.singleton_error;
                mean.pairwise_error += e.pairwise_error;
            }
            let c = converged.len() as f64;
            mean.partition_error /= c;
            mean.singleton_error /= c;
            mean.pairwise_error /= c;
            (Some(best), Some(mean))
        }
        _ => (None, None),
    };
    let iterations: usize = summary.runs.iter().map(|r| r.iterations).sum();
    Ok(CellResult {
        beta: model.beta(),
        f_best: best_run.f_value,
        log_z_bethe: -model.beta() * best_run.f_value,
        log_z_exact: exact.map(|e| e.log_z),
        best,
        run_mean,
        runs: summary.runs.len(),
        converged_runs: converged.len(),
        mean_iterations: iterations as f64 / summary.runs.len() as f64,
        distinct_minima: summary.distinct_minima(),
        diag_convex: diag,
        sum_convex: sum,
        stage: classify(diag || sum, &summary),
    })
}

/// Seed of model `model_id` in an ensemble.
pub fn model_seed(seed: u64, model_id: usize) -> u64 {
    mix_seed(seed, model_id as u64)
}

/// Seed of the restart fleet of one cell.
pub fn cell_seed(seed: u64, model_id: usize, beta_index: usize) -> u64 {
    mix_seed(
        mix_seed(seed ^ 0x5EED_CE11, model_id as u64),
        beta_index as u64,
    )
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 for one value).
/// `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, math::sqrt(var)))
}
