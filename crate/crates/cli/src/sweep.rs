//! Ensemble sweeps over a `β` grid and the tables they produce.
//!
//! Each (model, `β`) cell is independent. Cells of one model run in parallel
//! and are handed on in grid order, so the output does not depend on thread
//! scheduling.
//!
//! The long table has the fixed header `model_id,beta,metric,value` and, per
//! cell, the rows listed in [`CELL_METRICS`] (rows whose value is unavailable
//! are omitted). The aggregate table has one row per `β` with the columns of
//! [`AGGREGATE_HEADER`]; empty fields mean "no data".

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use bethe_core::convexity::{critical_beta_diag_dominance, per_edge_thresholds, DEFAULT_BETA_MAX};
use bethe_core::exact::brute_force_solve_with_limit;
use bethe_core::experiments::{cell_seed, evaluate_cell, mean_std, model_seed, CellResult, Stage};
use bethe_core::graph::build_model;
use bethe_core::Model;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SweepConfig;
use crate::error::{CliError, Result};

pub const LONG_HEADER: [&str; 4] = ["model_id", "beta", "metric", "value"];

/// Per-cell metrics in emission order.
pub const CELL_METRICS: [&str; 19] = [
    "partition_error",
    "singleton_error",
    "pairwise_error",
    "best_partition_error",
    "best_singleton_error",
    "best_pairwise_error",
    "f_best",
    "log_z_bethe",
    "log_z_exact",
    "runs",
    "converged_runs",
    "mean_iterations",
    "distinct_minima",
    "diag_convex",
    "sum_convex",
    "certified",
    "stage",
    "beta_star_diag",
    "beta_star_sum",
];

/// Error metrics averaged across models in the aggregate table.
const ERROR_METRICS: [&str; 6] = [
    "partition_error",
    "singleton_error",
    "pairwise_error",
    "best_partition_error",
    "best_singleton_error",
    "best_pairwise_error",
];

pub const AGGREGATE_HEADER: [&str; 26] = [
    "beta",
    "models",
    "error_models",
    "mean_partition_error",
    "std_partition_error",
    "mean_singleton_error",
    "std_singleton_error",
    "mean_pairwise_error",
    "std_pairwise_error",
    "mean_best_partition_error",
    "std_best_partition_error",
    "mean_best_singleton_error",
    "std_best_singleton_error",
    "mean_best_pairwise_error",
    "std_best_pairwise_error",
    "fraction_diag_convex",
    "fraction_sum_convex",
    "fraction_certified",
    "fraction_unique_minimum",
    "mean_distinct_minima",
    "convergence_rate",
    "mean_iterations",
    "beta_star_diag_models",
    "mean_beta_star_diag",
    "std_beta_star_diag",
    "mean_beta_star_sum",
];

/// Numeric code of a stage in the long table.
pub fn stage_code(stage: Stage) -> u8 {
    match stage {
        Stage::ConvexCertified => 0,
        Stage::UniqueMinimumObserved => 1,
        Stage::MultipleMinima => 2,
    }
}

/// Model-level quantities, independent of the model's `β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_id: usize,
    pub nodes: usize,
    pub edges: usize,
    /// `None` when the certificate holds up to the search bound.
    pub beta_star_diag: Option<f64>,
    /// `None` when no edge limits the certificate.
    pub beta_star_sum: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellRow {
    pub model_id: usize,
    pub beta_index: usize,
    pub cell: CellResult,
}

/// One row of the long table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongRecord {
    pub model_id: usize,
    pub beta: f64,
    pub metric: String,
    pub value: f64,
}

/// One row of the aggregate table; `None` where no model contributed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub beta: f64,
    pub models: usize,
    pub error_models: usize,
    pub mean_partition_error: Option<f64>,
    pub std_partition_error: Option<f64>,
    pub mean_singleton_error: Option<f64>,
    pub std_singleton_error: Option<f64>,
    pub mean_pairwise_error: Option<f64>,
    pub std_pairwise_error: Option<f64>,
    pub mean_best_partition_error: Option<f64>,
    pub std_best_partition_error: Option<f64>,
    pub mean_best_singleton_error: Option<f64>,
    pub std_best_singleton_error: Option<f64>,
    pub mean_best_pairwise_error: Option<f64>,
    pub std_best_pairwise_error: Option<f64>,
    pub fraction_diag_convex: Option<f64>,
    pub fraction_sum_convex: Option<f64>,
    pub fraction_certified: Option<f64>,
    pub fraction_unique_minimum: Option<f64>,
    pub mean_distinct_minima: Option<f64>,
    pub convergence_rate: Option<f64>,
    pub mean_iterations: Option<f64>,
    pub beta_star_diag_models: usize,
    pub mean_beta_star_diag: Option<f64>,
    pub std_beta_star_diag: Option<f64>,
    pub mean_beta_star_sum: Option<f64>,
}

impl AggregateRow {
    fn fields(&self) -> Vec<String> {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.beta.to_string(),
            self.models.to_string(),
            self.error_models.to_string(),
            o(self.mean_partition_error),
            o(self.std_partition_error),
            o(self.mean_singleton_error),
            o(self.std_singleton_error),
            o(self.mean_pairwise_error),
            o(self.std_pairwise_error),
            o(self.mean_best_partition_error),
            o(self.std_best_partition_error),
            o(self.mean_best_singleton_error),
            o(self.std_best_singleton_error),
            o(self.mean_best_pairwise_error),
            o(self.std_best_pairwise_error),
            o(self.fraction_diag_convex),
            o(self.fraction_sum_convex),
            o(self.fraction_certified),
            o(self.fraction_unique_minimum),
            o(self.mean_distinct_minima),
            o(self.convergence_rate),
            o(self.mean_iterations),
            self.beta_star_diag_models.to_string(),
            o(self.mean_beta_star_diag),
            o(self.std_beta_star_diag),
            o(self.mean_beta_star_sum),
        ]
    }

    fn error_stat(&mut self, metric: &str, ms: Option<(f64, f64)>) {
        let (m, s) = (ms.map(|x| x.0), ms.map(|x| x.1));
        let slot = match metric {
            "partition_error" => (
                &mut self.mean_partition_error,
                &mut self.std_partition_error,
            ),
            "singleton_error" => (
                &mut self.mean_singleton_error,
                &mut self.std_singleton_error,
            ),
            "pairwise_error" => (&mut self.mean_pairwise_error, &mut self.std_pairwise_error),
            "best_partition_error" => (
                &mut self.mean_best_partition_error,
                &mut self.std_best_partition_error,
            ),
            "best_singleton_error" => (
                &mut self.mean_best_singleton_error,
                &mut self.std_best_singleton_error,
            ),
            "best_pairwise_error" => (
                &mut self.mean_best_pairwise_error,
                &mut self.std_best_pairwise_error,
            ),
            _ => unreachable!("not an error metric: {metric}"),
        };
        *slot.0 = m;
        *slot.1 = s;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub models: Vec<ModelSummary>,
    pub cells: Vec<CellRow>,
    pub records: Vec<LongRecord>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    pub fn aggregate_at(&self, beta: f64) -> Option<&AggregateRow> {
        self.aggregates.iter().find(|a| a.beta == beta)
    }

    /// Fraction of all restart runs that converged.
    pub fn convergence_rate(&self) -> f64 {
        let (c, r) = self.cells.iter().fold((0, 0), |(c, r), row| {
            (c + row.cell.converged_runs, r + row.cell.runs)
        });
        c as f64 / r as f64
    }
}

/// Long-table rows of one cell, in [`CELL_METRICS`] order.
pub fn cell_records(row: &CellRow, model: &ModelSummary) -> Vec<LongRecord> {
    let c = &row.cell;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let values: [Option<f64>; 19] = [
        c.run_mean.map(|e| e.partition_error),
        c.run_mean.map(|e| e.singleton_error),
        c.run_mean.map(|e| e.pairwise_error),
        c.best.map(|e| e.partition_error),
        c.best.map(|e| e.singleton_error),
        c.best.map(|e| e.pairwise_error),
        Some(c.f_best),
        Some(c.log_z_bethe),
        c.log_z_exact,
        Some(c.runs as f64),
        Some(c.converged_runs as f64),
        Some(c.mean_iterations),
        Some(c.distinct_minima as f64),
        Some(flag(c.diag_convex)),
        Some(flag(c.sum_convex)),
        Some(flag(c.diag_convex || c.sum_convex)),
        Some(stage_code(c.stage) as f64),
        model.beta_star_diag,
        model.beta_star_sum,
    ];
    CELL_METRICS
        .iter()
        .zip(values)
        .filter_map(|(name, v)| {
            v.filter(|x| x.is_finite()).map(|value| LongRecord {
                model_id: row.model_id,
                beta: c.beta,
                metric: (*name).to_string(),
                value,
            })
        })
        .collect()
}

/// Recomputes the aggregate table from long-table rows alone. Rows are
/// grouped by `β` in increasing order.
pub fn aggregate(records: &[LongRecord]) -> Vec<AggregateRow> {
    // β bits → model → metric → value
    let mut by_beta: BTreeMap<u64, BTreeMap<usize, BTreeMap<&str, f64>>> = BTreeMap::new();
    for r in records {
        by_beta
            .entry(order_key(r.beta))
            .or_default()
            .entry(r.model_id)
            .or_default()
            .insert(r.metric.as_str(), r.value);
    }
    by_beta
        .into_iter()
        .map(|(key, models)| {
            let collect = |name: &str| -> Vec<f64> {
                models
                    .values()
                    .filter_map(|m| m.get(name).copied())
                    .collect()
            };
            let mean = |name: &str| mean_std(&collect(name)).map(|x| x.0);
            let total = |name: &str| collect(name).iter().sum::<f64>();
            let mut row = AggregateRow {
                beta: from_order_key(key),
                models: models.len(),
                error_models: collect("singleton_error").len(),
                ..Default::default()
            };
            for name in ERROR_METRICS {
                row.error_stat(name, mean_std(&collect(name)));
            }
            row.fraction_diag_convex = mean("diag_convex");
            row.fraction_sum_convex = mean("sum_convex");
            row.fraction_certified = mean("certified");
            let minima = collect("distinct_minima");
            if !minima.is_empty() {
                let unique = minima.iter().filter(|&&m| m == 1.0).count();
                row.fraction_unique_minimum = Some(unique as f64 / minima.len() as f64);
            }
            row.mean_distinct_minima = mean("distinct_minima");
            let runs = total("runs");
            if runs > 0.0 {
                row.convergence_rate = Some(total("converged_runs") / runs);
            }
            row.mean_iterations = mean("mean_iterations");
            let diag = collect("beta_star_diag");
            row.beta_star_diag_models = diag.len();
            let diag = mean_std(&diag);
            row.mean_beta_star_diag = diag.map(|x| x.0);
            row.std_beta_star_diag = diag.map(|x| x.1);
            row.mean_beta_star_sum = mean("beta_star_sum");
            row
        })
        .collect()
}

/// Total order on `f64` bits that agrees with numeric order.
fn order_key(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    f64::from_bits(if k >> 63 == 1 { k & !(1 << 63) } else { !k })
}

/// Samples model `model_id` of the ensemble at `β`.
pub fn ensemble_model(config: &SweepConfig, model_id: usize, beta: f64) -> Result<Model> {
    let family = config.family.family(model_seed(config.seed, model_id));
    Ok(build_model(&family, beta)?)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, |_, _| Ok(()))
}

/// Runs the sweep and hands every finished model's cells to `sink`, in model
/// order.
pub fn run_sweep_with<F>(config: &SweepConfig, mut sink: F) -> Result<SweepResult>
where
    F: FnMut(&ModelSummary, &[CellRow]) -> Result<()>,
{
    config.validate()?;
    let optimizer = config.optimizer.to_config()?;
    let mut models = Vec::with_capacity(config.model_count);
    let mut cells = Vec::with_capacity(config.model_count * config.beta_grid.len());
    let mut records = Vec::new();
    for model_id in 0..config.model_count {
        let base = ensemble_model(config, model_id, config.beta_grid[0])?;
        let beta_star_sum = per_edge_thresholds(&base)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let summary = ModelSummary {
            model_id,
            nodes: base.node_count(),
            edges: base.edge_count(),
            beta_star_diag: critical_beta_diag_dominance(&base, DEFAULT_BETA_MAX)?,
            beta_star_sum: beta_star_sum.is_finite().then_some(beta_star_sum),
        };
        let with_exact = base.node_count() <= config.exact_max_nodes;
        let rows = config
            .beta_grid
            .par_iter()
            .enumerate()
            .map(|(beta_index, &beta)| {
                let model = base.with_beta(beta)?;
                let exact = if with_exact {
                    Some(brute_force_solve_with_limit(
                        &model,
                        config.exact_max_nodes,
                    )?)
                } else {
                    None
                };
                let seed = cell_seed(config.seed, model_id, beta_index);
                let cell =
                    evaluate_cell(&model, exact.as_ref(), config.restarts, seed, &optimizer)?;
                Ok(CellRow {
                    model_id,
                    beta_index,
                    cell,
                })
            })
            .collect::<std::result::Result<Vec<_>, bethe_core::Error>>()?;
        sink(&summary, &rows)?;
        for row in &rows {
            records.extend(cell_records(row, &summary));
        }
        models.push(summary);
        cells.extend(rows);
    }
    let aggregates = aggregate(&records);
    Ok(SweepResult {
        config: config.clone(),
        models,
        cells,
        records,
        aggregates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
    Both,
}

pub const LONG_FILE: &str = "cells.csv";
pub const AGGREGATE_FILE: &str = "aggregates.csv";
pub const JSON_FILE: &str = "sweep.json";

/// Streams long-table rows to a CSV file.
pub struct LongWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl LongWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(f));
        inner.write_record(LONG_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, records: &[LongRecord]) -> Result<()> {
        for r in records {
            self.inner.write_record([
                r.model_id.to_string(),
                r.beta.to_string(),
                r.metric.clone(),
                r.value.to_string(),
            ])?;
        }
        self.inner
            .flush()
            .map_err(|e| CliError::io(Path::new(LONG_FILE), e))
    }
}

#[derive(Serialize)]
struct JsonTwin<'a> {
    config: &'a SweepConfig,
    models: &'a [ModelSummary],
    records: &'a [LongRecord],
    aggregates: &'a [AggregateRow],
}

/// Writes the long table, the aggregate table and/or the JSON twin into
/// `dir`, creating it if needed.
pub fn emit_tables(result: &SweepResult, dir: &Path, format: TableFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    if format != TableFormat::Json {
        LongWriter::create(&dir.join(LONG_FILE))?.write(&result.records)?;
    }
    emit_summary(result, dir, format)
}

/// Like [`emit_tables`] but leaves the long table alone (for callers that
/// streamed it with [`LongWriter`]).
pub fn emit_summary(result: &SweepResult, dir: &Path, format: TableFormat) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    if format != TableFormat::Json {
        let path = dir.join(AGGREGATE_FILE);
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(AGGREGATE_HEADER)?;
        for row in &result.aggregates {
            w.write_record(row.fields())?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
    }
    if format != TableFormat::Csv {
        let path = dir.join(JSON_FILE);
        let twin = JsonTwin {
            config: &result.config,
            models: &result.models,
            records: &result.records,
            aggregates: &result.aggregates,
        };
        let mut w = BufWriter::new(File::create(&path).map_err(|e| CliError::io(&path, e))?);
        serde_json::to_writer_pretty(&mut w, &twin)?;
        w.write_all(b"\n")
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

/// Parses a long table written by [`LongWriter`].
pub fn read_long<R: Read>(input: R) -> Result<Vec<LongRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != LONG_HEADER {
        return Err(CliError::Format(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let field = |k: usize| rec.get(k).unwrap_or_default();
            let bad = |what: &str| CliError::Format(format!("bad {what} in {rec:?}"));
            Ok(LongRecord {
                model_id: field(0).parse().map_err(|_| bad("model_id"))?,
                beta: field(1).parse().map_err(|_| bad("beta"))?,
                metric: field(2).to_string(),
                value: field(3).parse().map_err(|_| bad("value"))?,
            })
        })
        .collect()
}

/// Parses an aggregate table written by [`emit_tables`].
pub fn read_aggregates<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != AGGREGATE_HEADER {
        return Err(CliError::Format(format!("unexpected header {header:?}")));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let bad = || CliError::Format(format!("bad aggregate row {rec:?}"));
            let f: Vec<Option<f64>> = rec
                .iter()
                .map(|s| {
                    if s.is_empty() {
                        Ok(None)
                    } else {
                        s.parse().map(Some)
                    }
                })
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if f.len() != AGGREGATE_HEADER.len() {
                return Err(bad());
            }
            let n = |k: usize| f[k].map(|x| x as usize).ok_or_else(bad);
            Ok(AggregateRow {
                beta: f[0].ok_or_else(bad)?,
                models: n(1)?,
                error_models: n(2)?,
                mean_partition_error: f[3],
                std_partition_error: f[4],
                mean_singleton_error: f[5],
                std_singleton_error: f[6],
                mean_pairwise_error: f[7],
                std_pairwise_error: f[8],
                mean_best_partition_error: f[9],
                std_best_partition_error: f[10],
                mean_best_singleton_error: f[11],
                std_best_singleton_error: f[12],
                mean_best_pairwise_error: f[13],
                std_best_pairwise_error: f[14],
                fraction_diag_convex: f[15],
                fraction_sum_convex: f[16],
                fraction_certified: f[17],
                fraction_unique_minimum: f[18],
                mean_distinct_minima: f[19],
                convergence_rate: f[20],
                mean_iterations: f[21],
                beta_star_diag_models: n(22)?,
                mean_beta_star_diag: f[23],
                std_beta_star_diag: f[24],
                mean_beta_star_sum: f[25],
            })
        })
        .collect()
}
