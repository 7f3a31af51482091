//! JSON and CSV file formats.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so every format here round-trips exactly. Non-finite values
//! have no JSON encoding and are written as `null`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use bethe_core::optimizer::{MinimizationResult, RestartSummary, Termination, TraceRow};
use bethe_core::{ConvexityReport, ExactSolution, Model, PairTable};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub nodes: usize,
    pub beta: f64,
    pub edges: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
}

impl ModelFile {
    pub fn from_model(model: &Model) -> Self {
        Self {
            nodes: model.node_count(),
            beta: model.beta(),
            edges: model.edge_triples().collect(),
            fields: model.fields().to_vec(),
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        Ok(Model::new(
            self.nodes,
            self.edges.iter().copied(),
            self.fields.clone(),
            self.beta,
        )?)
    }
}

pub fn model_to_json(model: &Model) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}

pub fn model_from_json(text: &str) -> Result<Model> {
    serde_json::from_str::<ModelFile>(text)?.to_model()
}

pub fn read_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    model_from_json(&text)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeThreshold {
    pub i: usize,
    pub j: usize,
    pub coupling: f64,
    /// `null` when the edge imposes no limit.
    pub beta_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeVerdict {
    pub node: usize,
    pub degree: usize,
    pub psi_positive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityFile {
    pub beta: f64,
    pub diag_convex: bool,
    pub sum_convex: bool,
    pub beta_star_diag: Option<f64>,
    pub beta_star_sum: Option<f64>,
    pub per_edge: Vec<EdgeThreshold>,
    pub per_node: Vec<NodeVerdict>,
}

impl ConvexityFile {
    pub fn new(model: &Model, report: &ConvexityReport) -> Self {
        Self {
            beta: report.beta,
            diag_convex: report.diag_dominance_convex,
            sum_convex: report.sum_decomposition_convex,
            beta_star_diag: report.beta_star_diag,
            beta_star_sum: finite(report.beta_star_sum),
            per_edge: model
                .edge_triples()
                .zip(&report.per_edge_beta_star)
                .map(|((i, j, coupling), &b)| EdgeThreshold {
                    i,
                    j,
                    coupling,
                    beta_star: finite(b),
                })
                .collect(),
            per_node: model
                .degrees()
                .into_iter()
                .zip(&report.per_node_psi_positive)
                .enumerate()
                .map(|(node, (degree, &psi_positive))| NodeVerdict {
                    node,
                    degree,
                    psi_positive,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub i: usize,
    pub j: usize,
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactFile {
    pub beta: f64,
    pub log_z: f64,
    pub free_energy: f64,
    pub singleton: Vec<f64>,
    pub pairwise: Vec<PairFile>,
}

impl ExactFile {
    pub fn new(model: &Model, sol: &ExactSolution) -> Self {
        Self {
            beta: sol.beta,
            log_z: sol.log_z,
            free_energy: sol.free_energy(),
            singleton: sol.singleton.clone(),
            pairwise: model
                .edges()
                .iter()
                .zip(&sol.pairwise)
                .map(|(e, p)| PairFile {
                    i: e.i,
                    j: e.j,
                    pp: p.pp,
                    pm: p.pm,
                    mp: p.mp,
                    mm: p.mm,
                })
                .collect(),
        }
    }

    pub fn to_solution(&self) -> ExactSolution {
        ExactSolution {
            beta: self.beta,
            log_z: self.log_z,
            singleton: self.singleton.clone(),
            pairwise: self
                .pairwise
                .iter()
                .map(|p| PairTable {
                    pp: p.pp,
                    pm: p.pm,
                    mp: p.mp,
                    mm: p.mm,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub q: Vec<f64>,
    pub f_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: String,
}

impl RunFile {
    pub fn new(run: &MinimizationResult) -> Self {
        Self {
            q: run.q_star.as_slice().to_vec(),
            f_value: run.f_value,
            grad_norm: run.grad_norm,
            iterations: run.iterations,
            converged: run.converged,
            termination: match run.termination {
                Termination::Converged => "converged",
                Termination::MaxIterations => "max_iterations",
                Termination::Stalled => "stalled",
            }
            .into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterFile {
    pub f_value: f64,
    pub size: usize,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeFile {
    pub beta: f64,
    pub f_best: f64,
    pub log_z_bethe: f64,
    pub runs: usize,
    pub converged_runs: usize,
    pub distinct_minima: usize,
    pub best: RunFile,
    pub clusters: Vec<ClusterFile>,
}

impl MinimizeFile {
    pub fn new(model: &Model, summary: &RestartSummary) -> Self {
        let best = summary.best_run();
        Self {
            beta: model.beta(),
            f_best: best.f_value,
            log_z_bethe: -model.beta() * best.f_value,
            runs: summary.runs.len(),
            converged_runs: summary.converged_count(),
            distinct_minima: summary.distinct_minima(),
            best: RunFile::new(best),
            clusters: summary
                .clusters
                .iter()
                .map(|c| ClusterFile {
                    f_value: c.f_value,
                    size: c.members.len(),
                    q: summary.runs[c.representative].q_star.as_slice().to_vec(),
                })
                .collect(),
        }
    }
}

pub const TRACE_HEADER: [&str; 4] = ["iteration", "F_B", "grad_norm", "step"];

pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            r.f_value.to_string(),
            r.grad_norm.to_string(),
            r.step.to_string(),
        ])?;
    }
    w.flush()
        .map_err(|e| CliError::io(Path::new("<trace>"), e))?;
    Ok(())
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &text)
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(f);
            w.write_all(text.as_bytes())
                .and_then(|_| w.write_all(b"\n"))
                .and_then(|_| w.flush())
                .map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}").and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::io(Path::new("<stdout>"), e))
                }
                _ => Ok(()),
            }
        }
    }
}
