use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bethe::config::{Ensemble, GraphShape, OptimizerSettings, SweepConfig};
use bethe::io::{self, ConvexityFile, ExactFile, MinimizeFile};
use bethe::sweep::{self, cell_records, LongWriter, TableFormat};
use bethe_core::convexity::{certify_with, symmetric_model_thresholds, DEFAULT_BETA_MAX};
use bethe_core::exact::brute_force_solve_with_limit;
use bethe_core::graph::build_model;
use bethe_core::optimizer::multi_restart_minimize;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bethe free energy toolkit for binary pairwise models.
#[derive(Parser)]
#[command(name = "bethe", version)]
struct Cli {
    /// Random seed (model generation, restarts, sweeps).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or output directory for `sweep`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON configuration: optimizer settings for `minimize`, a sweep
    /// configuration for `sweep`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random model and write it as JSON.
    Generate(GenerateArgs),
    /// Run both convexity certificates on a model.
    Certify {
        #[arg(long)]
        model: PathBuf,
        /// Upper end of the critical-β search.
        #[arg(long, default_value_t = DEFAULT_BETA_MAX)]
        beta_max: f64,
    },
    /// Minimize the Bethe free energy from random restarts.
    Minimize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        /// Write the best run's iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact marginals and partition function by enumeration.
    Exact {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = bethe_core::exact::DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// Ensemble sweep over a β grid.
    Sweep {
        /// Built-in ensemble, used when no --config is given.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
    },
    /// Critical β of the symmetric model under each criterion, as CSV.
    Thresholds {
        #[arg(long, default_value_t = 3)]
        d_min: usize,
        #[arg(long, default_value_t = 20)]
        d_max: usize,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyKind {
    Grid,
    Complete,
    Er,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = TopologyKind::Grid)]
    topology: TopologyKind,
    #[arg(long, default_value_t = 5)]
    rows: usize,
    #[arg(long, default_value_t = 5)]
    cols: usize,
    /// Node count for `complete` and `er`.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Edge probability for `er`.
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    /// Coupling range as `lo,hi`.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    couplings: String,
    /// Field range as `lo,hi`.
    #[arg(long, default_value = "-0.125,0.125", allow_hyphen_values = true)]
    fields: String,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .with_context(|| format!("expected `lo,hi`, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match cli.command {
        Command::Generate(a) => {
            let graph = match a.topology {
                TopologyKind::Grid => GraphShape::Grid {
                    rows: a.rows,
                    cols: a.cols,
                },
                TopologyKind::Complete => GraphShape::Complete { n: a.n },
                TopologyKind::Er => GraphShape::ErdosRenyi { n: a.n, p: a.p },
            };
            let ensemble = Ensemble {
                graph,
                coupling_range: parse_range(&a.couplings)?,
                field_range: parse_range(&a.fields)?,
            };
            let model = build_model(&ensemble.family(seed), a.beta)?;
            io::write_text(out, &io::model_to_json(&model))?;
        }
        Command::Certify { model, beta_max } => {
            let m = io::read_model(&model)?;
            let report = certify_with(&m, beta_max)?;
            io::write_json(out, &ConvexityFile::new(&m, &report))?;
        }
        Command::Minimize {
            model,
            restarts,
            trace,
        } => {
            let m = io::read_model(&model)?;
            let settings: OptimizerSettings = match &cli.config {
                Some(p) => serde_json::from_str(&read(p)?)
                    .with_context(|| format!("{}: not an optimizer configuration", p.display()))?,
                None => OptimizerSettings::default(),
            };
            let mut config = settings.to_config()?;
            config.record_trace = trace.is_some();
            let summary = multi_restart_minimize(&m, restarts, seed, &config)?;
            if let Some(path) = trace {
                let f = File::create(&path).with_context(|| path.display().to_string())?;
                let rows = summary.best_run().trace.as_deref().unwrap_or_default();
                io::write_trace(BufWriter::new(f), rows)?;
            }
            io::write_json(out, &MinimizeFile::new(&m, &summary))?;
        }
        Command::Exact { model, max_nodes } => {
            let m = io::read_model(&model)?;
            let sol = brute_force_solve_with_limit(&m, max_nodes)?;
            io::write_json(out, &ExactFile::new(&m, &sol))?;
        }
        Command::Sweep { preset, format } => {
            let mut config = match (&cli.config, &preset) {
                (Some(p), None) => SweepConfig::from_file(p)?,
                (None, Some(name)) => SweepConfig::preset(name, seed)?,
                (Some(_), Some(_)) => bail!("give either --config or --preset, not both"),
                (None, None) => bail!("sweep needs --config or --preset"),
            };
            if let Some(s) = cli.seed {
                config.seed = s;
            }
            if let Some(dir) = out {
                config.output_path = dir.display().to_string();
            }
            let format = match format {
                Format::Csv => TableFormat::Csv,
                Format::Json => TableFormat::Json,
                Format::Both => TableFormat::Both,
            };
            run_sweep(&config, format)?;
        }
        Command::Thresholds {
            d_min,
            d_max,
            coupling,
        } => {
            let mut text = String::from("d,exact,dobrushin,simon,diag_dominance,heskes");
            for d in d_min..=d_max {
                let t = symmetric_model_thresholds(d, coupling)?;
                text.push_str(&format!(
                    "\n{d},{},{},{},{},{}",
                    t.exact, t.dobrushin, t.simon, t.diag_dominance, t.heskes
                ));
            }
            io::write_text(out, &text)?;
        }
    }
    Ok(())
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).with_context(|| p.display().to_string())
}

fn run_sweep(config: &SweepConfig, format: TableFormat) -> Result<()> {
    let dir = PathBuf::from(&config.output_path);
    std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
    let mut long = match format {
        TableFormat::Json => None,
        _ => Some(LongWriter::create(&dir.join(sweep::LONG_FILE))?),
    };
    let total = config.model_count;
    let result = sweep::run_sweep_with(config, |model, rows| {
        if let Some(w) = long.as_mut() {
            for row in rows {
                w.write(&cell_records(row, model))?;
            }
        }
        eprintln!("model {}/{total} done", model.model_id + 1);
        Ok(())
    })?;
    sweep::emit_summary(&result, &dir, format)?;
    let summary = serde_json::json!({
        "output": dir,
        "models": result.models.len(),
        "cells": result.cells.len(),
        "convergence_rate": result.convergence_rate(),
    });
    io::write_json(None, &summary)?;
    Ok(())
}
