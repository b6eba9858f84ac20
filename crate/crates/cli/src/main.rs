//! `plapsim`: experiment runner for the p-Laplacian spectral solver and
//! its estimate-audit suite.
//!
//! Subcommands: `run` (one configured scenario), `sweep` (one run per
//! parameter value), `verify` (canonical per-anchor scenarios), `report`
//! (merge report JSON into a CSV summary table).

mod config;
mod output;
mod registry;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use plapsim_core::estimates::{reports_to_csv, reports_to_json, EstimateReport};
use plapsim_core::scenarios;

use config::{ExperimentConfig, TolOverrides};
use registry::Registry;

#[derive(Parser)]
#[command(name = "plapsim", version, about = "p-Laplacian spectral solver and estimate-audit runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for emitted artifacts (CSV/JSON).
    #[arg(long, global = true, default_value = "plapsim_out")]
    out_dir: PathBuf,

    /// Seed override for randomized initial data.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps (env PLAPSIM_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// JSON object with tolerance overrides,
    /// e.g. '{"exponent_tol": 0.2}'.
    #[arg(long, global = true)]
    tol_overrides: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured scenario and audit it.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the scenario once per parameter value and merge the verdicts.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: p, mu, nu, modes, dt.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the canonical scenario bound to each anchor (all by default).
    Verify {
        anchors: Vec<String>,
    },
    /// Merge report JSON files into a CSV summary.
    Report {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("PLAPSIM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
    .max(1)
}

fn load_config(path: &PathBuf, registry: &Registry) -> Result<(ExperimentConfig, Vec<u8>)> {
    let raw = std::fs::read(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let text = String::from_utf8(raw.clone()).context("config must be UTF-8")?;
    let config = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => bail!("{e}"),
    };
    let errors = config.validate(registry);
    if !errors.is_empty() {
        bail!(
            "invalid config {}:\n  {}",
            path.display(),
            errors.join("\n  ")
        );
    }
    Ok((config, raw))
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let registry = Registry::load()?;
    let overrides = match &cli.tol_overrides {
        Some(text) => match TolOverrides::parse(text) {
            Ok(o) => o,
            Err(e) => bail!("{e}"),
        },
        None => TolOverrides::default(),
    };

    match &cli.command {
        Command::Run { config } => {
            let (cfg, raw) = load_config(config, &registry)?;
            match run::run_single(&cfg, cli.seed, &overrides) {
                Ok(single) => {
                    run::write_artifacts(&cfg, &raw, &single, &cli.out_dir)?;
                    for r in &single.reports {
                        println!(
                            "[{}] {}: {}",
                            if r.is_pass() { "PASS" } else { "FAIL" },
                            r.anchor,
                            r.claim
                        );
                    }
                    if single.all_pass() {
                        println!("run `{}`: all selected audits pass", cfg.scenario);
                        Ok(ExitCode::SUCCESS)
                    } else {
                        println!("run `{}`: audit failures", cfg.scenario);
                        Ok(ExitCode::from(1))
                    }
                }
                Err(e) => {
                    let stem = cfg.scenario.replace(['/', ' '], "_");
                    let diag = serde_json::json!({
                        "scenario": cfg.scenario,
                        "error": format!("{e:#}"),
                    });
                    output::write_text(
                        &cli.out_dir.join(format!("{stem}_failure.json")),
                        &serde_json::to_string_pretty(&diag)?,
                    )?;
                    eprintln!("solver failure: {e:#}");
                    Ok(ExitCode::from(3))
                }
            }
        }
        Command::Sweep { config, param, values } => {
            let (cfg, raw) = load_config(config, &registry)?;
            let threads = resolve_threads(cli.threads);
            let (csv, all_ok) = sweep::execute_sweep(
                &cfg,
                &raw,
                param,
                values,
                threads,
                cli.seed,
                &overrides,
            )?;
            let stem = cfg.scenario.replace(['/', ' '], "_");
            let path = cli.out_dir.join(format!("{stem}_sweep_{param}.csv"));
            output::write_text(&path, &csv)?;
            println!("sweep table written to {}", path.display());
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Verify { anchors } => {
            let selected: Vec<String> = if anchors.is_empty() {
                scenarios::ANCHORS.iter().map(|s| s.to_string()).collect()
            } else {
                anchors.clone()
            };
            for anchor in &selected {
                if !registry.contains(anchor) {
                    bail!(
                        "unknown anchor `{anchor}`; known anchors: {}",
                        registry
                            .scenario_anchors()
                            .join(", ")
                    );
                }
            }
            let mut merged: Vec<EstimateReport> = Vec::new();
            let mut all_ok = true;
            for anchor in &selected {
                let outcome = match scenarios::run_anchor(anchor) {
                    Some(o) => o,
                    None => bail!("anchor `{anchor}` has no canonical scenario; it only applies to `run` audits"),
                };
                let ok = outcome.passed();
                all_ok &= ok;
                let description = registry
                    .get(anchor)
                    .map(|e| e.description.as_str())
                    .unwrap_or("");
                println!("[{}] {anchor}: {description}", if ok { "PASS" } else { "FAIL" });
                for r in &outcome.reports {
                    let vals = r
                        .measured
                        .iter()
                        .map(|m| format!("{}={:.6e}", m.name, m.value))
                        .collect::<Vec<_>>()
                        .join(", ");
                    println!("    {:?} | {} | {}", r.verdict, r.claim, vals);
                }
                merged.extend(outcome.reports);
            }
            output::write_text(
                &cli.out_dir.join("verify_reports.json"),
                &reports_to_json(&merged)?,
            )?;
            let hash = output::config_hash(selected.join(",").as_bytes());
            let csv = format!(
                "{}{}",
                output::hash_line(hash, "audit verdicts of the canonical anchor scenarios"),
                reports_to_csv(&merged)
            );
            output::write_text(&cli.out_dir.join("verify_reports.csv"), &csv)?;
            Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Report { inputs, out } => {
            if inputs.is_empty() {
                bail!("report needs at least one input JSON file");
            }
            let mut merged: Vec<EstimateReport> = Vec::new();
            for path in inputs {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let reports: Vec<EstimateReport> = serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?;
                merged.extend(reports);
            }
            let csv = reports_to_csv(&merged);
            match out {
                Some(path) => {
                    output::write_text(path, &csv)?;
                    println!("summary written to {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
