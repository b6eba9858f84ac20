//! The `sweep` subcommand: one run per parameter value, merged verdict
//! table. Failures mark their cells and the sweep continues.

use std::sync::Mutex;

use anyhow::{bail, Result};

use crate::config::{ExperimentConfig, TolOverrides};
use crate::output;
use crate::run::{run_single, SingleRun};

pub const SWEEP_PARAMS: &[&str] = &["p", "mu", "nu", "modes", "dt"];

fn apply_param(config: &ExperimentConfig, param: &str, value: f64) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    match param {
        "p" => c.solver.p = value,
        "mu" => c.solver.mu = value,
        "nu" => c.solver.nu = value,
        "dt" => c.solver.dt_init = value,
        "modes" => {
            if value < 1.0 || value.fract() != 0.0 {
                bail!("modes sweep values must be positive integers, got {value}");
            }
            c.basis.modes_per_dim = value as usize;
        }
        other => bail!(
            "unknown sweep parameter `{other}`; expected one of {}",
            SWEEP_PARAMS.join(", ")
        ),
    }
    Ok(c)
}

struct Cell {
    value: f64,
    run: Result<SingleRun>,
}

/// Runs the sweep with a bounded worker pool; results merge in value order.
pub fn execute_sweep(
    config: &ExperimentConfig,
    raw_config: &[u8],
    param: &str,
    values: &[f64],
    threads: usize,
    seed: Option<u64>,
    overrides: &TolOverrides,
) -> Result<(String, bool)> {
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    let workers = threads.max(1).min(values.len());
    let cells: Vec<Option<Cell>> = {
        let slots: Mutex<Vec<Option<Cell>>> = Mutex::new((0..values.len()).map(|_| None).collect());
        let next: Mutex<usize> = Mutex::new(0);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let idx = {
                        let mut n = next.lock().expect("index lock");
                        if *n >= values.len() {
                            break;
                        }
                        let i = *n;
                        *n += 1;
                        i
                    };
                    let value = values[idx];
                    let run = apply_param(config, param, value)
                        .and_then(|c| run_single(&c, seed, overrides));
                    slots.lock().expect("slot lock")[idx] = Some(Cell { value, run });
                });
            }
        });
        slots.into_inner().expect("slot lock")
    };
    let cells: Vec<Cell> = cells
        .into_iter()
        .map(|c| c.expect("every sweep index is filled"))
        .collect();

    // reference for the dt refinement column: the finest dt in the sweep
    let reference_final = if param == "dt" {
        cells
            .iter()
            .filter(|c| c.run.is_ok())
            .min_by(|a, b| a.value.partial_cmp(&b.value).expect("finite values"))
            .and_then(|c| c.run.as_ref().ok())
            .and_then(|r| r.trajectory.snapshots.last().cloned())
    } else {
        None
    };

    let hash = output::config_hash(raw_config);
    let mut csv = output::hash_line(
        hash,
        &format!("sweep over {param}; verdicts per audit anchor, fitted exponents, extinction times"),
    );
    let anchors = &config.audits;
    let mut header = format!("{param},status");
    for a in anchors {
        header.push_str(&format!(",verdict_{a}"));
    }
    header.push_str(",t_ext,max_energy_residual,fitted_blowups,gap_to_prev,final_state_error\n");
    csv.push_str(&header);

    let mut all_ok = true;
    let mut prev_ok: Option<&SingleRun> = None;
    for cell in &cells {
        match &cell.run {
            Ok(run) => {
                let status = if run.all_pass() { "ok" } else { "audit_failed" };
                if !run.all_pass() {
                    all_ok = false;
                }
                let mut row = format!("{},{status}", cell.value);
                for a in anchors {
                    let verdicts: Vec<&str> = run
                        .reports
                        .iter()
                        .filter(|r| r.anchor == *a || r.anchor.starts_with(&format!("{a}-")))
                        .map(|r| if r.is_pass() { "pass" } else { "fail" })
                        .collect();
                    let cell_text = if verdicts.is_empty() {
                        "-".to_string()
                    } else if verdicts.iter().all(|v| *v == "pass") {
                        "pass".to_string()
                    } else {
                        "fail".to_string()
                    };
                    row.push_str(&format!(",{cell_text}"));
                }
                let t_ext = run
                    .trajectory
                    .extinction_time
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "-".to_string());
                row.push_str(&format!(",{t_ext},{}", run.trajectory.max_energy_residual()));
                let blowups: Vec<String> = run
                    .reports
                    .iter()
                    .filter(|r| r.anchor.starts_with("Prop5.1"))
                    .filter_map(|r| {
                        r.measured
                            .iter()
                            .find(|m| m.name == "fitted_blowup")
                            .map(|m| format!("{}:{}", r.anchor, m.value))
                    })
                    .collect();
                row.push_str(&format!(",{}", blowups.join(";")));

                // successive-run L^2 gap over common snapshots
                let gap = prev_ok.and_then(|prev| {
                    if prev.basis.id() != run.basis.id() {
                        return None;
                    }
                    let n = prev
                        .trajectory
                        .snapshots
                        .len()
                        .min(run.trajectory.snapshots.len());
                    (n > 0).then(|| {
                        (0..n)
                            .map(|k| {
                                run.trajectory.snapshots[k]
                                    .1
                                    .sub(&prev.trajectory.snapshots[k].1)
                                    .l2()
                            })
                            .fold(0.0f64, f64::max)
                    })
                });
                row.push_str(&format!(
                    ",{}",
                    gap.map(|g| g.to_string()).unwrap_or_else(|| "-".to_string())
                ));

                let err = reference_final.as_ref().and_then(|(t_ref, c_ref)| {
                    run.trajectory
                        .snapshots
                        .last()
                        .filter(|(t, _)| (t - t_ref).abs() < 1e-12 * t_ref.max(1.0))
                        .map(|(_, c)| c.sub(c_ref).l2())
                });
                row.push_str(&format!(
                    ",{}\n",
                    err.map(|e| e.to_string()).unwrap_or_else(|| "-".to_string())
                ));
                csv.push_str(&row);
                prev_ok = Some(run);
            }
            Err(e) => {
                all_ok = false;
                let mut row = format!("{},error: {}", cell.value, csv_safe(&e.to_string()));
                for _ in anchors {
                    row.push_str(",-");
                }
                row.push_str(",-,-,-,-,-\n");
                csv.push_str(&row);
                prev_ok = None;
            }
        }
    }
    Ok((csv, all_ok))
}

fn csv_safe(s: &str) -> String {
    s.replace([',', '\n'], ";")
}
