//! The `run` subcommand: execute one configured scenario, write artifacts,
//! return the audit verdicts.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use plapsim_core::estimates::{
    audit_trajectory, heat_oracle_report, reports_to_csv, reports_to_json, trajectory_series,
    AuditOptions, EstimateReport, Verdict,
};
use plapsim_core::exponents::exponents;
use plapsim_core::solver::{continuation, initial_coeffs, solve_parabolic, ContinuationReport};
use plapsim_core::{Basis64, Trajectory64};

use crate::config::{ExperimentConfig, TolOverrides};
use crate::output;

pub struct SingleRun {
    pub basis: Basis64,
    pub trajectory: Trajectory64,
    pub continuation: Option<ContinuationReport<f64>>,
    pub reports: Vec<EstimateReport>,
}

impl SingleRun {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.is_pass())
    }
}

/// Solves the configured scenario and evaluates the selected audits.
pub fn run_single(
    config: &ExperimentConfig,
    seed: Option<u64>,
    overrides: &TolOverrides,
) -> Result<SingleRun> {
    let basis = config.build_basis()?;
    let u0 = initial_coeffs(&config.initial_data(seed), &basis)?;
    let cfg = config.solver_config();

    let mut continuation_report = None;
    let trajectory = if let Some(ladders) = &config.ladders {
        let (mut entries, report) = continuation(
            &u0,
            &basis,
            &cfg,
            &ladders.mu,
            &ladders.nu,
            config.limit_order(),
        )?;
        continuation_report = Some(report);
        entries
            .pop()
            .ok_or_else(|| anyhow!("continuation produced no ladder entries"))?
            .trajectory
    } else {
        solve_parabolic(&u0, &basis, &cfg)?
    };

    let mut audit_opts = config.audit_options.clone();
    overrides.apply(&mut audit_opts);

    let selected = &config.audits;
    let needs_trajectory_audit = selected.iter().any(|a| {
        matches!(
            a.as_str(),
            "Def1.1-grad" | "Def1.1-ut" | "Prop5.1" | "Thm1.7" | "Eq1.12" | "Extinction"
        )
    });

    let mut reports = Vec::new();
    if needs_trajectory_audit {
        let n = basis.dim();
        if n < 2 {
            bail!("trajectory audits use the exponent formulas, which need n >= 2");
        }
        let exps = exponents(
            cfg.p,
            n,
            audit_opts.q_list[0],
            basis.domain().hessian_constant(),
        )?;
        let opts = AuditOptions {
            q_list: audit_opts.q_list.clone(),
            fit_window: audit_opts.fit_window,
            exponent_tol: audit_opts.exponent_tol,
            data_q: audit_opts.data_q,
            maxmod_slack: audit_opts.maxmod_slack,
        };
        let all = audit_trajectory(&trajectory, &basis, &exps, &opts)
            .context("running the trajectory audits")?;
        reports.extend(
            all.into_iter()
                .filter(|r| selected.iter().any(|sel| anchor_matches(&r.anchor, sel))),
        );
    }
    if selected.iter().any(|a| a == "HeatOracle") {
        reports.push(heat_oracle_report(&trajectory, &basis)?);
    }
    if selected.iter().any(|a| a == "EnergyIdentity") {
        let worst = trajectory.max_energy_residual();
        let verdict = if worst <= 1e-8 { Verdict::Pass } else { Verdict::Fail };
        reports.push(
            EstimateReport::new(
                "EnergyIdentity",
                "per-step discrete energy balance residual",
                "residual <= 1e-8 relative",
                1e-8,
                verdict,
            )
            .with_measured("max_residual", worst)
            .with_measured("steps", trajectory.diagnostics.len() as f64),
        );
    }
    if selected.iter().any(|a| a == "Continuation") {
        match &continuation_report {
            Some(rep) => {
                let monotone = rep.gaps.windows(2).all(|w| w[1] <= w[0]);
                let verdict = if monotone { Verdict::Pass } else { Verdict::Fail };
                let mut r = EstimateReport::new(
                    "Continuation",
                    "successive L^2 gaps along the ladder are nonincreasing",
                    "gap_{k+1} <= gap_k",
                    0.0,
                    verdict,
                );
                for (k, gap) in rep.gaps.iter().enumerate() {
                    r = r.with_measured(format!("gap_{k}"), *gap);
                }
                reports.push(r);
            }
            None => bail!("the Continuation audit needs /ladders in the config"),
        }
    }

    Ok(SingleRun {
        basis,
        trajectory,
        continuation: continuation_report,
        reports,
    })
}

fn anchor_matches(report_anchor: &str, selected: &str) -> bool {
    report_anchor == selected || report_anchor.starts_with(&format!("{selected}-"))
}

/// Writes the run artifacts next to each other under `out_dir`.
pub fn write_artifacts(
    config: &ExperimentConfig,
    raw_config: &[u8],
    run: &SingleRun,
    out_dir: &Path,
) -> Result<()> {
    let hash = output::config_hash(raw_config);
    let stem = config.scenario.replace(['/', ' '], "_");

    let traj_csv = output::trajectory_csv(&run.trajectory, &run.basis, hash);
    output::write_text(&out_dir.join(format!("{stem}_trajectory.csv")), &traj_csv)?;

    let series = trajectory_series(&run.trajectory, &run.basis, &config.audit_options.q_list)?;
    // the ut_Lq column reports the first non-L^2 index when one is listed
    let q = config
        .audit_options
        .q_list
        .iter()
        .copied()
        .find(|q| (*q - 2.0).abs() > 1e-12)
        .unwrap_or(config.audit_options.q_list[0]);
    let norms_csv = output::norm_series_csv(&series, q, hash);
    output::write_text(&out_dir.join(format!("{stem}_norms.csv")), &norms_csv)?;

    if let Some(rep) = &run.continuation {
        let mut csv = output::hash_line(hash, "ladder entries and successive L^2 gaps");
        csv.push_str("entry,mu,nu,gap_to_next\n");
        for (k, (mu, nu)) in rep.ladder.iter().enumerate() {
            let gap = rep
                .gaps
                .get(k)
                .map(|g| g.to_string())
                .unwrap_or_default();
            csv.push_str(&format!("{k},{mu},{nu},{gap}\n"));
        }
        output::write_text(&out_dir.join(format!("{stem}_continuation.csv")), &csv)?;
    }

    output::write_text(
        &out_dir.join(format!("{stem}_reports.json")),
        &reports_to_json(&run.reports)?,
    )?;
    let reports_csv = format!(
        "{}{}",
        output::hash_line(hash, "audit verdicts; measured values are dimensionless or norm-valued"),
        reports_to_csv(&run.reports)
    );
    output::write_text(&out_dir.join(format!("{stem}_reports.csv")), &reports_csv)?;
    Ok(())
}
