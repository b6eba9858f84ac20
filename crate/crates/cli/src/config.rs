//! Experiment configuration: versioned JSON schema, semantic validation
//! with JSON-pointer-style paths, and conversion into solver types.

use serde::{Deserialize, Serialize};

use plapsim_core::basis::Domain;
use plapsim_core::solver::{log_spaced, DtPolicy, InitialData, LimitOrder, SolverConfig};
use plapsim_core::Basis64;

use crate::registry::Registry;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: String,
    pub domain: DomainSpec,
    pub basis: BasisSpec,
    pub initial_data: InitialDataSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub ladders: Option<LadderSpec>,
    #[serde(default)]
    pub audits: Vec<String>,
    #[serde(default)]
    pub audit_options: AuditOptionsSpec,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub side_lengths: Vec<f64>,
    #[serde(default = "one")]
    pub hessian_constant: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub modes_per_dim: usize,
    #[serde(default = "two_usize")]
    pub oversample: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDataSpec {
    Smooth {
        #[serde(default = "one")]
        amplitude: f64,
    },
    RoughL2 {
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    W12NotW22 {
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    LinfIndicator {
        #[serde(default = "one")]
        amplitude: f64,
    },
    Mode {
        mode: Vec<usize>,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub p: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
    pub t_end: f64,
    pub dt_init: f64,
    #[serde(default)]
    pub dt_policy: DtPolicySpec,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max")]
    pub picard_max: usize,
    pub snapshots: SnapshotSpec,
    #[serde(default)]
    pub stop_at_extinction: bool,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicySpec {
    #[default]
    Fixed,
    Adaptive {
        target_step_error: f64,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SnapshotSpec {
    /// Log-spaced from `t_first` to `t_last` (default `t_end`).
    Log {
        t_first: f64,
        count: usize,
        #[serde(default)]
        t_last: Option<f64>,
    },
    /// Uniformly spaced from `t_first` to `t_last` (default `t_end`).
    Linear {
        t_first: f64,
        count: usize,
        #[serde(default)]
        t_last: Option<f64>,
    },
    List {
        times: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default)]
    pub nu: Vec<f64>,
    #[serde(default)]
    pub order: LadderOrder,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LadderOrder {
    /// Viscosity first, then the regularization (the analysis order).
    #[default]
    NuThenMu,
    /// Exploration order, not covered by the estimates.
    MuThenNu,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOptionsSpec {
    #[serde(default = "default_q_list")]
    pub q_list: Vec<f64>,
    #[serde(default = "default_exponent_tol")]
    pub exponent_tol: f64,
    #[serde(default = "two")]
    pub data_q: f64,
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default = "default_maxmod_slack")]
    pub maxmod_slack: f64,
}

impl Default for AuditOptionsSpec {
    fn default() -> Self {
        AuditOptionsSpec {
            q_list: default_q_list(),
            exponent_tol: default_exponent_tol(),
            data_q: two(),
            fit_window: None,
            maxmod_slack: default_maxmod_slack(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn two_usize() -> usize {
    2
}
fn default_picard_tol() -> f64 {
    1e-10
}
fn default_picard_max() -> usize {
    200
}
fn default_q_list() -> Vec<f64> {
    vec![2.0]
}
fn default_exponent_tol() -> f64 {
    0.15
}
fn default_maxmod_slack() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Semantic validation; each finding carries a JSON-pointer-style path.
    pub fn validate(&self, registry: &Registry) -> Vec<String> {
        let mut errs = Vec::new();
        if self.schema_version != 1 {
            errs.push(format!(
                "/schema_version: unsupported version {}, expected 1",
                self.schema_version
            ));
        }
        if self.scenario.is_empty() {
            errs.push("/scenario: must not be empty".to_string());
        }
        let dim = self.domain.side_lengths.len();
        if !(1..=2).contains(&dim) {
            errs.push(format!(
                "/domain/side_lengths: expected 1 or 2 entries, found {dim}"
            ));
        }
        for (i, &len) in self.domain.side_lengths.iter().enumerate() {
            if !(len > 0.0) || !len.is_finite() {
                errs.push(format!(
                    "/domain/side_lengths/{i}: must be a positive finite length, got {len}"
                ));
            }
        }
        if !(self.domain.hessian_constant >= 1.0) {
            errs.push(format!(
                "/domain/hessian_constant: must be >= 1, got {}",
                self.domain.hessian_constant
            ));
        }
        if self.basis.modes_per_dim < 1 {
            errs.push("/basis/modes_per_dim: must be >= 1".to_string());
        }
        if self.basis.oversample < 2 {
            errs.push(format!(
                "/basis/oversample: must be >= 2, got {}",
                self.basis.oversample
            ));
        }
        let s = &self.solver;
        if !(s.p > 1.0 && s.p <= 2.0) {
            errs.push(format!(
                "/solver/p: must lie in the admissible range (1, 2], got {}",
                s.p
            ));
        }
        if !(s.mu >= 0.0) {
            errs.push(format!("/solver/mu: must be >= 0, got {}", s.mu));
        }
        if !(s.nu >= 0.0) {
            errs.push(format!("/solver/nu: must be >= 0, got {}", s.nu));
        }
        if !(s.t_end > 0.0) {
            errs.push(format!("/solver/t_end: must be > 0, got {}", s.t_end));
        }
        if !(s.dt_init > 0.0) {
            errs.push(format!("/solver/dt_init: must be > 0, got {}", s.dt_init));
        }
        if !(s.picard_tol > 0.0) {
            errs.push("/solver/picard_tol: must be > 0".to_string());
        }
        if let DtPolicySpec::Adaptive { target_step_error } = s.dt_policy {
            if !(target_step_error > 0.0) {
                errs.push("/solver/dt_policy/target_step_error: must be > 0".to_string());
            }
        }
        match &s.snapshots {
            SnapshotSpec::Log { t_first, count, t_last }
            | SnapshotSpec::Linear { t_first, count, t_last } => {
                if !(*t_first > 0.0) {
                    errs.push("/solver/snapshots/t_first: must be > 0".to_string());
                }
                if *count < 2 {
                    errs.push("/solver/snapshots/count: must be >= 2".to_string());
                }
                let last = t_last.unwrap_or(s.t_end);
                if !(last > *t_first) {
                    errs.push("/solver/snapshots/t_last: must exceed t_first".to_string());
                }
                if last > s.t_end * (1.0 + 1e-12) {
                    errs.push("/solver/snapshots/t_last: must not exceed t_end".to_string());
                }
            }
            SnapshotSpec::List { times } => {
                if times.is_empty() {
                    errs.push("/solver/snapshots/times: must not be empty".to_string());
                }
                for (i, &t) in times.iter().enumerate() {
                    if !(t > 0.0 && t <= s.t_end * (1.0 + 1e-12)) {
                        errs.push(format!(
                            "/solver/snapshots/times/{i}: {t} outside (0, t_end]"
                        ));
                    }
                }
            }
        }
        if let Some(ladders) = &self.ladders {
            for (name, ladder, allow_zero_last) in
                [("mu", &ladders.mu, true), ("nu", &ladders.nu, true)]
            {
                for (i, &v) in ladder.iter().enumerate() {
                    if v < 0.0 || (!allow_zero_last && v == 0.0) {
                        errs.push(format!("/ladders/{name}/{i}: must be nonnegative"));
                    }
                    if i > 0 && !(v < ladder[i - 1]) {
                        errs.push(format!(
                            "/ladders/{name}/{i}: ladder must be strictly descending"
                        ));
                    }
                }
            }
        }
        for (i, anchor) in self.audits.iter().enumerate() {
            if !registry.contains(anchor) {
                errs.push(format!(
                    "/audits/{i}: unknown anchor `{anchor}` (not in the registry)"
                ));
            } else if !registry.trajectory_anchor(anchor) {
                errs.push(format!(
                    "/audits/{i}: anchor `{anchor}` has no per-run audit; use `plapsim verify`"
                ));
            }
        }
        for (i, &q) in self.audit_options.q_list.iter().enumerate() {
            if !(q > 1.0) {
                errs.push(format!("/audit_options/q_list/{i}: must be > 1, got {q}"));
            }
        }
        if !(self.audit_options.exponent_tol > 0.0) {
            errs.push("/audit_options/exponent_tol: must be > 0".to_string());
        }
        errs
    }

    pub fn build_domain(&self) -> anyhow::Result<Domain<f64>> {
        Ok(Domain::with_hessian_constant(
            &self.domain.side_lengths,
            self.domain.hessian_constant,
        )?)
    }

    pub fn build_basis(&self) -> anyhow::Result<Basis64> {
        Ok(Basis64::build(
            self.build_domain()?,
            self.basis.modes_per_dim,
            self.basis.oversample,
        )?)
    }

    /// Initial datum with an optional seed override from the command line.
    pub fn initial_data(&self, seed_override: Option<u64>) -> InitialData<f64> {
        match &self.initial_data {
            InitialDataSpec::Smooth { amplitude } => InitialData::Smooth { amplitude: *amplitude },
            InitialDataSpec::RoughL2 { seed, amplitude } => InitialData::RoughL2 {
                seed: seed_override.unwrap_or(*seed),
                amplitude: *amplitude,
            },
            InitialDataSpec::W12NotW22 { seed, amplitude } => InitialData::W12NotW22 {
                seed: seed_override.unwrap_or(*seed),
                amplitude: *amplitude,
            },
            InitialDataSpec::LinfIndicator { amplitude } => {
                InitialData::LinfIndicator { amplitude: *amplitude }
            }
            InitialDataSpec::Mode { mode, amplitude } => InitialData::Mode {
                mode: mode.clone(),
                amplitude: *amplitude,
            },
        }
    }

    pub fn solver_config(&self) -> SolverConfig<f64> {
        let s = &self.solver;
        let snapshots = match &s.snapshots {
            SnapshotSpec::Log { t_first, count, t_last } => {
                log_spaced(*t_first, t_last.unwrap_or(s.t_end), *count)
            }
            SnapshotSpec::Linear { t_first, count, t_last } => {
                let last = t_last.unwrap_or(s.t_end);
                (0..*count)
                    .map(|i| t_first + (last - t_first) * i as f64 / (*count as f64 - 1.0))
                    .collect()
            }
            SnapshotSpec::List { times } => times.clone(),
        };
        let mut cfg = SolverConfig::new(s.p, s.mu, s.nu, s.t_end, s.dt_init)
            .with_snapshots(snapshots);
        cfg.picard_tol = s.picard_tol;
        cfg.picard_max = s.picard_max;
        cfg.stop_at_extinction = s.stop_at_extinction;
        cfg.dt_policy = match s.dt_policy {
            DtPolicySpec::Fixed => DtPolicy::Fixed,
            DtPolicySpec::Adaptive { target_step_error } => {
                DtPolicy::Adaptive { target_step_error }
            }
        };
        cfg
    }

    pub fn limit_order(&self) -> LimitOrder {
        match self.ladders.as_ref().map(|l| l.order).unwrap_or_default() {
            LadderOrder::NuThenMu => LimitOrder::NuThenMu,
            LadderOrder::MuThenNu => LimitOrder::MuThenNu,
        }
    }
}

/// Tolerance overrides accepted on the command line as a JSON object.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolOverrides {
    #[serde(default)]
    pub exponent_tol: Option<f64>,
    #[serde(default)]
    pub maxmod_slack: Option<f64>,
}

impl TolOverrides {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("--tol-overrides parse error: {e}"))
    }

    pub fn apply(&self, opts: &mut AuditOptionsSpec) {
        if let Some(v) = self.exponent_tol {
            opts.exponent_tol = v;
        }
        if let Some(v) = self.maxmod_slack {
            opts.maxmod_slack = v;
        }
    }
}
