//! Time integration of the regularized Galerkin system, parameter
//! continuation, the dual linear parabolic solve and the elliptic solve.
//!
//! The coefficient ODE is `c' = -nu Lambda c - d(c)` with the nonlinear
//! load `d` of [`crate::operators::nonlinear_load`]. Steps are implicit
//! Euler with a lagged-diffusivity (Kacanov) iteration: each Picard pass
//! freezes the diffusivity at the previous iterate and solves the linear
//! system `(I + dt nu Lambda + dt K_a) c = c_prev` by preconditioned
//! conjugate gradients, matrix-free through the spectral transforms. The
//! diffusivity bound blows up along the mu-ladder, so the stiffness must
//! sit inside the linear solve; explicit schemes lose their stable step
//! entirely as mu tends to zero.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{EigenBasis, GridFunction, SpectralCoeffs};
use crate::error::Error;
use crate::operators::{diffusive_flux, frozen_coefficient, nonlinear_load, dual_tensor};
use crate::scalar::{as_f64, real, Real};
use crate::Result;

/// Time-step selection policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy<S> {
    Fixed,
    /// Step doubling: accept two half steps when the full-vs-half defect
    /// stays below the target, otherwise halve and retry.
    Adaptive { target_step_error: S },
}

/// Parameters of a parabolic solve.
#[derive(Debug, Clone)]
pub struct SolverConfig<S> {
    pub p: S,
    pub mu: S,
    pub nu: S,
    pub t_end: S,
    pub dt_init: S,
    pub dt_policy: DtPolicy<S>,
    pub picard_tol: S,
    pub picard_max: usize,
    pub cg_tol: S,
    pub cg_max: usize,
    pub snapshot_times: Vec<S>,
    /// L^2 level below which the state counts as extinct.
    pub extinction_threshold: S,
    /// Stop stepping once the extinction threshold is crossed.
    pub stop_at_extinction: bool,
}

impl<S: Real> SolverConfig<S> {
    pub fn new(p: S, mu: S, nu: S, t_end: S, dt_init: S) -> Self {
        SolverConfig {
            p,
            mu,
            nu,
            t_end,
            dt_init,
            dt_policy: DtPolicy::Fixed,
            picard_tol: real(1e-10),
            picard_max: 200,
            cg_tol: real(1e-12),
            cg_max: 600,
            snapshot_times: Vec::new(),
            extinction_threshold: real(1e-10),
            stop_at_extinction: false,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<S>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_policy(mut self, policy: DtPolicy<S>) -> Self {
        self.dt_policy = policy;
        self
    }

    pub fn stopping_at_extinction(mut self) -> Self {
        self.stop_at_extinction = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let two = real::<S>(2.0);
        if !(self.p > S::one() && self.p <= two) {
            return Err(Error::invalid("p", format!("expected p in (1, 2], got {}", self.p)));
        }
        if !(self.mu >= S::zero()) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", format!("expected mu >= 0, got {}", self.mu)));
        }
        if !(self.nu >= S::zero()) || !self.nu.is_finite() {
            return Err(Error::invalid("nu", format!("expected nu >= 0, got {}", self.nu)));
        }
        if !(self.t_end > S::zero()) {
            return Err(Error::invalid("t_end", format!("expected t_end > 0, got {}", self.t_end)));
        }
        if !(self.dt_init > S::zero()) {
            return Err(Error::invalid("dt_init", format!("expected dt_init > 0, got {}", self.dt_init)));
        }
        if !(self.picard_tol > S::zero()) || !(self.cg_tol > S::zero()) {
            return Err(Error::invalid("tolerances", "must be positive".to_string()));
        }
        if let DtPolicy::Adaptive { target_step_error } = self.dt_policy {
            if !(target_step_error > S::zero()) {
                return Err(Error::invalid(
                    "dt_policy",
                    "adaptive target step error must be positive".to_string(),
                ));
            }
        }
        for &t in &self.snapshot_times {
            if !(t > S::zero() && t <= self.t_end * (S::one() + real(1e-12))) {
                return Err(Error::invalid(
                    "snapshot_times",
                    format!("snapshot time {t} outside (0, t_end]"),
                ));
            }
        }
        Ok(())
    }
}

/// Per accepted step: iteration counts and the discrete energy-identity
/// residual, evaluated at the implicit endpoint.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics<S> {
    pub t: S,
    pub dt: S,
    pub picard_iters: usize,
    pub cg_iters: usize,
    pub energy_residual: S,
}

/// A solved evolution: time-stamped coefficient snapshots plus solver
/// metadata.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub config: SolverConfig<S>,
    pub basis_id: u64,
    /// `(t, c(t))`, including the initial state at `t = 0`.
    pub snapshots: Vec<(S, SpectralCoeffs<S>)>,
    /// Backward difference quotients `(c(t_k) - c(t_k - dt_k)) / dt_k`
    /// at the positive snapshot times; the scheme's own time derivative.
    pub ut: Vec<(S, SpectralCoeffs<S>)>,
    pub diagnostics: Vec<StepDiagnostics<S>>,
    /// First time the L^2 norm fell below the extinction threshold.
    pub extinction_time: Option<S>,
    /// Largest step-to-step L^2 jump (discrete continuity-in-time proxy).
    pub l2_jump_max: S,
}

impl<S: Real> Trajectory<S> {
    /// Coefficients at an arbitrary time inside the snapshot range, by
    /// linear interpolation between snapshots.
    pub fn interpolate(&self, t: S) -> Result<SpectralCoeffs<S>> {
        let times: Vec<S> = self.snapshots.iter().map(|(s, _)| *s).collect();
        if times.is_empty() {
            return Err(Error::invalid("trajectory", "no snapshots".to_string()));
        }
        let t0 = times[0];
        let t1 = times[times.len() - 1];
        let eps = real::<S>(1e-12) * (S::one() + t1.abs());
        if t < t0 - eps || t > t1 + eps {
            return Err(Error::invalid(
                "t",
                format!("time {t} outside the covered range [{t0}, {t1}]"),
            ));
        }
        let t = t.max(t0).min(t1);
        let hi = times.partition_point(|&s| s < t).min(times.len() - 1);
        if hi == 0 || times[hi] == t {
            return Ok(self.snapshots[hi].1.clone());
        }
        let lo = hi - 1;
        let (ta, ca) = &self.snapshots[lo];
        let (tb, cb) = &self.snapshots[hi];
        let theta = (t - *ta) / (*tb - *ta);
        Ok(ca.scaled(S::one() - theta).add_scaled(theta, cb))
    }

    pub fn max_energy_residual(&self) -> S {
        self.diagnostics
            .iter()
            .map(|d| d.energy_residual)
            .fold(S::zero(), |a, b| a.max(b))
    }
}

/// Log-spaced times in `[lo, hi]`, endpoints included.
pub fn log_spaced<S: Real>(lo: S, hi: S, count: usize) -> Vec<S> {
    assert!(count >= 2 && lo > S::zero() && hi > lo);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            let theta = real::<S>(i as f64) / real::<S>((count - 1) as f64);
            (ln_lo + theta * (ln_hi - ln_lo)).exp()
        })
        .collect()
}

struct LinearSolveOutcome<S> {
    x: Array2<S>,
    iters: usize,
    converged: bool,
}

/// Preconditioned conjugate gradients on coefficient blocks; `precond`
/// holds one inverse-free diagonal entry per mode (applied to all vector
/// components alike).
fn cg_solve<S: Real>(
    apply: &mut dyn FnMut(&Array2<S>) -> Result<Array2<S>>,
    rhs: &Array2<S>,
    x0: Array2<S>,
    precond: &[S],
    rel_tol: S,
    max_iter: usize,
) -> Result<LinearSolveOutcome<S>> {
    let dot = |a: &Array2<S>, b: &Array2<S>| -> S {
        a.iter().zip(b.iter()).map(|(&x, &y)| x * y).fold(S::zero(), |s, v| s + v)
    };
    let apply_precond = |r: &Array2<S>| -> Array2<S> {
        let mut z = r.clone();
        for (j, mut row) in z.rows_mut().into_iter().enumerate() {
            let m = precond[j];
            row.mapv_inplace(|v| v / m);
        }
        z
    };

    let norm_b = dot(rhs, rhs).sqrt();
    if norm_b == S::zero() {
        return Ok(LinearSolveOutcome {
            x: Array2::zeros(rhs.raw_dim()),
            iters: 0,
            converged: true,
        });
    }
    let stop = rel_tol * norm_b;

    let mut x = x0;
    let mut r = rhs - &apply(&x)?;
    if dot(&r, &r).sqrt() <= stop {
        return Ok(LinearSolveOutcome { x, iters: 0, converged: true });
    }
    let mut z = apply_precond(&r);
    let mut pdir = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&pdir)?;
        let denom = dot(&pdir, &ap);
        if !(denom > S::zero()) {
            // loss of positivity signals a broken operator; bail out
            return Ok(LinearSolveOutcome { x, iters: it, converged: false });
        }
        let alpha = rz / denom;
        ndarray::Zip::from(&mut x).and(&pdir).for_each(|a, &b| *a += alpha * b);
        ndarray::Zip::from(&mut r).and(&ap).for_each(|a, &b| *a -= alpha * b);
        if dot(&r, &r).sqrt() <= stop {
            return Ok(LinearSolveOutcome { x, iters: it, converged: true });
        }
        z = apply_precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        ndarray::Zip::from(&mut pdir).and(&z).for_each(|a, &b| *a = b + beta * *a);
    }
    Ok(LinearSolveOutcome { x, iters: max_iter, converged: false })
}

struct StepOutcome<S> {
    c: SpectralCoeffs<S>,
    picard_iters: usize,
    cg_iters: usize,
}

/// One implicit Euler step of size `dt` with lagged diffusivity.
fn implicit_step<S: Real>(
    basis: &EigenBasis<S>,
    cfg: &SolverConfig<S>,
    c_in: &SpectralCoeffs<S>,
    dt: S,
) -> Result<StepOutcome<S>> {
    let eigen = basis.eigenvalues();
    let mut w = c_in.clone();
    let mut cg_total = 0;
    let mut last_change = S::infinity();
    for iter in 1..=cfg.picard_max {
        let grad = basis.spectral_gradient(&w)?;
        let a_nodes = frozen_coefficient(&grad, cfg.mu, cfg.p)?;
        let a_mean = a_nodes.iter().copied().fold(S::zero(), |s, v| s + v)
            / real::<S>(a_nodes.len() as f64);
        let precond: Vec<S> = eigen
            .iter()
            .map(|&l| S::one() + dt * (cfg.nu + a_mean) * l)
            .collect();
        let mut apply = |x: &Array2<S>| -> Result<Array2<S>> {
            let xc = SpectralCoeffs::from_values(basis, x.clone())?;
            let kx = crate::operators::weighted_stiffness_apply(&a_nodes, &xc, basis)?;
            let mut out = x.clone();
            for (j, &l) in eigen.iter().enumerate() {
                for comp in 0..out.ncols() {
                    out[[j, comp]] += dt * (cfg.nu * l * x[[j, comp]] + kx.values()[[j, comp]]);
                }
            }
            Ok(out)
        };
        let solved = cg_solve(
            &mut apply,
            c_in.values(),
            w.values().clone(),
            &precond,
            cfg.cg_tol,
            cfg.cg_max,
        )?;
        cg_total += solved.iters;
        if !solved.converged {
            return Err(Error::PicardFailure {
                t: f64::NAN,
                dt_floor: as_f64(dt),
                last_change: f64::NAN,
                tol: as_f64(cfg.cg_tol),
                iterations: iter,
            });
        }
        let c_new = SpectralCoeffs::from_values(basis, solved.x)?;
        let change = c_new.sub(&w).l2();
        let scale = S::one().max(c_new.l2());
        last_change = change / scale;
        if last_change <= cfg.picard_tol {
            return Ok(StepOutcome {
                c: c_new,
                picard_iters: iter,
                cg_iters: cg_total,
            });
        }
        w = c_new;
    }
    Err(Error::PicardFailure {
        t: f64::NAN,
        dt_floor: as_f64(dt),
        last_change: as_f64(last_change),
        tol: as_f64(cfg.picard_tol),
        iterations: cfg.picard_max,
    })
}

/// Energy-identity residual of one accepted step, evaluated at the
/// implicit endpoint: the discrete pairing `<c1 - c0, c1>` stands in for
/// the `d/dt (1/2)|v|_2^2` term of the balance
/// `1/2 d/dt |v|^2 + nu |grad v|^2 + |a^(1/2) grad v|^2 = 0`.
fn energy_residual<S: Real>(
    basis: &EigenBasis<S>,
    cfg: &SolverConfig<S>,
    c_old: &SpectralCoeffs<S>,
    c_new: &SpectralCoeffs<S>,
    dt: S,
) -> Result<S> {
    let mut pairing = S::zero();
    for (a, b) in c_new.values().iter().zip(c_old.values().iter()) {
        pairing += (*a - *b) * *a;
    }
    let mut nu_term = S::zero();
    for (j, &l) in basis.eigenvalues().iter().enumerate() {
        for comp in 0..c_new.comps() {
            let v = c_new.values()[[j, comp]];
            nu_term += l * v * v;
        }
    }
    nu_term *= cfg.nu;
    let grad = basis.spectral_gradient(c_new)?;
    let w = basis.grid().weight();
    let half_p = cfg.p / real(2.0);
    let exp = (cfg.p - real(2.0)) / real(2.0);
    let mut a_term = S::zero();
    for node in 0..grad.node_count() {
        let g2 = grad.magnitude_sq(node);
        let contrib = if cfg.mu == S::zero() {
            g2.powf(half_p)
        } else {
            g2 * (cfg.mu + g2).powf(exp)
        };
        a_term += contrib;
    }
    a_term *= w;
    let resid = pairing + dt * (nu_term + a_term);
    let scale = S::one().max(c_new.l2().powi(2));
    Ok(resid.abs() / scale)
}

/// Integrates the regularized Galerkin system from `u0` to `cfg.t_end`.
pub fn solve_parabolic<S: Real>(
    u0: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
    cfg: &SolverConfig<S>,
) -> Result<Trajectory<S>> {
    cfg.validate()?;
    if u0.basis_id() != basis.id() {
        return Err(Error::BasisMismatch {
            expected: basis.id(),
            found: u0.basis_id(),
        });
    }
    let mut snap_times = cfg.snapshot_times.clone();
    snap_times.sort_by(|a, b| a.partial_cmp(b).expect("snapshot times are finite"));
    snap_times.dedup_by(|a, b| *a == *b);

    let dt_floor = cfg.dt_init * real::<S>(2f64.powi(-20));
    let mut traj = Trajectory {
        config: cfg.clone(),
        basis_id: basis.id(),
        snapshots: vec![(S::zero(), u0.clone())],
        ut: Vec::new(),
        diagnostics: Vec::new(),
        extinction_time: None,
        l2_jump_max: S::zero(),
    };

    let mut t = S::zero();
    let mut c = u0.clone();
    let mut dt_nominal = cfg.dt_init;
    let mut next_snap = 0usize;
    let eps_t = real::<S>(1e-12) * cfg.t_end.max(S::one());

    'time: while t < cfg.t_end - eps_t {
        // next event: snapshot or horizon
        let t_event = if next_snap < snap_times.len() {
            snap_times[next_snap].min(cfg.t_end)
        } else {
            cfg.t_end
        };
        let mut dt = dt_nominal.min(t_event - t).max(dt_floor);

        // attempt the step, halving on Picard failure
        let accepted: Vec<(S, SpectralCoeffs<S>, StepOutcome<S>)> = loop {
            let attempt: Result<Vec<(S, SpectralCoeffs<S>, StepOutcome<S>)>> =
                (|| match cfg.dt_policy {
                    DtPolicy::Fixed => {
                        let out = implicit_step(basis, cfg, &c, dt)?;
                        Ok(vec![(t + dt, out.c.clone(), out)])
                    }
                    DtPolicy::Adaptive { target_step_error } => {
                        let full = implicit_step(basis, cfg, &c, dt)?;
                        let half = dt / real(2.0);
                        let first = implicit_step(basis, cfg, &c, half)?;
                        let second = implicit_step(basis, cfg, &first.c, half)?;
                        let defect = full.c.sub(&second.c).l2();
                        if defect > target_step_error && dt > dt_floor * real(2.0) {
                            return Err(Error::PicardFailure {
                                t: as_f64(t),
                                dt_floor: as_f64(dt_floor),
                                last_change: as_f64(defect),
                                tol: as_f64(target_step_error),
                                iterations: 0,
                            });
                        }
                        // commit the more accurate pair of half steps
                        if defect < target_step_error / real(8.0) {
                            dt_nominal = (dt_nominal * real(1.5)).min(cfg.dt_init * real(1024.0));
                        }
                        Ok(vec![
                            (t + half, first.c.clone(), first),
                            (t + dt, second.c.clone(), second),
                        ])
                    }
                })();
            match attempt {
                Ok(steps) => break steps,
                Err(Error::PicardFailure {
                    last_change,
                    iterations,
                    ..
                }) => {
                    if dt <= dt_floor * (S::one() + real(1e-9)) {
                        return Err(Error::PicardFailure {
                            t: as_f64(t),
                            dt_floor: as_f64(dt_floor),
                            last_change,
                            tol: as_f64(cfg.picard_tol),
                            iterations,
                        });
                    }
                    dt = (dt / real(2.0)).max(dt_floor);
                }
                Err(other) => return Err(other),
            }
        };

        for (t_new, c_new, out) in accepted {
            let step_dt = t_new - t;
            let resid = energy_residual(basis, cfg, &c, &c_new, step_dt)?;
            traj.diagnostics.push(StepDiagnostics {
                t: t_new,
                dt: step_dt,
                picard_iters: out.picard_iters,
                cg_iters: out.cg_iters,
                energy_residual: resid,
            });
            let jump = c_new.sub(&c).l2();
            traj.l2_jump_max = traj.l2_jump_max.max(jump);

            t = t_new;
            let prev = std::mem::replace(&mut c, c_new);

            while next_snap < snap_times.len() && t >= snap_times[next_snap] - eps_t {
                traj.snapshots.push((snap_times[next_snap], c.clone()));
                let quotient = c.sub(&prev).scaled(step_dt.recip());
                traj.ut.push((snap_times[next_snap], quotient));
                next_snap += 1;
            }

            if traj.extinction_time.is_none() && c.l2() < cfg.extinction_threshold {
                traj.extinction_time = Some(t);
                if cfg.stop_at_extinction {
                    break 'time;
                }
            }
        }

        // recover the nominal step after forced halvings
        if matches!(cfg.dt_policy, DtPolicy::Fixed) {
            dt_nominal = cfg.dt_init;
        }
    }
    Ok(traj)
}

/// Which parameter the continuation relaxes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitOrder {
    /// Viscosity first at fixed mu, then the mu-ladder (the analysis order).
    NuThenMu,
    /// Exploration order, not covered by the estimates.
    MuThenNu,
}

#[derive(Debug, Clone)]
pub struct ContinuationEntry<S> {
    pub mu: S,
    pub nu: S,
    pub trajectory: Trajectory<S>,
}

#[derive(Debug, Clone)]
pub struct ContinuationReport<S> {
    /// `(mu, nu)` per ladder entry, in execution order.
    pub ladder: Vec<(S, S)>,
    /// Successive max-over-snapshots L^2 gaps between consecutive entries.
    pub gaps: Vec<S>,
    /// Number of leading entries that belong to the first phase.
    pub first_phase_len: usize,
    /// Sup-norm never exceeded its initial value (plus slack) on any entry.
    pub max_modulus_preserved: bool,
}

/// Runs one trajectory per ladder point and reports the Cauchy gaps.
pub fn continuation<S: Real>(
    u0: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
    cfg: &SolverConfig<S>,
    mu_ladder: &[S],
    nu_ladder: &[S],
    order: LimitOrder,
) -> Result<(Vec<ContinuationEntry<S>>, ContinuationReport<S>)> {
    let check_ladder = |name: &'static str, ladder: &[S], allow_zero_last: bool| -> Result<()> {
        for (i, &v) in ladder.iter().enumerate() {
            let positive_needed = !(allow_zero_last && i + 1 == ladder.len());
            if positive_needed && !(v > S::zero()) {
                return Err(Error::invalid(name, format!("entry {i} must be positive")));
            }
            if !(v >= S::zero()) {
                return Err(Error::invalid(name, format!("entry {i} must be nonnegative")));
            }
            if i > 0 && !(v < ladder[i - 1]) {
                return Err(Error::invalid(name, "ladder must be strictly descending".to_string()));
            }
        }
        Ok(())
    };
    check_ladder("mu_ladder", mu_ladder, true)?;
    check_ladder("nu_ladder", nu_ladder, true)?;

    let mut points: Vec<(S, S)> = Vec::new();
    match order {
        LimitOrder::NuThenMu => {
            let mu_hold = mu_ladder.first().copied().unwrap_or(cfg.mu);
            for &nu in nu_ladder {
                points.push((mu_hold, nu));
            }
            let nu_hold = nu_ladder.last().copied().unwrap_or(cfg.nu);
            for &mu in mu_ladder {
                if points.last() != Some(&(mu, nu_hold)) {
                    points.push((mu, nu_hold));
                }
            }
        }
        LimitOrder::MuThenNu => {
            let nu_hold = nu_ladder.first().copied().unwrap_or(cfg.nu);
            for &mu in mu_ladder {
                points.push((mu, nu_hold));
            }
            let mu_hold = mu_ladder.last().copied().unwrap_or(cfg.mu);
            for &nu in nu_ladder {
                if points.last() != Some(&(mu_hold, nu)) {
                    points.push((mu_hold, nu));
                }
            }
        }
    }
    let first_phase_len = match order {
        LimitOrder::NuThenMu => nu_ladder.len(),
        LimitOrder::MuThenNu => mu_ladder.len(),
    };

    let mut entries: Vec<ContinuationEntry<S>> = Vec::new();
    for &(mu, nu) in &points {
        let mut run_cfg = cfg.clone();
        run_cfg.mu = mu;
        run_cfg.nu = nu;
        run_cfg.stop_at_extinction = false;
        let trajectory = solve_parabolic(u0, basis, &run_cfg)?;
        entries.push(ContinuationEntry { mu, nu, trajectory });
    }

    let mut gaps = Vec::new();
    for pair in entries.windows(2) {
        let a = &pair[0].trajectory.snapshots;
        let b = &pair[1].trajectory.snapshots;
        let n = a.len().min(b.len());
        let mut gap = S::zero();
        for k in 0..n {
            gap = gap.max(a[k].1.sub(&b[k].1).l2());
        }
        gaps.push(gap);
    }

    let slack = real::<S>(1e-10);
    let mut max_modulus_preserved = true;
    for entry in &entries {
        let snaps = &entry.trajectory.snapshots;
        let initial = crate::norms::lp_norm(&basis.synthesize(&snaps[0].1)?, S::infinity())?;
        for (_, cs) in snaps.iter().skip(1) {
            let sup = crate::norms::lp_norm(&basis.synthesize(cs)?, S::infinity())?;
            if sup > initial + slack {
                max_modulus_preserved = false;
            }
        }
    }

    let report = ContinuationReport {
        ladder: points,
        gaps,
        first_phase_len,
        max_modulus_preserved,
    };
    Ok((entries, report))
}

/// A solved dual evolution on `[0, t_anchor]` with coefficients frozen
/// from the time-reversed primal gradient field.
#[derive(Debug, Clone)]
pub struct DualTrajectory<S> {
    pub nu: S,
    pub b_flag: bool,
    pub t_anchor: S,
    pub basis_id: u64,
    /// Parameters of the primal run that supplied the frozen field.
    pub frozen_source: FrozenSource<S>,
    pub snapshots: Vec<(S, SpectralCoeffs<S>)>,
    pub cg_iters: Vec<usize>,
}

/// Provenance of a dual solve's coefficient field.
#[derive(Debug, Clone, Copy)]
pub struct FrozenSource<S> {
    pub mu: S,
    pub p: S,
    pub basis_id: u64,
}

/// Linear implicit-Euler solve of the dual system. The coefficient tensor
/// at dual time `s` uses the primal gradient at `t_anchor - s`, linearly
/// interpolated between primal snapshots.
pub fn solve_dual<S: Real>(
    phi0: &SpectralCoeffs<S>,
    primal: &Trajectory<S>,
    basis: &EigenBasis<S>,
    t_anchor: S,
    nu: S,
    b_flag: bool,
    cfg: &SolverConfig<S>,
) -> Result<DualTrajectory<S>> {
    if !(primal.config.mu > S::zero()) {
        return Err(Error::invalid(
            "primal",
            "dual coefficients need a regularized primal run (mu > 0)".to_string(),
        ));
    }
    let t_max = primal
        .snapshots
        .last()
        .map(|(t, _)| *t)
        .unwrap_or(S::zero());
    if !(t_anchor > S::zero()) || t_anchor > t_max * (S::one() + real(1e-12)) {
        return Err(Error::invalid(
            "t_anchor",
            format!("anchor {t_anchor} outside the primal range (0, {t_max}]"),
        ));
    }
    let (mu, p) = (primal.config.mu, primal.config.p);
    let eigen = basis.eigenvalues();
    let dt_nominal = cfg.dt_init;
    let eps_t = real::<S>(1e-12) * t_anchor;

    let mut traj = DualTrajectory {
        nu,
        b_flag,
        t_anchor,
        basis_id: basis.id(),
        frozen_source: FrozenSource {
            mu,
            p,
            basis_id: primal.basis_id,
        },
        snapshots: vec![(S::zero(), phi0.clone())],
        cg_iters: Vec::new(),
    };
    let mut s = S::zero();
    let mut phi = phi0.clone();
    while s < t_anchor - eps_t {
        let dt = dt_nominal.min(t_anchor - s);
        let s_new = s + dt;
        let tau = (t_anchor - s_new).max(S::zero());
        let frozen = primal.interpolate(tau)?;
        let grad = basis.spectral_gradient(&frozen)?;
        let tensor = dual_tensor(&grad, mu, p, b_flag)?;
        let a_mean = tensor.scalar.iter().copied().fold(S::zero(), |a, b| a + b)
            / real::<S>(tensor.scalar.len() as f64);
        let precond: Vec<S> = eigen
            .iter()
            .map(|&l| S::one() + dt * (nu + a_mean) * l)
            .collect();
        let mut apply = |x: &Array2<S>| -> Result<Array2<S>> {
            let xc = SpectralCoeffs::from_values(basis, x.clone())?;
            let gx = basis.spectral_gradient(&xc)?;
            let bx = tensor.apply(&gx)?;
            let kx = basis.project_gradient(&bx)?;
            let mut out = x.clone();
            for (j, &l) in eigen.iter().enumerate() {
                for comp in 0..out.ncols() {
                    out[[j, comp]] += dt * (nu * l * x[[j, comp]] + kx.values()[[j, comp]]);
                }
            }
            Ok(out)
        };
        let solved = cg_solve(
            &mut apply,
            phi.values(),
            phi.values().clone(),
            &precond,
            cfg.cg_tol,
            cfg.cg_max,
        )?;
        if !solved.converged {
            return Err(Error::PicardFailure {
                t: as_f64(s_new),
                dt_floor: as_f64(dt),
                last_change: f64::NAN,
                tol: as_f64(cfg.cg_tol),
                iterations: solved.iters,
            });
        }
        phi = SpectralCoeffs::from_values(basis, solved.x)?;
        traj.cg_iters.push(solved.iters);
        traj.snapshots.push((s_new, phi.clone()));
        s = s_new;
    }
    Ok(traj)
}

/// Elliptic solution data for `-div(|grad u|^(p-2) grad u) = f`.
#[derive(Debug, Clone)]
pub struct EllipticSolution<S> {
    pub coeffs: SpectralCoeffs<S>,
    /// Relative weak residual `|d(c) - f| / |f|` at the final ladder rung.
    pub residual: S,
    /// `(mu, relative residual)` after each rung.
    pub mu_history: Vec<(S, S)>,
    pub picard_iters: usize,
}

/// Solves the regularized elliptic system down a descending mu-ladder,
/// warm-starting each rung from the previous solution.
pub fn solve_elliptic<S: Real>(
    f: &GridFunction<S>,
    basis: &EigenBasis<S>,
    p: S,
    mu_ladder: &[S],
    tol: S,
) -> Result<EllipticSolution<S>> {
    if !(p > S::one() && p < real(2.0)) {
        return Err(Error::invalid("p", format!("expected p in (1, 2), got {p}")));
    }
    if mu_ladder.is_empty() {
        return Err(Error::invalid("mu_ladder", "must not be empty".to_string()));
    }
    for (i, &mu) in mu_ladder.iter().enumerate() {
        if !(mu > S::zero()) {
            return Err(Error::invalid("mu_ladder", format!("entry {i} must be positive")));
        }
        if i > 0 && !(mu < mu_ladder[i - 1]) {
            return Err(Error::invalid("mu_ladder", "must be strictly descending".to_string()));
        }
    }
    let f_c = basis.project(f)?;
    let f_norm = f_c.l2();
    if f_norm == S::zero() {
        return Ok(EllipticSolution {
            coeffs: SpectralCoeffs::zeros(basis, f_c.comps()),
            residual: S::zero(),
            mu_history: mu_ladder.iter().map(|&mu| (mu, S::zero())).collect(),
            picard_iters: 0,
        });
    }
    let eigen = basis.eigenvalues();
    // start from the linear (p = 2) solution
    let mut c = f_c.map_eigen(basis, |l, v| v / l)?;
    let mut history = Vec::new();
    let mut iters_total = 0usize;
    let picard_max = 80usize;
    let cg_tol = real::<S>(1e-13);
    let cg_max = 2000usize;
    let change_tol = real::<S>(1e-12);

    let mut residual = S::infinity();
    for &mu in mu_ladder {
        let mut best = S::infinity();
        let mut stalled = 0usize;
        for _ in 0..picard_max {
            iters_total += 1;
            let grad = basis.spectral_gradient(&c)?;
            let a_nodes = frozen_coefficient(&grad, mu, p)?;
            let a_mean = a_nodes.iter().copied().fold(S::zero(), |s, v| s + v)
                / real::<S>(a_nodes.len() as f64);
            let precond: Vec<S> = eigen.iter().map(|&l| (a_mean * l).max(real(1e-30))).collect();
            let mut apply = |x: &Array2<S>| -> Result<Array2<S>> {
                let xc = SpectralCoeffs::from_values(basis, x.clone())?;
                Ok(crate::operators::weighted_stiffness_apply(&a_nodes, &xc, basis)?
                    .values()
                    .clone())
            };
            let solved = cg_solve(
                &mut apply,
                f_c.values(),
                c.values().clone(),
                &precond,
                cg_tol,
                cg_max,
            )?;
            let c_new = SpectralCoeffs::from_values(basis, solved.x)?;
            let change = c_new.sub(&c).l2() / S::one().max(c_new.l2());
            c = c_new;
            residual = nonlinear_load(&c, mu, p, basis)?.sub(&f_c).l2() / f_norm;
            if residual < best * real(0.999) {
                best = residual;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if change <= change_tol || stalled >= 8 {
                break;
            }
        }
        history.push((mu, residual));
    }

    if !(residual <= tol) {
        return Err(Error::PicardStagnation {
            residual: as_f64(residual),
            tol: as_f64(tol),
        });
    }
    Ok(EllipticSolution {
        coeffs: c,
        residual,
        mu_history: history,
        picard_iters: iters_total,
    })
}

/// Initial-data menu for the reference scenarios. Random kinds carry a
/// mandatory seed; coefficients are deterministic given the seed.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData<S> {
    /// Separable polynomial bump `amplitude * prod_d 4 x (L - x) / L^2`;
    /// peaks at `amplitude` in the center.
    Smooth { amplitude: S },
    /// `c_j = lambda_j^(-s) sigma_j` with Rademacher signs and `s` slightly
    /// above `n/4`: in L^2 but not in W^{1,2} at the truncation scale.
    RoughL2 { seed: u64, amplitude: S },
    /// Decay exponent slightly above `n/4 + 1/2`: in W^{1,2}, not W^{2,2}.
    W12NotW22 { seed: u64, amplitude: S },
    /// Indicator of the centered half-size rectangle (bounded data with
    /// jumps; its projection carries the usual overshoot).
    LinfIndicator { amplitude: S },
    /// A single eigenmode, by multi-index.
    Mode { mode: Vec<usize>, amplitude: S },
}

/// Spectral coefficients of the requested initial datum.
pub fn initial_coeffs<S: Real>(
    data: &InitialData<S>,
    basis: &EigenBasis<S>,
) -> Result<SpectralCoeffs<S>> {
    match data {
        InitialData::Smooth { amplitude } => {
            let sides = basis.domain().side_lengths().to_vec();
            let amp = *amplitude;
            let f = basis.grid_function(1, move |x, _| {
                let mut v = amp;
                for (d, &len) in sides.iter().enumerate() {
                    v *= real::<S>(4.0) * x[d] * (len - x[d]) / (len * len);
                }
                v
            });
            basis.project(&f)
        }
        InitialData::RoughL2 { seed, amplitude } => {
            rough_coeffs(basis, *seed, real::<S>(basis.dim() as f64 / 4.0 + 0.05), *amplitude)
        }
        InitialData::W12NotW22 { seed, amplitude } => {
            rough_coeffs(basis, *seed, real::<S>(basis.dim() as f64 / 4.0 + 0.55), *amplitude)
        }
        InitialData::LinfIndicator { amplitude } => {
            let sides = basis.domain().side_lengths().to_vec();
            let amp = *amplitude;
            let f = basis.grid_function(1, move |x, _| {
                let inside = sides.iter().enumerate().all(|(d, &len)| {
                    let quarter = len / real(4.0);
                    x[d] >= quarter && x[d] <= len - quarter
                });
                if inside {
                    amp
                } else {
                    S::zero()
                }
            });
            basis.project(&f)
        }
        InitialData::Mode { mode, amplitude } => {
            let j = basis.mode_position(mode).ok_or_else(|| {
                Error::invalid("mode", format!("multi-index {mode:?} not in the basis"))
            })?;
            Ok(SpectralCoeffs::unit(basis, j).scaled(*amplitude))
        }
    }
}

fn rough_coeffs<S: Real>(
    basis: &EigenBasis<S>,
    seed: u64,
    decay: S,
    amplitude: S,
) -> Result<SpectralCoeffs<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((basis.mode_count(), 1));
    for (j, &lambda) in basis.eigenvalues().iter().enumerate() {
        let sign = if rng.gen_bool(0.5) { S::one() } else { -S::one() };
        values[[j, 0]] = sign * lambda.powf(-decay);
    }
    let c = SpectralCoeffs::from_values(basis, values)?;
    let norm = c.l2();
    Ok(c.scaled(amplitude / norm))
}

/// Sanity wrapper: the peak value of the flux field; used by tests probing
/// the mu = 0 convention end to end.
pub fn flux_sup<S: Real>(
    c: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
    mu: S,
    p: S,
) -> Result<S> {
    let grad = basis.spectral_gradient(c)?;
    let flux = diffusive_flux(&grad, mu, p)?;
    crate::norms::lp_norm(&flux, S::infinity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;

    fn basis(modes: usize, oversample: usize) -> EigenBasis<f64> {
        EigenBasis::build(Domain::unit_square(), modes, oversample).unwrap()
    }

    #[test]
    fn heat_single_mode_matches_exponential() {
        let b = basis(4, 2);
        let c0 = SpectralCoeffs::unit(&b, 0);
        let lambda = b.eigenvalues()[0];
        for nu in [0.0, 0.5] {
            let cfg = SolverConfig::new(2.0, 0.0, nu, 0.01, 1e-4)
                .with_snapshots(vec![0.005, 0.01]);
            let traj = solve_parabolic(&c0, &b, &cfg).unwrap();
            let (t, c) = traj.snapshots.last().unwrap();
            let expect = (-(1.0 + nu) * lambda * t).exp();
            let got = c.values()[[0, 0]];
            let rel = ((got - expect) / expect).abs();
            assert!(rel < 1e-3, "nu = {nu}: rel err {rel}");
            // all other coefficients stay at zero
            for j in 1..b.mode_count() {
                assert!(c.values()[[j, 0]].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn energy_identity_residual_is_small() {
        let b = basis(4, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let cfg = SolverConfig::new(1.5, 1e-3, 0.0, 0.02, 1e-3).with_snapshots(vec![0.01, 0.02]);
        let traj = solve_parabolic(&u0, &b, &cfg).unwrap();
        assert!(
            traj.max_energy_residual() < 1e-8,
            "max residual {}",
            traj.max_energy_residual()
        );
    }

    #[test]
    fn l2_norm_is_nonincreasing_for_singular_p() {
        let b = basis(4, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let cfg = SolverConfig::new(1.5, 1e-3, 0.0, 0.05, 1e-3)
            .with_snapshots(log_spaced(1e-3, 0.05, 10));
        let traj = solve_parabolic(&u0, &b, &cfg).unwrap();
        let mut prev = traj.snapshots[0].1.l2();
        for (_, c) in traj.snapshots.iter().skip(1) {
            let cur = c.l2();
            assert!(cur <= prev + 1e-12);
            prev = cur;
        }
    }

    #[test]
    fn two_solutions_contract_in_l2() {
        let b = basis(3, 2);
        let u0 = initial_coeffs(&InitialData::RoughL2 { seed: 3, amplitude: 1.0 }, &b).unwrap();
        let w0 = initial_coeffs(&InitialData::RoughL2 { seed: 9, amplitude: 0.7 }, &b).unwrap();
        let times = vec![0.002, 0.004, 0.006, 0.008, 0.01];
        let cfg = SolverConfig::new(1.6, 1e-2, 0.1, 0.01, 5e-4).with_snapshots(times.clone());
        let tu = solve_parabolic(&u0, &b, &cfg).unwrap();
        let tw = solve_parabolic(&w0, &b, &cfg).unwrap();
        let d0 = u0.sub(&w0).l2();
        for k in 1..tu.snapshots.len() {
            let d = tu.snapshots[k].1.sub(&tw.snapshots[k].1).l2();
            assert!(d <= d0 + 1e-8, "t = {}: {d} > {d0}", tu.snapshots[k].0);
        }
    }

    #[test]
    fn implicit_euler_is_first_order() {
        let b = basis(3, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let t_end = 0.02;
        let run = |dt: f64| {
            let cfg = SolverConfig::new(1.5, 1e-2, 0.0, t_end, dt).with_snapshots(vec![t_end]);
            solve_parabolic(&u0, &b, &cfg).unwrap().snapshots.pop().unwrap().1
        };
        let reference = run(6.25e-5);
        let coarse = run(1e-3);
        let fine = run(5e-4);
        let e_coarse = coarse.sub(&reference).l2();
        let e_fine = fine.sub(&reference).l2();
        let ratio = e_coarse / e_fine;
        assert!(
            ratio > 1.6 && ratio < 2.8,
            "refinement ratio {ratio} (errors {e_coarse}, {e_fine})"
        );
    }

    #[test]
    fn adaptive_policy_tracks_fixed_solution() {
        let b = basis(3, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let t_end = 0.02;
        let fixed_cfg = SolverConfig::new(1.5, 1e-3, 0.0, t_end, 1e-4).with_snapshots(vec![t_end]);
        let adaptive_cfg = SolverConfig::new(1.5, 1e-3, 0.0, t_end, 1e-3)
            .with_policy(DtPolicy::Adaptive { target_step_error: 1e-7 })
            .with_snapshots(vec![t_end]);
        let f = solve_parabolic(&u0, &b, &fixed_cfg).unwrap();
        let a = solve_parabolic(&u0, &b, &adaptive_cfg).unwrap();
        let gap = f.snapshots.last().unwrap().1.sub(&a.snapshots.last().unwrap().1).l2();
        assert!(gap < 1e-4, "adaptive vs fixed gap {gap}");
        assert!(a.diagnostics.iter().all(|d| d.energy_residual < 1e-8));
    }

    #[test]
    fn continuation_reports_shrinking_gaps() {
        let b = basis(3, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let cfg = SolverConfig::new(1.5, 1e-1, 0.0, 0.02, 5e-4)
            .with_snapshots(vec![0.005, 0.01, 0.02]);
        let (entries, report) =
            continuation(&u0, &b, &cfg, &[1e-1, 1e-2, 1e-3], &[0.0], LimitOrder::NuThenMu).unwrap();
        // the single nu entry coincides with the first mu rung, so the
        // ladder has one trajectory per mu value
        assert_eq!(entries.len(), 3);
        assert_eq!(report.first_phase_len, 1);
        for w in report.gaps.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "gaps not shrinking: {:?}", report.gaps);
        }
        assert!(report.max_modulus_preserved);
    }

    #[test]
    fn continuation_identical_configs_give_zero_gap() {
        let b = basis(2, 2);
        let c0 = SpectralCoeffs::unit(&b, 0);
        let cfg = SolverConfig::new(2.0, 0.0, 0.0, 0.01, 1e-3).with_snapshots(vec![0.01]);
        // p = 2: the mu ladder is inert, all entries coincide
        let (entries, report) =
            continuation(&c0, &b, &cfg, &[1e-1, 1e-2], &[0.0], LimitOrder::NuThenMu).unwrap();
        assert_eq!(entries.len(), 2);
        for gap in &report.gaps {
            assert!(*gap < 1e-13, "gap {gap}");
        }
    }

    #[test]
    fn continuation_supports_the_exploration_order() {
        let b = basis(2, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let cfg = SolverConfig::new(1.6, 1e-1, 0.5, 0.01, 1e-3).with_snapshots(vec![0.01]);
        let (entries, report) = continuation(
            &u0,
            &b,
            &cfg,
            &[1e-1, 1e-2],
            &[0.5, 0.0],
            LimitOrder::MuThenNu,
        )
        .unwrap();
        // mu phase at nu = 0.5, then the nu ladder at the last mu; the
        // bridge point is deduplicated
        assert_eq!(report.ladder, vec![(1e-1, 0.5), (1e-2, 0.5), (1e-2, 0.0)]);
        assert_eq!(entries.len(), 3);
        assert_eq!(report.first_phase_len, 2);
    }

    #[test]
    fn rough_data_kinds_have_the_advertised_decay() {
        let b = basis(6, 2);
        // |c_j| = lambda_j^(-s) with s = n/4 + 0.05 (rough) and
        // n/4 + 0.55 (one derivative better)
        for (data, s) in [
            (InitialData::RoughL2 { seed: 3, amplitude: 1.0 }, 0.55),
            (InitialData::W12NotW22 { seed: 3, amplitude: 1.0 }, 1.05),
        ] {
            let c = initial_coeffs(&data, &b).unwrap();
            let first = c.values()[[0, 0]].abs() * b.eigenvalues()[0].powf(s);
            for j in 1..b.mode_count() {
                let scaled = c.values()[[j, 0]].abs() * b.eigenvalues()[j].powf(s);
                assert!(
                    (scaled - first).abs() < 1e-10 * first,
                    "mode {j}: {scaled} vs {first}"
                );
            }
        }
    }

    #[test]
    fn dual_solve_with_identity_tensor_is_heat() {
        let b = basis(3, 2);
        // primal run at p = 2 freezes a == 1
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let cfg = SolverConfig::new(2.0, 1e-3, 0.0, 0.05, 1e-3)
            .with_snapshots(log_spaced(1e-3, 0.05, 20));
        let primal = solve_parabolic(&u0, &b, &cfg).unwrap();

        let phi0 = SpectralCoeffs::unit(&b, 0);
        let nu = 0.5;
        let mut dual_cfg = cfg.clone();
        dual_cfg.dt_init = 1e-4;
        let dual = solve_dual(&phi0, &primal, &b, 0.01, nu, false, &dual_cfg).unwrap();
        let lambda = b.eigenvalues()[0];
        let (s, phi) = dual.snapshots.last().unwrap();
        let expect = (-(1.0 + nu) * lambda * s).exp();
        let got = phi.values()[[0, 0]];
        assert!(((got - expect) / expect).abs() < 1e-2, "got {got}, expect {expect}");
    }

    #[test]
    fn dual_solve_rejects_bad_anchor() {
        let b = basis(2, 2);
        let u0 = SpectralCoeffs::unit(&b, 0);
        let cfg = SolverConfig::new(1.5, 1e-3, 0.0, 0.01, 1e-3).with_snapshots(vec![0.01]);
        let primal = solve_parabolic(&u0, &b, &cfg).unwrap();
        let res = solve_dual(&u0, &primal, &b, 0.5, 0.0, false, &cfg);
        assert!(res.is_err());
    }

    #[test]
    fn elliptic_zero_load_gives_zero() {
        let b = basis(3, 2);
        let f = b.grid_function(1, |_, _| 0.0);
        let sol = solve_elliptic(&f, &b, 1.5, &[1e-2, 1e-4], 1e-8).unwrap();
        assert_eq!(sol.coeffs.l2(), 0.0);
    }

    #[test]
    fn elliptic_scaling_is_degree_one_over_p_minus_one() {
        let b = basis(3, 2);
        let p = 1.5;
        let f = b.grid_function(1, |x, _| (std::f64::consts::PI * x[0]).sin()
            * (std::f64::consts::PI * x[1]).sin());
        let ladder: Vec<f64> = (1..=10).map(|k| 10f64.powi(-(k as i32))).collect();
        let tol = 1e-6;
        let base = solve_elliptic(&f, &b, p, &ladder, tol).unwrap();
        let s = 4.0;
        let scaled = solve_elliptic(&f.scaled(s), &b, p, &ladder, tol).unwrap();
        let factor = s.powf(1.0 / (p - 1.0));
        let gap = scaled.coeffs.sub(&base.coeffs.scaled(factor)).l2()
            / scaled.coeffs.l2();
        assert!(gap < 1e-4, "homogeneity defect {gap}");
    }

    #[test]
    fn initial_data_is_deterministic_and_normalized() {
        let b = basis(4, 2);
        let a = initial_coeffs(&InitialData::RoughL2 { seed: 5, amplitude: 2.0 }, &b).unwrap();
        let c = initial_coeffs(&InitialData::RoughL2 { seed: 5, amplitude: 2.0 }, &b).unwrap();
        assert_eq!(a.values(), c.values());
        assert!((a.l2() - 2.0).abs() < 1e-12);
        let d = initial_coeffs(&InitialData::RoughL2 { seed: 6, amplitude: 2.0 }, &b).unwrap();
        assert!(a.sub(&d).l2() > 1e-3);
    }

    #[test]
    fn smooth_bump_peaks_at_amplitude() {
        let b = basis(6, 3);
        let c = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let f = b.synthesize(&c).unwrap();
        let sup = crate::norms::lp_norm(&f, f64::INFINITY).unwrap();
        assert!((sup - 1.0).abs() < 0.05, "sup {sup}");
    }

    #[test]
    fn mu_zero_flux_stays_finite() {
        let b = basis(3, 2);
        let c = SpectralCoeffs::unit(&b, 0);
        let sup = flux_sup(&c, &b, 0.0, 1.5).unwrap();
        assert!(sup.is_finite() && sup > 0.0);
    }

    #[test]
    fn vector_valued_systems_are_supported() {
        let b = basis(3, 2);
        // two components: modes 0 and 2, linear flow decouples per component
        let mut values = ndarray::Array2::zeros((b.mode_count(), 2));
        values[[0, 0]] = 1.0;
        values[[2, 1]] = -0.5;
        let u0 = SpectralCoeffs::from_values(&b, values).unwrap();
        let cfg = SolverConfig::new(2.0, 0.0, 0.0, 0.01, 1e-4).with_snapshots(vec![0.01]);
        let traj = solve_parabolic(&u0, &b, &cfg).unwrap();
        let (t, c) = traj.snapshots.last().unwrap();
        for (j, comp, c0) in [(0usize, 0usize, 1.0f64), (2, 1, -0.5)] {
            let expect = c0 * (-b.eigenvalues()[j] * t).exp();
            let got = c.values()[[j, comp]];
            // first-order step error grows like lambda^2 dt t / 2
            let tol = b.eigenvalues()[j].powi(2) * 1e-4 * t;
            assert!(
                ((got - expect) / expect).abs() < tol,
                "comp {comp}: {got} vs {expect}"
            );
        }

        // singular flow couples the components through |grad u|^2 but must
        // keep the energy identity and the L^2 decay
        let cfg = SolverConfig::new(1.5, 1e-3, 0.0, 0.01, 5e-4).with_snapshots(vec![0.005, 0.01]);
        let traj = solve_parabolic(&u0, &b, &cfg).unwrap();
        assert!(traj.max_energy_residual() < 1e-8);
        let mut prev = traj.snapshots[0].1.l2();
        for (_, c) in traj.snapshots.iter().skip(1) {
            assert!(c.l2() <= prev + 1e-12);
            prev = c.l2();
        }
    }

    #[test]
    fn one_dimensional_heat_decay() {
        let b = EigenBasis::<f64>::build(Domain::unit_interval(), 6, 2).unwrap();
        let c0 = SpectralCoeffs::unit(&b, 0);
        let cfg = SolverConfig::new(2.0, 0.0, 0.0, 0.01, 1e-4).with_snapshots(vec![0.01]);
        let traj = solve_parabolic(&c0, &b, &cfg).unwrap();
        let (t, c) = traj.snapshots.last().unwrap();
        let expect = (-b.eigenvalues()[0] * t).exp();
        assert!(((c.values()[[0, 0]] - expect) / expect).abs() < 1e-3);
    }

    #[test]
    fn picard_failure_reports_diagnostics() {
        let b = basis(3, 2);
        let u0 = initial_coeffs(&InitialData::Smooth { amplitude: 1.0 }, &b).unwrap();
        let mut cfg = SolverConfig::new(1.5, 1e-6, 0.0, 0.01, 1e-3);
        cfg.picard_max = 1; // cannot converge in a single lagged pass
        let err = solve_parabolic(&u0, &b, &cfg).unwrap_err();
        assert!(matches!(err, Error::PicardFailure { .. }), "{err}");
    }
}
