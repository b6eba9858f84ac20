//! Decay-rate fitting, pointwise-inequality checks and the trajectory
//! audit suite.
//!
//! Every audit produces an [`EstimateReport`]: the measured quantities, the
//! bound or target they are held against, a tolerance and a verdict.
//! Multiplicative constants of the estimates are never asserted, only
//! reported; verdicts compare exponents, suprema and inequality residuals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::{EigenBasis, GridFunction, SpectralCoeffs};
use crate::error::Error;
use crate::exponents::ExponentSet;
use crate::norms::{lp_norm, weighted_sup, NormSeries};
use crate::scalar::{as_f64, real, Real};
use crate::solver::Trajectory;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Warn,
    NotApplicable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

/// Per-claim audit record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub claim: String,
    pub anchor: String,
    pub measured: Vec<Measurement>,
    pub target: String,
    pub tol: f64,
    pub verdict: Verdict,
    pub metadata: BTreeMap<String, String>,
}

impl EstimateReport {
    pub fn new(
        anchor: impl Into<String>,
        claim: impl Into<String>,
        target: impl Into<String>,
        tol: f64,
        verdict: Verdict,
    ) -> Self {
        EstimateReport {
            claim: claim.into(),
            anchor: anchor.into(),
            measured: Vec::new(),
            target: target.into(),
            tol,
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_measured(mut self, name: impl Into<String>, value: f64) -> Self {
        self.measured.push(Measurement {
            name: name.into(),
            value,
        });
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn is_pass(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::Warn | Verdict::NotApplicable)
    }
}

/// JSON array of reports.
pub fn reports_to_json(reports: &[EstimateReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}

/// Compact CSV summary, one row per report.
pub fn reports_to_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from("anchor,claim,measured,target,tol,verdict\n");
    for r in reports {
        let measured = r
            .measured
            .iter()
            .map(|m| format!("{}={}", m.name, m.value))
            .collect::<Vec<_>>()
            .join(";");
        let verdict = match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Warn => "warn",
            Verdict::NotApplicable => "not_applicable",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&r.anchor),
            csv_field(&r.claim),
            csv_field(&measured),
            csv_field(&r.target),
            r.tol,
            verdict
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Power-law fit `value ~ C t^exponent` on a log-log grid.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit<S> {
    pub exponent: S,
    pub intercept: S,
    pub r_squared: S,
    pub window: (S, S),
    pub samples: usize,
}

/// Least squares on `(ln t, ln value)` over the window.
pub fn fit_decay<S: Real>(series: &NormSeries<S>, window: (S, S)) -> Result<DecayFit<S>> {
    let (ts, vs) = series.window(window.0, window.1);
    if ts.len() < 5 {
        return Err(Error::InvalidSeries {
            name: "fit_decay",
            message: format!(
                "need at least 5 samples in the window, found {} in [{}, {}] of `{}`",
                ts.len(),
                window.0,
                window.1,
                series.label()
            ),
        });
    }
    if vs.iter().any(|v| !(*v > S::zero())) {
        return Err(Error::InvalidSeries {
            name: "fit_decay",
            message: format!("nonpositive values in the fit window of `{}`", series.label()),
        });
    }
    let xs: Vec<S> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<S> = vs.iter().map(|v| v.ln()).collect();
    let n = real::<S>(xs.len() as f64);
    let mean = |v: &[S]| v.iter().copied().fold(S::zero(), |a, b| a + b) / n;
    let (mx, my) = (mean(&xs), mean(&ys));
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    let mut syy = S::zero();
    for (x, y) in xs.iter().zip(&ys) {
        let dx = *x - mx;
        let dy = *y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > S::zero()) {
        return Err(Error::InvalidSeries {
            name: "fit_decay",
            message: "degenerate time grid".to_string(),
        });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > S::zero() {
        (sxy * sxy) / (sxx * syy)
    } else {
        S::one() // constant series: exponent 0 fits exactly
    };
    Ok(DecayFit {
        exponent: slope,
        intercept,
        r_squared,
        window,
        samples: xs.len(),
    })
}

/// Weighted Hessian-vs-Laplacian comparison on one trial field.
#[derive(Debug, Clone, Copy)]
pub struct Lemma21Check<S> {
    /// `|(mu + |grad v|^2)^((p-2)/4) D^2 v|_2`
    pub lhs: S,
    /// `|(mu + |grad v|^2)^((p-2)/4) Lap v|_2`
    pub weighted_laplacian: S,
    /// Bound applied to the right-hand side (`1/(p-1)` on the convex path).
    pub bound_factor: S,
    /// Non-convex boundary compensation, zero on the convex path.
    pub boundary_term: S,
    pub ratio: S,
    pub pass: bool,
}

impl<S: Real> Lemma21Check<S> {
    pub fn into_report(self, anchor: &str) -> EstimateReport {
        EstimateReport::new(
            anchor,
            "weighted Hessian bounded by weighted Laplacian",
            format!("lhs <= {} * rhs + boundary", as_f64(self.bound_factor)),
            1e-6,
            if self.pass { Verdict::Pass } else { Verdict::Fail },
        )
        .with_measured("lhs", as_f64(self.lhs))
        .with_measured("weighted_laplacian", as_f64(self.weighted_laplacian))
        .with_measured("ratio", as_f64(self.ratio))
        .with_measured("boundary_term", as_f64(self.boundary_term))
    }
}

/// Checks the weighted Hessian bound on a trial-space field.
///
/// Convex path (`eta = 0`): `lhs <= rhs / (p-1)` with no boundary term.
/// Non-convex path (`eta > 0`): `lhs <= C1 rhs + (C2/eta) (|grad v|_p^p +
/// mu^(p/2) |Omega|)^(1/2)` with `C1 = sqrt(p / (p(p-1)^2 - eta))`; `C2`
/// is an unpinned constant supplied by the caller.
pub fn check_lemma21<S: Real>(
    v: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
    mu: S,
    p: S,
    eta: S,
    c2: S,
) -> Result<Lemma21Check<S>> {
    if !(mu > S::zero()) {
        return Err(Error::invalid("mu", format!("expected mu > 0, got {mu}")));
    }
    let two = real::<S>(2.0);
    if !(p > S::one() && p <= two) {
        return Err(Error::invalid("p", format!("expected p in (1, 2], got {p}")));
    }
    if eta < S::zero() {
        return Err(Error::invalid("eta", "must be nonnegative".to_string()));
    }
    let pm1 = p - S::one();
    if eta > S::zero() && eta >= p * pm1 * pm1 {
        return Err(Error::invalid(
            "eta",
            format!("C1 undefined: eta must stay below p(p-1)^2 = {}", p * pm1 * pm1),
        ));
    }

    let grad = basis.spectral_gradient(v)?;
    let hess = basis.spectral_hessian(v)?;
    let lap = basis.spectral_laplacian(v)?;
    let w = basis.grid().weight();
    let quarter_exp = (p - two) / real(4.0);

    let mut lhs_sq = S::zero();
    let mut rhs_sq = S::zero();
    for node in 0..grad.node_count() {
        let weight = (mu + grad.magnitude_sq(node)).powf(quarter_exp);
        let w2 = weight * weight;
        lhs_sq += w2 * hess.magnitude_sq(node);
        rhs_sq += w2 * lap.magnitude_sq(node);
    }
    let lhs = (lhs_sq * w).sqrt();
    let rhs = (rhs_sq * w).sqrt();

    let (bound_factor, boundary_term) = if eta == S::zero() {
        if !basis.domain().is_convex() {
            return Err(Error::invalid(
                "eta",
                "eta = 0 requires a convex domain".to_string(),
            ));
        }
        (pm1.recip(), S::zero())
    } else {
        let c1 = (p / (p * pm1 * pm1 - eta)).sqrt();
        let grad_lp = lp_norm(&grad, p)?;
        let extra = (c2 / eta)
            * (grad_lp.powf(p) + mu.powf(p / two) * basis.domain().measure()).sqrt();
        (c1, extra)
    };

    let budget = bound_factor * rhs + boundary_term;
    let slack = real::<S>(1e-6) * budget.max(S::one());
    let pass = lhs <= budget + slack;
    let ratio = if rhs > S::zero() { lhs / rhs } else { S::zero() };
    Ok(Lemma21Check {
        lhs,
        weighted_laplacian: rhs,
        bound_factor,
        boundary_term,
        ratio,
        pass,
    })
}

/// Pointwise difference bound for the lifted coefficient:
/// `|(mu+xi)^-(2-p) - (mu+eta)^-(2-p)| <= (2-p) mu^-(3-p) |xi - eta|`.
#[derive(Debug, Clone, Copy)]
pub struct Lemma27Check<S> {
    pub lhs: S,
    pub rhs: S,
    pub pass: bool,
}

pub fn check_lemma27<S: Real>(mu: S, p: S, xi: S, eta_val: S) -> Result<Lemma27Check<S>> {
    if !(mu > S::zero()) {
        return Err(Error::invalid("mu", format!("expected mu > 0, got {mu}")));
    }
    let two = real::<S>(2.0);
    if !(p > S::one() && p < two) {
        return Err(Error::invalid("p", format!("expected p in (1, 2), got {p}")));
    }
    if xi < S::zero() || eta_val < S::zero() {
        return Err(Error::invalid("xi/eta", "must be nonnegative".to_string()));
    }
    let e = two - p;
    let lhs = ((mu + xi).powf(-e) - (mu + eta_val).powf(-e)).abs();
    let rhs = e * mu.powf(-(real::<S>(3.0) - p)) * (xi - eta_val).abs();
    let slack = real::<S>(1e-12) * rhs.max(S::one());
    Ok(Lemma27Check {
        lhs,
        rhs,
        pass: lhs <= rhs + slack,
    })
}

/// Interpolation inequality audit on aligned space-time fields:
/// with `K1 = sup_t t^d1 |(mu+|F|^2)^(1/2)|_p` and
/// `K2 = int t^(2 d2) |(mu+|F|^2)^((p-2)/4) g|_2^2 dt`, the weighted
/// `L^2(0,T; L^p)` norm of `g` obeys `lhs <= K1^(2-p) K2` with
/// `d = (2-p)/2 d1 + d2`.
#[derive(Debug, Clone, Copy)]
pub struct LemmaA1Check<S> {
    pub lhs: S,
    pub k1: S,
    pub k2: S,
    pub bound: S,
    pub margin: S,
    pub pass: bool,
}

pub fn check_lemma_a1<S: Real>(
    times: &[S],
    g: &[GridFunction<S>],
    f_field: &[GridFunction<S>],
    mu: S,
    p: S,
    delta1: S,
    delta2: S,
) -> Result<LemmaA1Check<S>> {
    if times.len() != g.len() || times.len() != f_field.len() {
        return Err(Error::InvalidSeries {
            name: "lemma_a1",
            message: "times, g and F series must be aligned".to_string(),
        });
    }
    if times.len() < 2 {
        return Err(Error::InvalidSeries {
            name: "lemma_a1",
            message: "need at least two samples".to_string(),
        });
    }
    if delta1 < S::zero() || delta2 < S::zero() {
        return Err(Error::invalid("delta", "weights must be nonnegative".to_string()));
    }
    let two = real::<S>(2.0);
    let delta = (two - p) / two * delta1 + delta2;
    let w = g[0].grid().weight();

    let mut k1 = S::zero();
    let mut k2_integrand = Vec::with_capacity(times.len());
    let mut lhs_integrand = Vec::with_capacity(times.len());
    for ((&t, gf), ff) in times.iter().zip(g).zip(f_field) {
        // |(mu + |F|^2)^(1/2)|_p as a scalar nodal field
        let mut lift_p = S::zero();
        let mut weighted_g2 = S::zero();
        let quarter = (p - two) / real(4.0);
        for node in 0..ff.node_count() {
            let base = mu + ff.magnitude_sq(node);
            lift_p += base.sqrt().powf(p);
            let omega = base.powf(quarter);
            weighted_g2 += omega * omega * gf.magnitude_sq(node);
        }
        let lift_norm = (lift_p * w).powf(p.recip());
        k1 = k1.max(t.powf(delta1) * lift_norm);
        k2_integrand.push(t.powf(two * delta2) * weighted_g2 * w);
        let g_lp = lp_norm(gf, p)?;
        lhs_integrand.push(t.powf(two * delta) * g_lp * g_lp);
    }
    let trapezoid = |vals: &[S]| -> S {
        let mut acc = S::zero();
        for i in 1..times.len() {
            let dt = times[i] - times[i - 1];
            acc += (vals[i] + vals[i - 1]) / two * dt;
        }
        acc
    };
    let k2 = trapezoid(&k2_integrand);
    let lhs = trapezoid(&lhs_integrand);
    let bound = k1.powf(two - p) * k2;
    let slack = real::<S>(1e-8) * bound.max(S::one());
    Ok(LemmaA1Check {
        lhs,
        k1,
        k2,
        bound,
        margin: bound - lhs,
        pass: lhs <= bound + slack,
    })
}

/// Closed-form comparison for linear runs (p = 2): every coefficient must
/// decay like `exp(-(1 + nu) lambda_j t)`.
pub fn heat_oracle_report<S: Real>(
    traj: &Trajectory<S>,
    basis: &EigenBasis<S>,
) -> Result<EstimateReport> {
    let two = real::<S>(2.0);
    if traj.config.p != two {
        return Ok(EstimateReport::new(
            "HeatOracle",
            "closed-form linear decay comparison",
            "p = 2 runs only",
            1e-3,
            Verdict::NotApplicable,
        ));
    }
    let rate = S::one() + traj.config.nu;
    let c0 = &traj.snapshots[0].1;
    let scale = c0.l2().max(S::one());
    let mut worst = S::zero();
    for (t, c) in traj.snapshots.iter().skip(1) {
        let mut num = S::zero();
        let mut den = S::zero();
        for (j, &lambda) in basis.eigenvalues().iter().enumerate() {
            for comp in 0..c.comps() {
                let expect = c0.values()[[j, comp]] * (-(rate) * lambda * *t).exp();
                let diff = c.values()[[j, comp]] - expect;
                num += diff * diff;
                den += expect * expect;
            }
        }
        let rel = num.sqrt() / den.sqrt().max(scale * real(1e-12));
        worst = worst.max(rel);
    }
    let verdict = if worst < real(1e-3) { Verdict::Pass } else { Verdict::Fail };
    Ok(
        EstimateReport::new(
            "HeatOracle",
            "coefficients follow exp(-(1+nu) lambda t)",
            "max relative error < 1e-3",
            1e-3,
            verdict,
        )
        .with_measured("max_rel_error", as_f64(worst))
        .with_measured("nu", as_f64(traj.config.nu)),
    )
}

/// Norm traces of a trajectory, ready for fits and weighted suprema.
#[derive(Debug, Clone)]
pub struct TrajectorySeries<S> {
    pub l2: NormSeries<S>,
    pub linf: NormSeries<S>,
    pub grad_lp: NormSeries<S>,
    pub hess_lp: NormSeries<S>,
    pub ut_l2: NormSeries<S>,
    /// One series per requested q.
    pub ut_lq: Vec<(S, NormSeries<S>)>,
    /// Sup norm of the initial state.
    pub initial_linf: S,
}

/// Builds the measurement series of a trajectory. The gradient/Hessian
/// norms use the run's own p.
pub fn trajectory_series<S: Real>(
    traj: &Trajectory<S>,
    basis: &EigenBasis<S>,
    q_list: &[S],
) -> Result<TrajectorySeries<S>> {
    let p = traj.config.p;
    let mut times = Vec::new();
    let mut l2 = Vec::new();
    let mut linf = Vec::new();
    let mut grad = Vec::new();
    let mut hess = Vec::new();
    for (t, c) in &traj.snapshots {
        if !(*t > S::zero()) {
            continue;
        }
        times.push(*t);
        l2.push(c.l2());
        linf.push(lp_norm(&basis.synthesize(c)?, S::infinity())?);
        grad.push(lp_norm(&basis.spectral_gradient(c)?, p)?);
        hess.push(lp_norm(&basis.spectral_hessian(c)?, p)?);
    }
    let mut ut_times = Vec::new();
    let mut ut_l2 = Vec::new();
    let mut ut_lq: Vec<(S, Vec<S>)> = q_list.iter().map(|&q| (q, Vec::new())).collect();
    for (t, dc) in &traj.ut {
        ut_times.push(*t);
        ut_l2.push(dc.l2());
        if !ut_lq.is_empty() {
            let field = basis.synthesize(dc)?;
            for (q, vals) in ut_lq.iter_mut() {
                vals.push(lp_norm(&field, *q)?);
            }
        }
    }
    let initial_linf = lp_norm(&basis.synthesize(&traj.snapshots[0].1)?, S::infinity())?;
    Ok(TrajectorySeries {
        l2: NormSeries::new(times.clone(), l2, "L2")?,
        linf: NormSeries::new(times.clone(), linf, "Linf")?,
        grad_lp: NormSeries::new(times.clone(), grad, "grad_Lp")?,
        hess_lp: NormSeries::new(times, hess, "hessian_Lp")?,
        ut_l2: NormSeries::new(ut_times.clone(), ut_l2, "ut_L2")?,
        ut_lq: ut_lq
            .into_iter()
            .map(|(q, vals)| {
                NormSeries::new(ut_times.clone(), vals, format!("ut_L{}", as_f64(q)))
                    .map(|s| (q, s))
            })
            .collect::<Result<Vec<_>>>()?,
        initial_linf,
    })
}

/// Options of the trajectory audit.
#[derive(Debug, Clone)]
pub struct AuditOptions<S> {
    /// Integrability indices for the time-derivative rate claims.
    pub q_list: Vec<S>,
    /// Fit window for the t -> 0 rates; default `[5 dt, 500 dt]`.
    pub fit_window: Option<(S, S)>,
    /// Absolute tolerance on fitted exponents.
    pub exponent_tol: S,
    /// The integrability of the initial datum for the sup-norm decay claim.
    pub data_q: S,
    /// Slack for the sup-norm comparisons.
    pub maxmod_slack: S,
}

impl<S: Real> Default for AuditOptions<S> {
    fn default() -> Self {
        AuditOptions {
            q_list: vec![real(2.0)],
            fit_window: None,
            exponent_tol: real(0.15),
            data_q: real(2.0),
            maxmod_slack: real(1e-10),
        }
    }
}

/// Runs the per-trajectory claims: weighted suprema, time-derivative blow-up
/// rates, maximum modulus, sup-norm decay and finite extinction.
pub fn audit_trajectory<S: Real>(
    traj: &Trajectory<S>,
    basis: &EigenBasis<S>,
    exps: &ExponentSet<S>,
    opts: &AuditOptions<S>,
) -> Result<Vec<EstimateReport>> {
    let p = traj.config.p;
    let two = real::<S>(2.0);
    let series = trajectory_series(traj, basis, &opts.q_list)?;
    let mut window = opts.fit_window.unwrap_or_else(|| {
        let t1 = real::<S>(5.0) * traj.config.dt_init;
        (t1, (t1 * real(100.0)).min(traj.config.t_end))
    });
    // rate fits target the t -> 0 regime; keep the window clear of the
    // extinction tail where norms vanish
    if let Some(t_ext) = traj.extinction_time {
        window.1 = window.1.min(t_ext / real(2.0));
    }
    let mut reports = Vec::new();

    // (a) sup_t t^(1/p) |grad u|_p
    let ws = weighted_sup(&series.grad_lp, p.recip())?;
    reports.push(
        EstimateReport::new(
            "Def1.1-grad",
            "t^(1/p) grad u stays bounded in L^p",
            "finite",
            0.0,
            if ws.sup.is_finite() { Verdict::Pass } else { Verdict::Fail },
        )
        .with_measured("sup", as_f64(ws.sup))
        .with_measured("argmax_t", as_f64(ws.argmax_t)),
    );

    // (b) sup_t t |u_t|_2
    let ws = weighted_sup(&series.ut_l2, S::one())?;
    reports.push(
        EstimateReport::new(
            "Def1.1-ut",
            "t u_t stays bounded in L^2",
            "finite",
            0.0,
            if ws.sup.is_finite() { Verdict::Pass } else { Verdict::Fail },
        )
        .with_measured("sup", as_f64(ws.sup))
        .with_measured("argmax_t", as_f64(ws.argmax_t)),
    );

    // (c) fitted blow-up exponent of |u_t|_q against 1 + gamma(q')
    for (q, s) in &series.ut_lq {
        let q_conj = *q / (*q - S::one());
        let gamma = exps.gamma_of_r(q_conj);
        let bound = S::one() + gamma + opts.exponent_tol;
        let fit = fit_decay(s, window)?;
        let blowup = -fit.exponent;
        let verdict = if blowup <= bound { Verdict::Pass } else { Verdict::Fail };
        reports.push(
            EstimateReport::new(
                format!("Prop5.1-q{}", as_f64(*q)),
                format!("|u_t|_q blow-up rate at q = {}", as_f64(*q)),
                format!("exponent <= 1 + gamma(q') = {}", as_f64(S::one() + gamma)),
                as_f64(opts.exponent_tol),
                verdict,
            )
            .with_measured("fitted_blowup", as_f64(blowup))
            .with_measured("gamma", as_f64(gamma))
            .with_measured("r_squared", as_f64(fit.r_squared))
            .with_meta("window", format!("[{}, {}]", as_f64(window.0), as_f64(window.1))),
        );
    }

    // (d) maximum modulus against the initial sup norm
    let mut violations = 0usize;
    let mut worst = S::neg_infinity();
    let mut monotone = true;
    let mut prev = series.initial_linf;
    for &v in series.linf.values() {
        if v > series.initial_linf + opts.maxmod_slack {
            violations += 1;
        }
        worst = worst.max(v - series.initial_linf);
        if v > prev + opts.maxmod_slack {
            monotone = false;
        }
        prev = v;
    }
    reports.push(
        EstimateReport::new(
            "Thm1.7",
            "sup norm never exceeds the initial sup norm",
            "violations = 0",
            as_f64(opts.maxmod_slack),
            if violations == 0 { Verdict::Pass } else { Verdict::Fail },
        )
        .with_measured("violations", violations as f64)
        .with_measured("worst_excess", as_f64(worst))
        .with_measured("initial_linf", as_f64(series.initial_linf))
        .with_meta("monotone", monotone.to_string()),
    );

    // (e) compensated sup-norm decay: |u|_inf t^(2 beta / q) bounded
    let theta = two * exps.beta / opts.data_q;
    if p < two {
        let fit = fit_decay(&series.linf, window)?;
        let bound = -(theta + opts.exponent_tol);
        let comp = weighted_sup(&series.linf, theta)?;
        let verdict = if fit.exponent >= bound { Verdict::Pass } else { Verdict::Fail };
        reports.push(
            EstimateReport::new(
                "Eq1.12",
                "sup-norm blow-up no stronger than t^(-2 beta / q)",
                format!("fitted exponent >= {}", as_f64(-theta)),
                as_f64(opts.exponent_tol),
                verdict,
            )
            .with_measured("fitted_exponent", as_f64(fit.exponent))
            .with_measured("theta", as_f64(theta))
            .with_measured("compensated_sup", as_f64(comp.sup))
            .with_measured("r_squared", as_f64(fit.r_squared)),
        );
    }

    // (f) finite-time extinction for p < 2, none for p = 2
    if p < two {
        let verdict = match traj.extinction_time {
            Some(_) => Verdict::Pass,
            None => Verdict::Fail,
        };
        let mut report = EstimateReport::new(
            "Extinction",
            "L^2 norm reaches the extinction threshold before the horizon",
            format!("t_ext < {}", as_f64(traj.config.t_end)),
            as_f64(traj.config.extinction_threshold),
            verdict,
        );
        if let Some(t) = traj.extinction_time {
            report = report.with_measured("t_ext", as_f64(t));
        }
        reports.push(report);
    } else {
        // linear flow: expect exponential decay, no threshold crossing
        let verdict = if traj.extinction_time.is_none() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let mut report = EstimateReport::new(
            "Extinction",
            "no finite-time extinction for the linear flow",
            "t_ext absent".to_string(),
            as_f64(traj.config.extinction_threshold),
            verdict,
        )
        .with_meta("applicability", "p = 2: exponential decay expected");
        // exponential rate from ln |u| vs t
        let ts = series.l2.times();
        let vs = series.l2.values();
        if vs.iter().all(|v| *v > S::zero()) && ts.len() >= 2 {
            let n = real::<S>(ts.len() as f64);
            let mx = ts.iter().copied().fold(S::zero(), |a, b| a + b) / n;
            let my = vs.iter().map(|v| v.ln()).fold(S::zero(), |a, b| a + b) / n;
            let mut sxx = S::zero();
            let mut sxy = S::zero();
            for (t, v) in ts.iter().zip(vs) {
                sxx += (*t - mx) * (*t - mx);
                sxy += (*t - mx) * (v.ln() - my);
            }
            if sxx > S::zero() {
                report = report.with_measured("exponential_rate", as_f64(sxy / sxx));
            }
        }
        reports.push(report);
    }

    Ok(reports)
}
