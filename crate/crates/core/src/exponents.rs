//! Exponents and admissibility thresholds of the quantitative estimates,
//! evaluated for given `(p, n, q, H)`.
//!
//! The dimension enters only algebraically here, so `n >= 3` is supported
//! even though grids stop at `n = 2`.

use crate::error::Error;
use crate::scalar::{real, Real};
use crate::Result;

/// All derived exponents for one parameter tuple.
///
/// Conventions: `p` in (1, 2], integer dimension `n >= 2`, integrability
/// index `q >= 1`, Hessian comparison constant `H >= 1`.
#[derive(Debug, Clone)]
pub struct ExponentSet<S> {
    pub p: S,
    pub n: usize,
    pub q: S,
    pub h: S,

    /// `max(3/2, 2n/(n+2))`: lower p-threshold of the weighted estimates.
    pub p0: S,
    /// `2 - 1/H`: p-threshold for non-convex domains.
    pub p_bar: S,
    /// p-threshold for the second-derivative window at `n >= 3`.
    pub p1: Option<S>,
    /// p-threshold for the solution Hoelder window at `n >= 3`.
    pub p2: Option<S>,

    /// `2 / (2p - n(2-p))`: weight of `grad u` in `C(0,T; L^2)`.
    pub alpha1: S,
    /// `alpha1 + (2-p)/(2p)`: weight of `u` in `L^2(0,T; W^{2,p})`.
    pub alpha2: S,
    /// `4 / (2p - n(2-p)) = 2 alpha1`.
    pub alpha: S,
    /// `(alpha - n(2-p)^2 / (p(2p - n(2-p)))) / 2`.
    pub beta1: S,
    /// `(alpha + (2-p)/p) / 2`; equals `alpha2`.
    pub beta2: S,
    /// `gamma(1) = n / (p(n+2) - 2n)`: max-modulus decay exponent.
    pub beta: S,

    /// Second-derivative integrability `nq(p-1)/(n - q(2-p))` (dimension
    /// rules applied: plain `q` for `q > n` and for `n = 2`).
    pub q_hat: S,
    /// Lower end `2n / (n(p-1) + 2(2-p))` of the admissible q-range.
    pub q_bar: S,
    /// Upper end `(7-3p) / (4-2p)` of the admissible q-range.
    pub q_upper: S,
    /// `gamma(q')` for the supplied q: blow-up exponent of `|u_t|_q`.
    pub gamma_q: S,

    /// Hoelder exponent of `u`: `2 - n / q_hat`.
    pub lambda0: S,
    /// Time-weight exponent `n(q-2) / (q(2p - 2n + np))` for `u`.
    pub gamma0: S,
    /// Hoelder exponent of `grad u`: `1 - n / q`.
    pub lambda1: S,
    /// Time-weight exponent for `grad u`; same formula as `gamma0`.
    pub gamma1: S,

    /// `q` lies in `[q_bar, q_upper]`.
    pub q_admissible: bool,
    /// `q` sits exactly on the upper endpoint, where the open-interval
    /// variant of the time-derivative estimate treats it as a warning.
    pub q_at_upper_endpoint: bool,
}

/// Evaluates every exponent formula for `(p, n, q, H)`.
pub fn exponents<S: Real>(p: S, n: usize, q: S, h: S) -> Result<ExponentSet<S>> {
    let two = real::<S>(2.0);
    if !(p > S::one() && p <= two) {
        return Err(Error::invalid("p", format!("expected p in (1, 2], got {p}")));
    }
    if n < 2 {
        return Err(Error::invalid("n", format!("expected n >= 2, got {n}")));
    }
    if !(q >= S::one()) {
        return Err(Error::invalid("q", format!("expected q >= 1, got {q}")));
    }
    if !(h >= S::one()) {
        return Err(Error::invalid("H", format!("expected H >= 1, got {h}")));
    }
    let nf = real::<S>(n as f64);
    let eps = real::<S>(1e-12);

    // 2p - n(2-p): the denominator of the alpha family
    let d_alpha = two * p - nf * (two - p);
    if d_alpha.abs() < eps {
        return Err(Error::DegenerateParameters(format!(
            "2p - n(2-p) vanishes at p = {p}, n = {n}"
        )));
    }
    // p(n+2) - 2n: the denominator of gamma/beta
    let d_gamma = p * (nf + two) - two * nf;
    if d_gamma.abs() < eps {
        return Err(Error::DegenerateParameters(format!(
            "p(n+2) - 2n vanishes at p = {p}, n = {n}"
        )));
    }

    let p0 = real::<S>(1.5).max(two * nf / (nf + two));
    let p_bar = two - h.recip();
    let (p1, p2) = if n >= 3 {
        let nm2 = nf - two;
        let p1 = (real::<S>(7.0) * nm2 + S::one()
            - (real::<S>(4.0) * (nf - S::one()).powi(2) - real(3.0)).sqrt())
            / (real::<S>(3.0) * nm2);
        let p2 = (two * nf + real(7.0)
            - ((two * nf - real(7.0)).powi(2) + real::<S>(8.0) * nf).sqrt())
            / real(6.0);
        (Some(p1), Some(p2))
    } else {
        (None, None)
    };

    let alpha1 = two / d_alpha;
    let alpha = real::<S>(4.0) / d_alpha;
    let alpha2 = alpha1 + (two - p) / (two * p);
    let half = real::<S>(0.5);
    let beta1 = half * (alpha - nf * (two - p).powi(2) / (p * d_alpha));
    let beta2 = half * (alpha + (two - p) / p);
    let beta = nf / d_gamma;

    let q_bar = two * nf / (nf * (p - S::one()) + two * (two - p));
    let q_upper = if p < two {
        (real::<S>(7.0) - real::<S>(3.0) * p) / (real::<S>(4.0) - two * p)
    } else {
        S::infinity()
    };

    let q_hat = q_hat_rule(p, n, q)?;
    let q_conj = if q > S::one() {
        q / (q - S::one())
    } else {
        S::infinity()
    };
    let gamma_q = gamma_of_r_impl(p, nf, d_gamma, q_conj);

    let lambda0 = two - nf / q_hat;
    let gamma0 = nf * (q - two) / (q * d_gamma);
    let lambda1 = S::one() - nf / q;
    let gamma1 = gamma0;

    let tol = real::<S>(1e-12);
    let q_admissible = q >= q_bar - tol && q <= q_upper + tol;
    let q_at_upper_endpoint = (q - q_upper).abs() <= tol;

    Ok(ExponentSet {
        p,
        n,
        q,
        h,
        p0,
        p_bar,
        p1,
        p2,
        alpha1,
        alpha2,
        alpha,
        beta1,
        beta2,
        beta,
        q_hat,
        q_bar,
        q_upper,
        gamma_q,
        lambda0,
        gamma0,
        lambda1,
        gamma1,
        q_admissible,
        q_at_upper_endpoint,
    })
}

impl<S: Real> ExponentSet<S> {
    /// `gamma(r) = n(2-r) / (2rp - 2nr + rnp)` for `r` in `[1, 2]`.
    pub fn gamma_of_r(&self, r: S) -> S {
        let nf = real::<S>(self.n as f64);
        let d_gamma = self.p * (nf + real(2.0)) - real::<S>(2.0) * nf;
        gamma_of_r_impl(self.p, nf, d_gamma, r)
    }

    /// Interpolation exponent `a(r)` in `|phi|_2 <= c |grad phi|_p^a |phi|_r^(1-a)`:
    /// `a = np(2-r) / (2(np + rp - nr))`.
    pub fn gn_exponent(&self, r: S) -> S {
        let nf = real::<S>(self.n as f64);
        let two = real::<S>(2.0);
        nf * self.p * (two - r) / (two * (nf * self.p + r * self.p - nf * r))
    }

    /// Raw second-derivative integrability formula `nq(p-1)/(n - q(2-p))`,
    /// without the dimension-dependent case rules.
    pub fn q_hat_formula(&self, q: S) -> Result<S> {
        q_hat_formula_impl(self.p, real::<S>(self.n as f64), q)
    }
}

fn gamma_of_r_impl<S: Real>(_p: S, nf: S, d_gamma: S, r: S) -> S {
    // n(2-r) / (r (p(n+2) - 2n))
    nf * (real::<S>(2.0) - r) / (r * d_gamma)
}

fn q_hat_formula_impl<S: Real>(p: S, nf: S, q: S) -> Result<S> {
    let denom = nf - q * (real::<S>(2.0) - p);
    if denom.abs() < real(1e-12) {
        return Err(Error::DegenerateParameters(format!(
            "n - q(2-p) vanishes at q = {q}"
        )));
    }
    Ok(nf * q * (p - S::one()) / denom)
}

fn q_hat_rule<S: Real>(p: S, n: usize, q: S) -> Result<S> {
    let nf = real::<S>(n as f64);
    if n == 2 || q > nf {
        // at n = 2 (and above the dimension) the estimate keeps the
        // integrability of the datum
        return Ok(q);
    }
    // at q = n the formula limit is reported; any value below n is valid
    q_hat_formula_impl(p, nf, q)
}
