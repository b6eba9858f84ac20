//! Norms, seminorms and weighted space-time functionals over grid data —
//! the measurement layer for every estimate audit.
//!
//! Vector-valued fields enter every scalar norm through their pointwise
//! Euclidean magnitude. `L^inf` is the grid max; there is no off-grid
//! extremum search, the oversampled grid controls that error.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{EigenBasis, GridFunction, SpectralCoeffs};
use crate::error::Error;
use crate::scalar::{real, Real};
use crate::Result;

/// Quadrature L^q norm of a field, `q` in `[1, inf]` (`S::infinity()` for
/// the grid max).
pub fn lp_norm<S: Real>(f: &GridFunction<S>, q: S) -> Result<S> {
    if q.is_infinite() {
        let mut sup = S::zero();
        for node in 0..f.node_count() {
            sup = sup.max(f.magnitude(node));
        }
        return Ok(sup);
    }
    if !(q >= S::one()) {
        return Err(Error::invalid("q", format!("exponent must be >= 1, got {q}")));
    }
    let w = f.grid().weight();
    let mut acc = S::zero();
    for node in 0..f.node_count() {
        acc += f.magnitude(node).powf(q);
    }
    Ok((acc * w).powf(q.recip()))
}

/// First- and second-order Sobolev norms built from spectral derivatives.
#[derive(Debug, Clone, Copy)]
pub struct SobolevNorms<S> {
    /// `|f|_p + |grad f|_p`
    pub w1p: S,
    /// `|f|_p + |grad f|_p + |D^2 f|_p`
    pub w2p: S,
}

pub fn sobolev_norms<S: Real>(
    c: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
    p: S,
) -> Result<SobolevNorms<S>> {
    if !(p > S::one()) || p > real(2.0) {
        return Err(Error::invalid("p", format!("expected p in (1, 2], got {p}")));
    }
    let f = basis.synthesize(c)?;
    let g = basis.spectral_gradient(c)?;
    let h = basis.spectral_hessian(c)?;
    let lp = lp_norm(&f, p)?;
    let glp = lp_norm(&g, p)?;
    let hlp = lp_norm(&h, p)?;
    Ok(SobolevNorms {
        w1p: lp + glp,
        w2p: lp + glp + hlp,
    })
}

/// Discrete trace of `t -> |.(t)|`, strictly increasing in time.
#[derive(Debug, Clone)]
pub struct NormSeries<S> {
    times: Vec<S>,
    values: Vec<S>,
    label: String,
}

impl<S: Real> NormSeries<S> {
    pub fn new(times: Vec<S>, values: Vec<S>, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if times.len() != values.len() {
            return Err(Error::InvalidSeries {
                name: "norm_series",
                message: format!(
                    "times ({}) and values ({}) differ in length for `{label}`",
                    times.len(),
                    values.len()
                ),
            });
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidSeries {
                    name: "norm_series",
                    message: format!("times must be strictly increasing in `{label}`"),
                });
            }
        }
        if times.iter().any(|t| !(t.is_finite() && *t > S::zero())) {
            return Err(Error::InvalidSeries {
                name: "norm_series",
                message: format!("times must be positive and finite in `{label}`"),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < S::zero()) {
            return Err(Error::InvalidSeries {
                name: "norm_series",
                message: format!("values must be finite and nonnegative in `{label}`"),
            });
        }
        Ok(NormSeries {
            times,
            values,
            label,
        })
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Restriction to a closed time window.
    pub fn window(&self, lo: S, hi: S) -> (Vec<S>, Vec<S>) {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (&t, &v) in self.times.iter().zip(&self.values) {
            if t >= lo && t <= hi {
                ts.push(t);
                vs.push(v);
            }
        }
        (ts, vs)
    }
}

/// Result of `sup_t t^theta value(t)` over the sampled times.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSup<S> {
    pub sup: S,
    pub argmax_t: S,
}

pub fn weighted_sup<S: Real>(series: &NormSeries<S>, theta: S) -> Result<WeightedSup<S>> {
    if series.is_empty() {
        return Err(Error::InvalidSeries {
            name: "weighted_sup",
            message: "series is empty".to_string(),
        });
    }
    let mut best = WeightedSup {
        sup: S::neg_infinity(),
        argmax_t: series.times[0],
    };
    for (&t, &v) in series.times.iter().zip(&series.values) {
        let weighted = t.powf(theta) * v;
        if weighted > best.sup {
            best = WeightedSup {
                sup: weighted,
                argmax_t: t,
            };
        }
    }
    Ok(best)
}

/// Pair achieving the parabolic Hoelder sup.
#[derive(Debug, Clone)]
pub enum HolderArgmax<S> {
    Space { t: S, a: Vec<S>, b: Vec<S> },
    Time { x: Vec<S>, ta: S, tb: S },
    None,
}

/// Parabolic Hoelder seminorm estimate: sup over space pairs at equal time
/// of `|g(t,a)-g(t,b)| / |a-b|^lambda` plus sup over time pairs at equal
/// node of `|g(ta,x)-g(tb,x)| / |ta-tb|^(lambda/2)`.
#[derive(Debug, Clone)]
pub struct HolderSeminorm<S> {
    pub value: S,
    pub space_part: S,
    pub time_part: S,
    pub lambda: S,
    pub argmax: HolderArgmax<S>,
}

/// Sampled-pair estimate: all axis-neighbor pairs plus `pair_budget` seeded
/// random far pairs; time pairs are exhaustive over the snapshots.
pub fn holder_seminorm<S: Real>(
    snapshots: &[(S, GridFunction<S>)],
    lambda: S,
    pair_budget: usize,
    seed: u64,
) -> Result<HolderSeminorm<S>> {
    let pairs = sampled_space_pairs(snapshots, pair_budget, seed)?;
    holder_over_pairs(snapshots, lambda, &pairs)
}

/// Exhaustive space pairs; intended for small-grid oracle checks.
pub fn holder_seminorm_exhaustive<S: Real>(
    snapshots: &[(S, GridFunction<S>)],
    lambda: S,
) -> Result<HolderSeminorm<S>> {
    let n = check_snapshots(snapshots)?;
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            pairs.push((a, b));
        }
    }
    holder_over_pairs(snapshots, lambda, &pairs)
}

fn check_snapshots<S: Real>(snapshots: &[(S, GridFunction<S>)]) -> Result<usize> {
    if snapshots.len() < 2 {
        return Err(Error::invalid(
            "snapshots",
            "need at least two time snapshots".to_string(),
        ));
    }
    let n = snapshots[0].1.node_count();
    for (_, f) in snapshots {
        if f.node_count() != n {
            return Err(Error::invalid(
                "snapshots",
                "snapshots live on different grids".to_string(),
            ));
        }
    }
    Ok(n)
}

fn sampled_space_pairs<S: Real>(
    snapshots: &[(S, GridFunction<S>)],
    pair_budget: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    let n = check_snapshots(snapshots)?;
    let grid = snapshots[0].1.grid();
    let shape = grid.shape();
    let mut pairs = Vec::new();
    // axis-neighbor pairs
    for node in 0..n {
        let idx = grid.unflatten(node);
        for d in 0..shape.len() {
            if idx[d] + 1 < shape[d] {
                let mut other = idx.clone();
                other[d] += 1;
                pairs.push((node, grid.flatten(&other)));
            }
        }
    }
    // seeded far pairs
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pair_budget {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    Ok(pairs)
}

fn holder_over_pairs<S: Real>(
    snapshots: &[(S, GridFunction<S>)],
    lambda: S,
    pairs: &[(usize, usize)],
) -> Result<HolderSeminorm<S>> {
    if !(lambda > S::zero() && lambda < S::one()) {
        return Err(Error::invalid(
            "lambda",
            format!("exponent must lie in (0, 1), got {lambda}"),
        ));
    }
    let n = check_snapshots(snapshots)?;
    let grid = snapshots[0].1.grid().clone();
    let half = real::<S>(0.5);

    let mut space_part = S::zero();
    let mut space_arg: Option<(S, usize, usize)> = None;
    for &(a, b) in pairs {
        let xa = grid.coords(a);
        let xb = grid.coords(b);
        let dist = xa
            .iter()
            .zip(&xb)
            .map(|(&u, &v)| (u - v) * (u - v))
            .fold(S::zero(), |acc, d| acc + d)
            .sqrt();
        if dist == S::zero() {
            continue;
        }
        let denom = dist.powf(lambda);
        for (t, f) in snapshots {
            let mut diff_sq = S::zero();
            for c in 0..f.comps() {
                let d = f.values()[[a, c]] - f.values()[[b, c]];
                diff_sq += d * d;
            }
            let quot = diff_sq.sqrt() / denom;
            if quot > space_part {
                space_part = quot;
                space_arg = Some((*t, a, b));
            }
        }
    }

    let mut time_part = S::zero();
    let mut time_arg: Option<(usize, S, S)> = None;
    for i in 0..snapshots.len() {
        for j in (i + 1)..snapshots.len() {
            let (ti, fi) = &snapshots[i];
            let (tj, fj) = &snapshots[j];
            let dt = (*tj - *ti).abs();
            if dt == S::zero() {
                continue;
            }
            let denom = dt.powf(lambda * half);
            for node in 0..n {
                let mut diff_sq = S::zero();
                for c in 0..fi.comps() {
                    let d = fi.values()[[node, c]] - fj.values()[[node, c]];
                    diff_sq += d * d;
                }
                let quot = diff_sq.sqrt() / denom;
                if quot > time_part {
                    time_part = quot;
                    time_arg = Some((node, *ti, *tj));
                }
            }
        }
    }

    let argmax = if space_part >= time_part {
        match space_arg {
            Some((t, a, b)) => HolderArgmax::Space {
                t,
                a: grid.coords(a),
                b: grid.coords(b),
            },
            None => HolderArgmax::None,
        }
    } else {
        match time_arg {
            Some((node, ta, tb)) => HolderArgmax::Time {
                x: grid.coords(node),
                ta,
                tb,
            },
            None => HolderArgmax::None,
        }
    };

    Ok(HolderSeminorm {
        value: space_part + time_part,
        space_part,
        time_part,
        lambda,
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;

    fn basis(modes: usize, oversample: usize) -> EigenBasis<f64> {
        EigenBasis::build(Domain::unit_square(), modes, oversample).unwrap()
    }

    #[test]
    fn constant_field_has_unit_l2_on_unit_square() {
        let b = basis(3, 2);
        let f = b.grid_function(1, |_, _| 1.0);
        assert!((lp_norm(&f, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_eigenfunction_norms() {
        let b = basis(3, 2);
        let c = SpectralCoeffs::unit(&b, 0);
        let f = b.synthesize(&c).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 1.0).abs() < 1e-12);
        // grid contains the center, where 2 sin sin peaks at 2
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_exponent_below_one() {
        let b = basis(2, 2);
        let f = b.grid_function(1, |_, _| 1.0);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn sobolev_norm_of_zero_and_single_mode() {
        let b = basis(3, 2);
        let zero = SpectralCoeffs::zeros(&b, 1);
        let n = sobolev_norms(&zero, &b, 2.0).unwrap();
        assert_eq!(n.w1p, 0.0);
        assert_eq!(n.w2p, 0.0);

        let c = SpectralCoeffs::unit(&b, 0);
        let g = b.spectral_gradient(&c).unwrap();
        let grad_l2 = lp_norm(&g, 2.0).unwrap();
        let lambda = b.eigenvalues()[0];
        assert!((grad_l2 - lambda.sqrt()).abs() < 1e-10);

        let sob = sobolev_norms(&c, &b, 2.0).unwrap();
        let f_l2 = 1.0;
        assert!((sob.w1p - (f_l2 + grad_l2)).abs() < 1e-10);
        assert!(sob.w2p >= sob.w1p && sob.w1p >= f_l2);
    }

    #[test]
    fn weighted_sup_examples() {
        let times: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
        let theta = 0.7;
        // value(t) = t^{-theta} makes every sample weigh 1
        let values: Vec<f64> = times.iter().map(|t| t.powf(-theta)).collect();
        let s = NormSeries::new(times.clone(), values, "probe").unwrap();
        let ws = weighted_sup(&s, theta).unwrap();
        assert!((ws.sup - 1.0).abs() < 1e-12);

        // theta = 0 is the plain max
        let values: Vec<f64> = times.iter().map(|t| 3.0 - t).collect();
        let s = NormSeries::new(times.clone(), values, "probe").unwrap();
        let ws = weighted_sup(&s, 0.0).unwrap();
        assert!((ws.sup - (3.0 - times[0])).abs() < 1e-12);

        // value(t) = t^{-theta+0.1}: the compensated series grows in t
        let values: Vec<f64> = times.iter().map(|t| t.powf(-theta + 0.1)).collect();
        let s = NormSeries::new(times.clone(), values, "probe").unwrap();
        let ws = weighted_sup(&s, theta).unwrap();
        assert!((ws.argmax_t - times[times.len() - 1]).abs() < 1e-12);
    }

    #[test]
    fn norm_series_validates_inputs() {
        assert!(NormSeries::new(vec![0.1, 0.1], vec![1.0, 1.0], "x").is_err());
        assert!(NormSeries::new(vec![0.1], vec![1.0, 2.0], "x").is_err());
        assert!(NormSeries::new(vec![0.1, 0.2], vec![1.0, -2.0], "x").is_err());
    }

    #[test]
    fn holder_of_constant_is_zero() {
        let b = basis(2, 2);
        let f = b.grid_function(1, |_, _| 4.2);
        let snaps = vec![(0.1, f.clone()), (0.2, f)];
        let h = holder_seminorm(&snaps, 0.5, 10, 7).unwrap();
        assert_eq!(h.value, 0.0);
    }

    #[test]
    fn holder_linear_field_matches_brute_force() {
        // static g(x) = x_0; the sup of |dx_0| / |dx|^lambda over grid pairs
        // is attained at the largest same-row separation
        let b = basis(2, 2);
        let f = b.grid_function(1, |x, _| x[0]);
        let snaps = vec![(0.1, f.clone()), (0.2, f)];
        let lambda = 0.5;
        let exhaustive = holder_seminorm_exhaustive(&snaps, lambda).unwrap();
        let g = b.grid().shape()[0] as f64;
        let expect = ((g - 1.0) / g).powf(lambda);
        assert!(
            (exhaustive.space_part - expect).abs() < 1e-12,
            "space part {} vs {}",
            exhaustive.space_part,
            expect
        );
        // sampled estimate never exceeds the exhaustive sup
        let sampled = holder_seminorm(&snaps, lambda, 50, 3).unwrap();
        assert!(sampled.value <= exhaustive.value + 1e-12);
    }

    #[test]
    fn holder_time_part_factorizes_for_separable_fields() {
        // g(t, x) = t * h(x): the time quotient is |dt|^{1 - lambda/2} max|h|
        let b = basis(2, 2);
        let h = |x: &[f64]| (x[0] - 0.3) * (x[1] + 0.2);
        let t1 = 0.5;
        let t2 = 1.0;
        let f1 = b.grid_function(1, |x, _| t1 * h(x));
        let f2 = b.grid_function(1, |x, _| t2 * h(x));
        let lambda = 0.4;
        let snaps = vec![(t1, f1), (t2, f2.clone())];
        let result = holder_seminorm_exhaustive(&snaps, lambda).unwrap();
        let max_h = (0..f2.node_count())
            .map(|i| h(&b.grid().coords(i)).abs())
            .fold(0.0f64, f64::max);
        let expect = (t2 - t1).powf(1.0 - lambda / 2.0) * max_h;
        assert!((result.time_part - expect).abs() < 1e-12);
    }

    #[test]
    fn holder_value_grows_with_pair_budget() {
        let b = basis(3, 2);
        let f = b.grid_function(1, |x, _| (7.0 * x[0]).sin() + x[1]);
        let g = b.grid_function(1, |x, _| (7.0 * x[0]).sin() - x[1]);
        let snaps = vec![(0.1, f), (0.3, g)];
        let small = holder_seminorm(&snaps, 0.5, 5, 42).unwrap();
        let big = holder_seminorm(&snaps, 0.5, 500, 42).unwrap();
        assert!(big.value + 1e-15 >= small.value);
    }

    #[test]
    fn holder_rejects_bad_lambda() {
        let b = basis(2, 2);
        let f = b.grid_function(1, |_, _| 0.0);
        let snaps = vec![(0.1, f.clone()), (0.2, f)];
        assert!(holder_seminorm(&snaps, 1.0, 5, 1).is_err());
        assert!(holder_seminorm(&snaps, 0.0, 5, 1).is_err());
    }
}
