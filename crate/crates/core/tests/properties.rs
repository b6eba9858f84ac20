//! Property tests for the measurement and operator layers.

use std::sync::OnceLock;

use ndarray::Array2;
use proptest::prelude::*;

use plapsim_core::basis::{Domain, SpectralCoeffs};
use plapsim_core::estimates::check_lemma27;
use plapsim_core::exponents::exponents;
use plapsim_core::norms::{lp_norm, weighted_sup, NormSeries};
use plapsim_core::operators::{coeff_a, dual_tensor, nonlinear_load};
use plapsim_core::{Basis64, GridFn64};

fn shared_basis() -> &'static Basis64 {
    static CELL: OnceLock<Basis64> = OnceLock::new();
    CELL.get_or_init(|| Basis64::build(Domain::unit_square(), 4, 2).expect("basis"))
}

fn coeffs_from(values: &[f64]) -> SpectralCoeffs<f64> {
    let basis = shared_basis();
    let mut arr = Array2::zeros((basis.mode_count(), 1));
    for j in 0..basis.mode_count() {
        arr[[j, 0]] = values[j % values.len()] * (1.0 + j as f64).recip();
    }
    SpectralCoeffs::from_values(basis, arr).expect("finite coefficients")
}

fn field_from(values: &[f64]) -> GridFn64 {
    shared_basis()
        .synthesize(&coeffs_from(values))
        .expect("synthesis")
}

fn small_coeff_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 4..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_norm_is_absolutely_homogeneous(vals in small_coeff_vec(),
                                         s in -5.0..5.0f64,
                                         q in 1.0..6.0f64) {
        let f = field_from(&vals);
        let n = lp_norm(&f, q).unwrap();
        let ns = lp_norm(&f.scaled(s), q).unwrap();
        prop_assert!((ns - s.abs() * n).abs() <= 1e-12 * (1.0 + n));
    }

    #[test]
    fn lp_norm_is_monotone_in_q_on_the_unit_square(vals in small_coeff_vec(),
                                                   q1 in 1.0..5.0f64,
                                                   dq in 0.0..3.0f64) {
        // unit measure: |f|_q <= |f|_{q'} for q <= q'
        let f = field_from(&vals);
        let lo = lp_norm(&f, q1).unwrap();
        let hi = lp_norm(&f, q1 + dq).unwrap();
        prop_assert!(lo <= hi + 1e-8 * (1.0 + hi));
    }

    #[test]
    fn lp_norm_satisfies_the_triangle_inequality(a in small_coeff_vec(),
                                                 b in small_coeff_vec(),
                                                 q in 1.0..6.0f64) {
        let fa = field_from(&a);
        let fb = field_from(&b);
        let mut sum = fa.clone();
        ndarray::Zip::from(sum.values_mut())
            .and(fb.values())
            .for_each(|x, &y| *x += y);
        let ns = lp_norm(&sum, q).unwrap();
        let na = lp_norm(&fa, q).unwrap();
        let nb = lp_norm(&fb, q).unwrap();
        prop_assert!(ns <= na + nb + 1e-12 * (1.0 + na + nb));
    }

    #[test]
    fn linf_is_the_grid_max(vals in small_coeff_vec()) {
        let f = field_from(&vals);
        let sup = lp_norm(&f, f64::INFINITY).unwrap();
        let direct = (0..f.node_count())
            .map(|i| f.values()[[i, 0]].abs())
            .fold(0.0f64, f64::max);
        prop_assert!((sup - direct).abs() <= 1e-15);
    }

    #[test]
    fn round_trip_is_identity_on_the_trial_space(vals in small_coeff_vec()) {
        let basis = shared_basis();
        let c = coeffs_from(&vals);
        let f = basis.synthesize(&c).unwrap();
        let back = basis.project(&f).unwrap();
        for j in 0..basis.mode_count() {
            prop_assert!((back.values()[[j, 0]] - c.values()[[j, 0]]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_the_adjoint_of_synthesis(a in small_coeff_vec(), b in small_coeff_vec()) {
        let basis = shared_basis();
        let c = coeffs_from(&a);
        let f = field_from(&b);
        let synth = basis.synthesize(&c).unwrap();
        let w = basis.grid().weight();
        let lhs: f64 = (0..f.node_count())
            .map(|i| synth.values()[[i, 0]] * f.values()[[i, 0]] * w)
            .sum();
        let proj = basis.project(&f).unwrap();
        let rhs: f64 = (0..basis.mode_count())
            .map(|j| c.values()[[j, 0]] * proj.values()[[j, 0]])
            .sum();
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn laplacian_route_equals_eigenvalue_scaling(vals in small_coeff_vec()) {
        let basis = shared_basis();
        let c = coeffs_from(&vals);
        let lap = basis.spectral_laplacian(&c).unwrap();
        let scaled = c.map_eigen(basis, |l, v| -l * v).unwrap();
        let direct = basis.synthesize(&scaled).unwrap();
        for node in 0..lap.node_count() {
            let x = lap.values()[[node, 0]];
            let y = direct.values()[[node, 0]];
            prop_assert!((x - y).abs() <= 1e-13 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn diffusivity_respects_its_upper_bound(vals in small_coeff_vec(),
                                            mu in 1e-4..1.0f64,
                                            p in 1.05..1.95f64) {
        let basis = shared_basis();
        let g = basis.spectral_gradient(&coeffs_from(&vals)).unwrap();
        let a = coeff_a(&g, mu, p).unwrap();
        let bound = mu.powf((p - 2.0) / 2.0);
        for node in 0..g.node_count() {
            let v = a.field.values()[[node, 0]];
            prop_assert!(v > 0.0 && v <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn load_is_homogeneous_of_degree_p_minus_one(vals in small_coeff_vec(),
                                                 s in 0.1..10.0f64,
                                                 p in 1.1..1.9f64) {
        let basis = shared_basis();
        let c = coeffs_from(&vals);
        let d = nonlinear_load(&c, 0.0, p, basis).unwrap();
        let ds = nonlinear_load(&c.scaled(s), 0.0, p, basis).unwrap();
        let factor = s.powf(p - 1.0);
        for j in 0..basis.mode_count() {
            let expect = factor * d.values()[[j, 0]];
            prop_assert!((ds.values()[[j, 0]] - expect).abs()
                <= 1e-8 * expect.abs().max(1e-10));
        }
    }

    #[test]
    fn dual_tensor_scalar_mode_and_sup_bound(vals in small_coeff_vec(),
                                             mu in 1e-3..1.0f64,
                                             p in 1.05..1.95f64,
                                             b_flag in any::<bool>()) {
        let basis = shared_basis();
        let g = basis.spectral_gradient(&coeffs_from(&vals)).unwrap();
        let t = dual_tensor(&g, mu, p, b_flag).unwrap();
        // sup-norm bound (3 - p) mu^((p-2)/2)
        let bound = (3.0 - p) * mu.powf((p - 2.0) / 2.0);
        prop_assert!(t.max_component_magnitude() < bound);
        if !b_flag {
            // scalar mode acts like the plain diffusivity
            let probe = basis.grid_function(2, |x, k| if k == 0 { x[1] } else { 1.0 - x[0] });
            let out = t.apply(&probe).unwrap();
            let a = coeff_a(&g, mu, p).unwrap();
            for node in 0..g.node_count() {
                for ch in 0..2 {
                    let expect = a.field.values()[[node, 0]] * probe.values()[[node, ch]];
                    prop_assert!((out.values()[[node, ch]] - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn weighted_sup_with_zero_weight_is_the_plain_max(vals in prop::collection::vec(0.0..10.0f64, 3..20)) {
        let times: Vec<f64> = (1..=vals.len()).map(|i| i as f64 * 0.1).collect();
        let series = NormSeries::new(times, vals.clone(), "probe").unwrap();
        let ws = weighted_sup(&series, 0.0).unwrap();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!((ws.sup - max).abs() < 1e-12);
    }

    #[test]
    fn coefficient_difference_bound_never_fails(mu in 1e-3..10.0f64,
                                                p in 1.01..1.99f64,
                                                xi in 0.0..100.0f64,
                                                eta in 0.0..100.0f64) {
        let check = check_lemma27(mu, p, xi, eta).unwrap();
        prop_assert!(check.pass);
    }

    #[test]
    fn exponent_identities_hold_at_random_parameters(pr in 0.0..1.0f64,
                                                     n in 2usize..6,
                                                     q in 1.1..4.0f64) {
        // stay away from the degenerate denominator p = 2n/(n+2)
        let degenerate = 2.0 * n as f64 / (n as f64 + 2.0);
        let p = 1.02 + 0.96 * pr;
        prop_assume!((p - degenerate).abs() > 1e-3);
        let e = exponents(p, n, q, 1.0).unwrap();
        prop_assert!((e.alpha - 2.0 * e.alpha1).abs() <= 1e-12 * e.alpha.abs().max(1.0));
        prop_assert!((e.beta2 - e.alpha2).abs() <= 1e-12 * e.alpha2.abs().max(1.0));
        prop_assert!(e.gamma_of_r(2.0).abs() <= 1e-12);
        let qh = e.q_hat_formula(e.q_bar).unwrap();
        prop_assert!((qh - 2.0).abs() <= 1e-11);
        for r in [1.0, 1.5, 2.0] {
            let a = e.gn_exponent(r);
            let defect = 0.5 - a * (1.0 / p - 1.0 / n as f64) - (1.0 - a) / r;
            prop_assert!(defect.abs() <= 1e-12);
        }
    }
}
