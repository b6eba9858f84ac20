//! Discrete weak-form operators: the lifted diffusivity
//! `a(mu, v) = (mu + |grad v|^2)^((p-2)/2)`, the Galerkin load of the
//! (regularized) p-Laplacian, and the coefficient tensor of the dual
//! linear parabolic system.

use ndarray::Array2;

use crate::basis::{EigenBasis, GridFunction, SpectralCoeffs};
use crate::error::Error;
use crate::scalar::{real, Real};
use crate::Result;

/// Gradient magnitudes below this threshold count as vanishing when
/// `mu = 0`; there the product `a * grad v` is taken as 0 (the limit of
/// `|grad v|^(p-2) grad v` for p > 1) and the bare coefficient is flagged.
pub fn degenerate_gradient_threshold<S: Real>() -> S {
    real(1e-14)
}

/// Nodal diffusivity values. For `mu = 0` the flagged nodes carry
/// `+inf` as a marker; they are never used unmultiplied.
#[derive(Debug, Clone)]
pub struct Diffusivity<S> {
    pub mu: S,
    pub p: S,
    pub field: GridFunction<S>,
    /// Flat node indices where `mu = 0` met a vanishing gradient.
    pub flagged: Vec<usize>,
}

/// Pointwise `(mu + |grad v|^2)^((p-2)/2)` from a gradient field.
pub fn coeff_a<S: Real>(grad_v: &GridFunction<S>, mu: S, p: S) -> Result<Diffusivity<S>> {
    check_mu_p(mu, p, true)?;
    let two = real::<S>(2.0);
    let exponent = (p - two) / two;
    let threshold_sq = degenerate_gradient_threshold::<S>().powi(2);
    let mut field = grad_v.clone();
    let mut values = Array2::zeros((grad_v.node_count(), 1));
    let mut flagged = Vec::new();
    for node in 0..grad_v.node_count() {
        let a = if p == two {
            S::one()
        } else {
            let g2 = grad_v.magnitude_sq(node);
            if mu == S::zero() && g2 < threshold_sq {
                flagged.push(node);
                S::infinity()
            } else {
                (mu + g2).powf(exponent)
            }
        };
        values[[node, 0]] = a;
    }
    *field.values_mut() = values;
    Ok(Diffusivity {
        mu,
        p,
        field,
        flagged,
    })
}

/// Finite nodal diffusivity for frozen-coefficient linear solves: flagged
/// nodes (vanishing gradient at `mu = 0`) contribute 0.
pub fn frozen_coefficient<S: Real>(grad_v: &GridFunction<S>, mu: S, p: S) -> Result<Vec<S>> {
    let a = coeff_a(grad_v, mu, p)?;
    let mut out = Vec::with_capacity(a.field.node_count());
    for node in 0..a.field.node_count() {
        let v = a.field.values()[[node, 0]];
        out.push(if v.is_finite() { v } else { S::zero() });
    }
    Ok(out)
}

/// Galerkin load `d_j(c) = <a(mu, v) grad v, grad a_j>` by quadrature,
/// with `v` synthesized from `c`. For `p = 2` this reduces exactly to the
/// stiffness action `Lambda c`.
pub fn nonlinear_load<S: Real>(
    c: &SpectralCoeffs<S>,
    mu: S,
    p: S,
    basis: &EigenBasis<S>,
) -> Result<SpectralCoeffs<S>> {
    check_mu_p(mu, p, true)?;
    let grad = basis.spectral_gradient(c)?;
    let flux = diffusive_flux(&grad, mu, p)?;
    basis.project_gradient(&flux)
}

/// Pointwise `a(mu, v) grad v` with the `mu = 0` vanishing-gradient
/// convention applied.
pub fn diffusive_flux<S: Real>(grad: &GridFunction<S>, mu: S, p: S) -> Result<GridFunction<S>> {
    check_mu_p(mu, p, true)?;
    let two = real::<S>(2.0);
    let exponent = (p - two) / two;
    let threshold_sq = degenerate_gradient_threshold::<S>().powi(2);
    let mut flux = grad.clone();
    for node in 0..grad.node_count() {
        let g2 = grad.magnitude_sq(node);
        let a = if p == two {
            S::one()
        } else if mu == S::zero() {
            if g2 < threshold_sq {
                S::zero()
            } else {
                g2.powf(exponent)
            }
        } else {
            (mu + g2).powf(exponent)
        };
        if !a.is_finite() {
            return Err(Error::NonFinite {
                node,
                context: format!("diffusivity overflow: mu = {mu}, |grad|^2 = {g2}"),
            });
        }
        for ch in 0..grad.comps() {
            flux.values_mut()[[node, ch]] = a * grad.values()[[node, ch]];
        }
    }
    Ok(flux)
}

/// Frozen-coefficient stiffness action `x -> <a grad x, grad a_j>` used by
/// the lagged-diffusivity linear solves. `a_nodes` must be finite.
pub fn weighted_stiffness_apply<S: Real>(
    a_nodes: &[S],
    x: &SpectralCoeffs<S>,
    basis: &EigenBasis<S>,
) -> Result<SpectralCoeffs<S>> {
    let grad = basis.spectral_gradient(x)?;
    let mut flux = grad;
    for node in 0..flux.node_count() {
        let a = a_nodes[node];
        for ch in 0..flux.comps() {
            flux.values_mut()[[node, ch]] = a * flux.values()[[node, ch]];
        }
    }
    basis.project_gradient(&flux)
}

/// Coefficient tensor of the dual system: scalar part `a(mu, v) I` minus,
/// when `b_flag` is set, the rank-one correction
/// `(2-p) (grad v ⊗ grad v) / (mu + |grad v|^2)^((4-p)/2)`.
///
/// The frozen-field convention supplies the gradient directly; dual solves
/// evaluate it at the time-reversed primal instant.
#[derive(Debug, Clone)]
pub struct DualTensor<S> {
    pub mu: S,
    pub p: S,
    pub b_flag: bool,
    /// Scalar part per node.
    pub scalar: Vec<S>,
    /// Rank-one coefficient `(2-p) / (mu + |g|^2)^((4-p)/2)` per node.
    pub rank_coeff: Vec<S>,
    /// Frozen gradient field (the rank-one direction).
    pub grad: GridFunction<S>,
}

pub fn dual_tensor<S: Real>(
    grad_v: &GridFunction<S>,
    mu: S,
    p: S,
    b_flag: bool,
) -> Result<DualTensor<S>> {
    check_mu_p(mu, p, false)?;
    let exp_scalar = (p - real(2.0)) / real(2.0);
    let exp_rank = (real::<S>(4.0) - p) / real(2.0);
    let two_minus_p = real::<S>(2.0) - p;
    let n = grad_v.node_count();
    let mut scalar = Vec::with_capacity(n);
    let mut rank_coeff = Vec::with_capacity(n);
    for node in 0..n {
        let g2 = grad_v.magnitude_sq(node);
        scalar.push((mu + g2).powf(exp_scalar));
        rank_coeff.push(if b_flag {
            two_minus_p / (mu + g2).powf(exp_rank)
        } else {
            S::zero()
        });
    }
    Ok(DualTensor {
        mu,
        p,
        b_flag,
        scalar,
        rank_coeff,
        grad: grad_v.clone(),
    })
}

impl<S: Real> DualTensor<S> {
    /// Applies the tensor to a direction field with the same channel layout
    /// as the frozen gradient: `a w - coeff (g . w) g` pointwise.
    pub fn apply(&self, w: &GridFunction<S>) -> Result<GridFunction<S>> {
        if w.comps() != self.grad.comps() || w.node_count() != self.grad.node_count() {
            return Err(Error::invalid(
                "w",
                format!(
                    "direction field shape ({}, {}) does not match the frozen gradient ({}, {})",
                    w.node_count(),
                    w.comps(),
                    self.grad.node_count(),
                    self.grad.comps()
                ),
            ));
        }
        let mut out = w.clone();
        let ch = w.comps();
        for node in 0..w.node_count() {
            let a = self.scalar[node];
            let kappa = self.rank_coeff[node];
            let mut gw = S::zero();
            for c in 0..ch {
                gw += self.grad.values()[[node, c]] * w.values()[[node, c]];
            }
            for c in 0..ch {
                out.values_mut()[[node, c]] =
                    a * w.values()[[node, c]] - kappa * gw * self.grad.values()[[node, c]];
            }
        }
        Ok(out)
    }

    /// Largest absolute tensor component over all nodes and index pairs.
    pub fn max_component_magnitude(&self) -> S {
        let ch = self.grad.comps();
        let mut sup = S::zero();
        for node in 0..self.grad.node_count() {
            let a = self.scalar[node];
            let kappa = self.rank_coeff[node];
            for alpha in 0..ch {
                for beta in 0..ch {
                    let delta = if alpha == beta { S::one() } else { S::zero() };
                    let entry = a * delta
                        - kappa
                            * self.grad.values()[[node, alpha]]
                            * self.grad.values()[[node, beta]];
                    sup = sup.max(entry.abs());
                }
            }
        }
        sup
    }

    /// Smallest eigenvalue of the pointwise quadratic form at one node.
    /// The form is `a I - kappa g g^T`, so the spectrum is `a` (on the
    /// orthogonal complement) and `a - kappa |g|^2`.
    pub fn min_form_eigenvalue(&self, node: usize) -> S {
        let a = self.scalar[node];
        let g2 = self.grad.magnitude_sq(node);
        a.min(a - self.rank_coeff[node] * g2)
    }
}

/// Energy budget `B(mu, w) = c |w|_2^2 + c(Omega, T) mu^(p/2)`; both
/// multiplicative constants are configuration inputs (default 1).
pub fn b_budget<S: Real>(mu: S, p: S, w_l2: S, c_norm: S, c_domain: S) -> S {
    c_norm * w_l2 * w_l2 + c_domain * mu.powf(p / real(2.0))
}

/// Galerkin matrices and load for a fixed basis and parameters.
pub struct GalerkinOperator<'a, S> {
    basis: &'a EigenBasis<S>,
    pub mu: S,
    pub p: S,
}

impl<'a, S: Real> GalerkinOperator<'a, S> {
    pub fn new(basis: &'a EigenBasis<S>, mu: S, p: S) -> Result<Self> {
        check_mu_p(mu, p, true)?;
        Ok(GalerkinOperator { basis, mu, p })
    }

    /// Diagonal of the stiffness matrix in the orthonormal eigenbasis.
    pub fn stiffness_diag(&self) -> &[S] {
        self.basis.eigenvalues()
    }

    /// Full quadrature stiffness matrix (diagnostic).
    pub fn assemble_stiffness(&self) -> Array2<S> {
        self.basis.assemble_stiffness()
    }

    pub fn load(&self, c: &SpectralCoeffs<S>) -> Result<SpectralCoeffs<S>> {
        nonlinear_load(c, self.mu, self.p, self.basis)
    }
}

fn check_mu_p<S: Real>(mu: S, p: S, allow_zero_mu: bool) -> Result<()> {
    let lo = if allow_zero_mu { mu >= S::zero() } else { mu > S::zero() };
    if !lo || !mu.is_finite() {
        return Err(Error::invalid(
            "mu",
            format!(
                "expected mu {} and finite, got {mu}",
                if allow_zero_mu { ">= 0" } else { "> 0" }
            ),
        ));
    }
    if !(p > S::one()) || p > real(2.0) {
        return Err(Error::invalid("p", format!("expected p in (1, 2], got {p}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Domain;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis(modes: usize, oversample: usize) -> EigenBasis<f64> {
        EigenBasis::build(Domain::unit_square(), modes, oversample).unwrap()
    }

    fn random_coeffs(basis: &EigenBasis<f64>, seed: u64, decay: f64) -> SpectralCoeffs<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Array2::zeros((basis.mode_count(), 1));
        for j in 0..basis.mode_count() {
            let lambda = basis.eigenvalues()[j];
            values[[j, 0]] = rng.gen_range(-1.0..1.0) * lambda.powf(-decay);
        }
        SpectralCoeffs::from_values(basis, values).unwrap()
    }

    #[test]
    fn coeff_a_trivial_values() {
        let b = basis(2, 2);
        let zero_grad = b.grid_function(2, |_, _| 0.0);
        let a = coeff_a(&zero_grad, 1.0, 1.5).unwrap();
        assert!((a.field.values()[[0, 0]] - 1.0).abs() < 1e-15);

        // p = 2 gives exponent zero
        let g = b.grid_function(2, |x, _| x[0] + 0.3);
        let a = coeff_a(&g, 0.7, 2.0).unwrap();
        for node in 0..g.node_count() {
            assert!((a.field.values()[[node, 0]] - 1.0).abs() < 1e-15);
        }

        // base equal to one: mu + |grad|^2 = 1
        let g = b.grid_function(2, |_, k| if k == 0 { 0.75f64.sqrt() } else { 0.0 });
        let a = coeff_a(&g, 0.25, 1.5).unwrap();
        for node in 0..g.node_count() {
            assert!((a.field.values()[[node, 0]] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coeff_a_respects_upper_bound() {
        let b = basis(3, 2);
        let mu = 0.01f64;
        let p = 1.5f64;
        let bound = mu.powf((p - 2.0) / 2.0);
        for seed in 0..5 {
            let c = random_coeffs(&b, seed, 0.5);
            let g = b.spectral_gradient(&c).unwrap();
            let a = coeff_a(&g, mu, p).unwrap();
            for node in 0..g.node_count() {
                let v = a.field.values()[[node, 0]];
                assert!(v > 0.0 && v <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn coeff_a_flags_degenerate_nodes_at_mu_zero() {
        let b = basis(2, 2);
        let zero_grad = b.grid_function(2, |_, _| 0.0);
        let a = coeff_a(&zero_grad, 0.0, 1.5).unwrap();
        assert_eq!(a.flagged.len(), zero_grad.node_count());
        assert!(a.field.values()[[0, 0]].is_infinite());
        // the multiplied flux is zero there
        let flux = diffusive_flux(&zero_grad, 0.0, 1.5).unwrap();
        assert!(flux.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn load_reduces_to_stiffness_for_p_two() {
        let b = basis(4, 2);
        let c = SpectralCoeffs::unit(&b, 0);
        let d = nonlinear_load(&c, 0.3, 2.0, &b).unwrap();
        let lambda = b.eigenvalues()[0];
        for j in 0..b.mode_count() {
            let expect = if j == 0 { lambda } else { 0.0 };
            assert!(
                (d.values()[[j, 0]] - expect).abs() < 1e-10,
                "d[{j}] = {}",
                d.values()[[j, 0]]
            );
        }
        let zero = SpectralCoeffs::zeros(&b, 1);
        let d0 = nonlinear_load(&zero, 0.3, 1.5, &b).unwrap();
        assert!(d0.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn load_is_monotone_on_random_pairs() {
        let b = basis(3, 2);
        for seed in 0..10u64 {
            let c1 = random_coeffs(&b, 2 * seed, 0.4);
            let c2 = random_coeffs(&b, 2 * seed + 1, 0.4);
            let d1 = nonlinear_load(&c1, 1e-3, 1.5, &b).unwrap();
            let d2 = nonlinear_load(&c2, 1e-3, 1.5, &b).unwrap();
            let mut ip = 0.0;
            for j in 0..b.mode_count() {
                ip += (d1.values()[[j, 0]] - d2.values()[[j, 0]])
                    * (c1.values()[[j, 0]] - c2.values()[[j, 0]]);
            }
            assert!(ip >= -1e-12, "monotonicity probe failed: {ip}");
        }
    }

    #[test]
    fn load_is_degree_p_minus_one_homogeneous_at_mu_zero() {
        let b = basis(3, 2);
        let p = 1.5;
        let c = random_coeffs(&b, 11, 0.4);
        let d = nonlinear_load(&c, 0.0, p, &b).unwrap();
        for s in [0.5, 2.0, 7.3] {
            let ds = nonlinear_load(&c.scaled(s), 0.0, p, &b).unwrap();
            let factor = s.powf(p - 1.0);
            for j in 0..b.mode_count() {
                let expect = factor * d.values()[[j, 0]];
                let got = ds.values()[[j, 0]];
                assert!(
                    (got - expect).abs() <= 1e-8 * expect.abs().max(1e-8),
                    "j = {j}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn dual_tensor_scalar_mode_matches_coeff_a() {
        let b = basis(3, 2);
        let c = random_coeffs(&b, 5, 0.4);
        let g = b.spectral_gradient(&c).unwrap();
        let t = dual_tensor(&g, 0.5, 1.5, false).unwrap();
        let probe = b.grid_function(2, |x, k| if k == 0 { x[1] } else { -x[0] });
        let out = t.apply(&probe).unwrap();
        let a = coeff_a(&g, 0.5, 1.5).unwrap();
        for node in 0..g.node_count() {
            for ch in 0..2 {
                let expect = a.field.values()[[node, 0]] * probe.values()[[node, ch]];
                assert!((out.values()[[node, ch]] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dual_tensor_correction_vanishes_as_p_tends_to_two() {
        let b = basis(2, 2);
        let c = random_coeffs(&b, 9, 0.4);
        let g = b.spectral_gradient(&c).unwrap();
        let t = dual_tensor(&g, 1.0, 2.0 - 1e-12, true).unwrap();
        for node in 0..g.node_count() {
            assert!(t.rank_coeff[node].abs() < 1e-11);
        }
    }

    #[test]
    fn dual_tensor_is_uniformly_elliptic() {
        let b = basis(3, 2);
        let p = 1.5;
        let mu = 1.0;
        for seed in 0..5u64 {
            let c = random_coeffs(&b, seed + 20, 0.3);
            let g = b.spectral_gradient(&c).unwrap();
            let t = dual_tensor(&g, mu, p, true).unwrap();
            for node in 0..g.node_count() {
                let g2 = g.magnitude_sq(node);
                let lower = (p - 1.0) * (mu + g2).powf((p - 2.0) / 2.0);
                let min_eig = t.min_form_eigenvalue(node);
                assert!(
                    min_eig >= lower - 1e-13,
                    "node {node}: min eig {min_eig} < {lower}"
                );
                // dense 2x2 cross-check of the closed-form spectrum
                let a = t.scalar[node];
                let k = t.rank_coeff[node];
                let (gx, gy) = (g.values()[[node, 0]], g.values()[[node, 1]]);
                let (m11, m22, m12) = (a - k * gx * gx, a - k * gy * gy, -k * gx * gy);
                let tr = m11 + m22;
                let det = m11 * m22 - m12 * m12;
                let dense_min = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
                assert!((dense_min - min_eig).abs() < 1e-10 * (1.0 + min_eig.abs()));
            }
        }
    }

    #[test]
    fn dual_tensor_sup_norm_bound_holds() {
        let b = basis(3, 2);
        let p = 1.3f64;
        let mu = 0.2f64;
        let bound = (3.0 - p) * mu.powf((p - 2.0) / 2.0);
        for seed in 0..5u64 {
            let c = random_coeffs(&b, seed + 40, 0.3);
            let g = b.spectral_gradient(&c).unwrap();
            for b_flag in [false, true] {
                let t = dual_tensor(&g, mu, p, b_flag).unwrap();
                assert!(t.max_component_magnitude() < bound);
            }
        }
    }

    #[test]
    fn dual_tensor_requires_positive_mu() {
        let b = basis(2, 2);
        let g = b.grid_function(2, |_, _| 0.1);
        assert!(dual_tensor(&g, 0.0, 1.5, true).is_err());
    }

    #[test]
    fn budget_examples() {
        assert!((b_budget(0.0f64, 1.5, 2.0, 1.0, 1.0) - 4.0).abs() < 1e-15);
        assert!((b_budget(1.0f64, 1.7, 0.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        let single = b_budget(0.0f64, 1.5, 1.5, 1.0, 1.0);
        let doubled = b_budget(0.0f64, 1.5, 3.0, 1.0, 1.0);
        assert!((doubled - 4.0 * single).abs() < 1e-12);
    }

    #[test]
    fn galerkin_operator_exposes_eigenvalue_diagonal() {
        let b = basis(3, 2);
        let op = GalerkinOperator::new(&b, 0.1, 1.8).unwrap();
        assert_eq!(op.stiffness_diag(), b.eigenvalues());
        let d0 = op.load(&SpectralCoeffs::zeros(&b, 1)).unwrap();
        assert!(d0.values().iter().all(|v| *v == 0.0));
    }
}
