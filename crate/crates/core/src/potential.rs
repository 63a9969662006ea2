//! The mixing potential, its convex/non-convex split, the regularization of
//! the logarithmic part, and the truncation maps.
//!
//! The potential is
//!
//! ```text
//! f(phi, c) = phi ln phi + (1 - phi) ln(1 - phi) + phi (1 - phi)
//!           + c^2 / 2 + c (1 - phi) + ln 2,
//! ```
//!
//! split as `f = f1 + f2` with the convex singular part
//! `f1(phi) = phi ln phi + (1 - phi) ln(1 - phi) + ln 2` (the `ln 2` makes
//! `f1(1/2) = 0`) and the smooth remainder
//! `f2(phi, c) = phi (1 - phi) + c^2 / 2 + c (1 - phi)`.
//!
//! `f1` is only defined on (0, 1); the solver works with the C^1
//! regularization `f1_delta` that keeps `f1` on `[delta, 1 - delta]` and
//! continues it quadratically with the frozen curvature
//! `f1''(delta) = 1 / (delta (1 - delta))`, so `f1_delta` is convex on all of
//! R, touches `f1` from below, increases pointwise as `delta` decreases, and
//! `f1_delta'` is globally Lipschitz with constant `1 / (delta (1 - delta))`.

use crate::{Error, Result};

/// Regularization and truncation scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    /// Regularization scale of the logarithmic part, `0 < delta <= 1/4`.
    pub delta: f64,
    /// Nutrient truncation scale: `c` is clamped to `[0, 1/eps]`, `0 < eps <= 1`.
    pub eps: f64,
    /// Symmetric clamp level for [`h_k`], `k_cut > 0`.
    pub k_cut: f64,
}

impl PotentialParams {
    pub fn new(delta: f64, eps: f64, k_cut: f64) -> Result<PotentialParams> {
        if !(delta.is_finite() && delta > 0.0 && delta <= 0.25) {
            return Err(Error::invalid(
                "delta",
                format!("need 0 < delta <= 1/4, got {delta}"),
            ));
        }
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::invalid("eps", format!("need 0 < eps <= 1, got {eps}")));
        }
        if !(k_cut.is_finite() && k_cut > 0.0) {
            return Err(Error::invalid(
                "k_cut",
                format!("need finite k_cut > 0, got {k_cut}"),
            ));
        }
        Ok(PotentialParams { delta, eps, k_cut })
    }

    /// Lipschitz constant of `f1_delta'`: the frozen tail curvature
    /// `1 / (delta (1 - delta))`.
    pub fn tail_curvature(&self) -> f64 {
        1.0 / (self.delta * (1.0 - self.delta))
    }
}

/// Convex singular part `f1(phi) = phi ln phi + (1-phi) ln(1-phi) + ln 2`,
/// defined for `phi` in (0, 1).
fn f1(phi: f64) -> f64 {
    phi * phi.ln() + (1.0 - phi) * (1.0 - phi).ln() + std::f64::consts::LN_2
}

/// Smooth remainder `f2(phi, c) = phi(1-phi) + c^2/2 + c(1-phi)`.
fn f2(phi: f64, c: f64) -> f64 {
    phi * (1.0 - phi) + 0.5 * c * c + c * (1.0 - phi)
}

fn check_open_unit(name: &'static str, phi: f64) -> Result<()> {
    if !(phi > 0.0 && phi < 1.0) {
        return Err(Error::Domain(format!(
            "{name} requires phi in (0, 1), got {phi}"
        )));
    }
    Ok(())
}

/// Full potential `f(phi, c)`; `phi` must lie in (0, 1)
/// (use [`f_delta_energy`] for the regularized, everywhere-defined version).
pub fn f_energy(phi: f64, c: f64) -> Result<f64> {
    check_open_unit("f_energy", phi)?;
    Ok(f1(phi) + f2(phi, c))
}

/// `f1'(phi) = ln(phi / (1 - phi))` on (0, 1).
pub fn f1_prime(phi: f64) -> Result<f64> {
    check_open_unit("f1_prime", phi)?;
    Ok(phi.ln() - (1.0 - phi).ln())
}

/// `d/dphi f = f1'(phi) + 1 - 2 phi - c` on (0, 1).
pub fn dphi_f(phi: f64, c: f64) -> Result<f64> {
    Ok(f1_prime(phi)? + 1.0 - 2.0 * phi - c)
}

/// `d/dc f = c + 1 - phi` (entire).
pub fn dc_f(phi: f64, c: f64) -> f64 {
    c + 1.0 - phi
}

/// Regularized convex part, defined on all of R.
pub fn f1_delta(p: &PotentialParams, phi: f64) -> f64 {
    let d = p.delta;
    if phi < d {
        let t = phi - d;
        f1(d) + f1_prime_raw(d) * t + 0.5 * p.tail_curvature() * t * t
    } else if phi > 1.0 - d {
        let t = phi - (1.0 - d);
        f1(1.0 - d) + f1_prime_raw(1.0 - d) * t + 0.5 * p.tail_curvature() * t * t
    } else {
        f1(phi)
    }
}

/// Derivative of [`f1_delta`]: `f1'` inside `[delta, 1 - delta]`, linear with
/// slope `1/(delta(1-delta))` outside. Monotone nondecreasing, vanishes at
/// `phi = 1/2`, strictly negative below and positive above.
pub fn f1_delta_prime(p: &PotentialParams, phi: f64) -> f64 {
    let d = p.delta;
    if phi < d {
        f1_prime_raw(d) + p.tail_curvature() * (phi - d)
    } else if phi > 1.0 - d {
        f1_prime_raw(1.0 - d) + p.tail_curvature() * (phi - (1.0 - d))
    } else {
        f1_prime_raw(phi)
    }
}

// `f1'` without the domain check, for interior/knot evaluation.
fn f1_prime_raw(phi: f64) -> f64 {
    phi.ln() - (1.0 - phi).ln()
}

/// Phase truncation `[phi]_+^1 = min(1, max(0, phi))`.
pub fn truncate_phi(phi: f64) -> f64 {
    phi.clamp(0.0, 1.0)
}

/// Nutrient truncation `[c]_+^eps = min(1/eps, max(0, c))`.
pub fn truncate_eps(p: &PotentialParams, c: f64) -> f64 {
    c.clamp(0.0, 1.0 / p.eps)
}

/// Symmetric clamp `h_k(x) = min(k, max(-k, x))` at level `k = k_cut`.
pub fn h_k(p: &PotentialParams, x: f64) -> f64 {
    x.clamp(-p.k_cut, p.k_cut)
}

/// Regularized total potential `f_delta = f1_delta + f2`, defined everywhere;
/// converges pointwise to `f` on (0, 1) as `delta -> 0`.
pub fn f_delta_energy(p: &PotentialParams, phi: f64, c: f64) -> f64 {
    f1_delta(p, phi) + f2(phi, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(delta: f64) -> PotentialParams {
        PotentialParams::new(delta, 1e-3, 10.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PotentialParams::new(0.3, 1e-3, 10.0).is_err()); // delta > 1/4
        assert!(PotentialParams::new(0.0, 1e-3, 10.0).is_err());
        assert!(PotentialParams::new(1e-3, 0.0, 10.0).is_err());
        assert!(PotentialParams::new(1e-3, 2.0, 10.0).is_err()); // eps > 1
        assert!(PotentialParams::new(1e-3, 1e-3, 0.0).is_err());
        assert!(PotentialParams::new(0.25, 1.0, 1.0).is_ok());
    }

    #[test]
    fn closed_form_values() {
        // ln-terms cancel the ln 2 shift at phi = 1/2
        assert!((f_energy(0.5, 0.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((f_energy(0.5, 1.0).unwrap() - 1.25).abs() < 1e-15);
        assert!((f1_prime(0.25).unwrap() + 3.0_f64.ln()).abs() < 1e-15);
        assert!(dphi_f(0.5, 0.0).unwrap().abs() < 1e-15);
        assert!((dc_f(1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors_outside_open_unit_interval() {
        for phi in [0.0, 1.0, -0.3, 1.2] {
            assert!(f_energy(phi, 0.0).is_err());
            assert!(f1_prime(phi).is_err());
            assert!(dphi_f(phi, 0.0).is_err());
        }
    }

    #[test]
    fn regularized_part_matches_interior_and_is_centered() {
        let p = params(0.1);
        let phi: f64 = 0.3;
        let interior = phi * phi.ln() + (1.0 - phi) * (1.0 - phi).ln() + std::f64::consts::LN_2;
        assert!((f1_delta(&p, phi) - interior).abs() < 1e-15);
        assert!(f1_delta(&p, 0.5).abs() < 1e-15);
        assert!(f1_delta_prime(&p, 0.5).abs() < 1e-15);
        assert!((f_delta_energy(&p, 0.5, 0.0) - 0.25).abs() < 1e-15);
        assert!((f_delta_energy(&params(1e-3), 0.5, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn curvature_at_half_is_four() {
        // f1''(1/2) = 1/(0.5 * 0.5) = 4, probed by a central second difference
        let p = params(0.05);
        let h = 1e-5;
        let second =
            (f1_delta(&p, 0.5 + h) - 2.0 * f1_delta(&p, 0.5) + f1_delta(&p, 0.5 - h)) / (h * h);
        assert!((second - 4.0).abs() < 1e-4, "got {second}");
    }

    #[test]
    fn regularization_is_c1_at_the_knots() {
        let p = params(0.1);
        for knot in [p.delta, 1.0 - p.delta] {
            // no value or slope jump across the knot: the straddling gap is
            // bounded by the local derivative/curvature scale times 2h
            let h = 1e-7;
            let slope = f1_delta_prime(&p, knot).abs();
            assert!(
                (f1_delta(&p, knot + h) - f1_delta(&p, knot - h)).abs() <= 3.0 * slope * h
            );
            assert!(
                (f1_delta_prime(&p, knot + h) - f1_delta_prime(&p, knot - h)).abs()
                    <= 3.0 * p.tail_curvature() * h
            );
            // curvature across the knot approaches the frozen tail curvature
            // (coarser step: a second difference at 1e-9 would be pure noise)
            let h = 1e-5;
            let second = (f1_delta(&p, knot + h) - 2.0 * f1_delta(&p, knot)
                + f1_delta(&p, knot - h))
                / (h * h);
            assert!(
                (second - p.tail_curvature()).abs() < 0.05 * p.tail_curvature(),
                "curvature {second} vs {}",
                p.tail_curvature()
            );
        }
    }

    #[test]
    fn prime_is_the_derivative() {
        let p = params(0.05);
        let h = 1e-6;
        for phi in [-0.5, 0.01, 0.04, 0.06, 0.3, 0.7, 0.94, 0.96, 1.5] {
            let fd = (f1_delta(&p, phi + h) - f1_delta(&p, phi - h)) / (2.0 * h);
            let exact = f1_delta_prime(&p, phi);
            assert!(
                (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                "phi = {phi}: fd {fd} vs {exact}"
            );
        }
    }

    #[test]
    fn sign_pattern_and_monotonicity() {
        let p = params(1e-2);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=3000 {
            let phi = -1.0 + 3.0 * i as f64 / 3000.0;
            let v = f1_delta_prime(&p, phi);
            assert!(v >= prev, "f1_delta' not monotone at phi = {phi}");
            prev = v;
            if phi < 0.5 - 1e-9 {
                assert!(v < 0.0, "expected negative at phi = {phi}, got {v}");
            } else if phi > 0.5 + 1e-9 {
                assert!(v > 0.0, "expected positive at phi = {phi}, got {v}");
            }
        }
    }

    #[test]
    fn sits_below_f1_and_increases_as_delta_shrinks() {
        let coarse = params(1e-1);
        let mid = params(1e-2);
        let fine = params(1e-3);
        for i in 1..100 {
            let phi: f64 = i as f64 / 100.0;
            let exact = phi * phi.ln() + (1.0 - phi) * (1.0 - phi).ln() + std::f64::consts::LN_2;
            let (a, b, c) = (
                f1_delta(&coarse, phi),
                f1_delta(&mid, phi),
                f1_delta(&fine, phi),
            );
            assert!(a <= exact + 1e-12 && b <= exact + 1e-12 && c <= exact + 1e-12);
            assert!(a <= b + 1e-12 && b <= c + 1e-12, "not monotone at {phi}");
        }
        // pointwise convergence: once delta drops below phi the values agree
        let phi: f64 = 0.25;
        let exact = phi * phi.ln() + (1.0 - phi) * (1.0 - phi).ln() + std::f64::consts::LN_2;
        assert_eq!(f1_delta(&params(0.2), phi), exact);
    }

    #[test]
    fn quadratic_lower_bound_with_delta_star_quarter() {
        // f1_delta(x) >= x^2/(4 delta*) - C* for delta* = 1/4 and all
        // delta <= delta*: C* is fixed from the coarsest level and reused.
        let coarsest = params(0.25);
        let mut c_star = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let x = -10.0 + 20.0 * i as f64 / 4000.0;
            c_star = c_star.max(x * x - f1_delta(&coarsest, x));
        }
        assert!(c_star.is_finite());
        for delta in [0.25, 0.1, 1e-2, 1e-3] {
            let p = params(delta);
            for i in 0..=4000 {
                let x = -10.0 + 20.0 * i as f64 / 4000.0;
                assert!(
                    f1_delta(&p, x) >= x * x - c_star - 1e-12,
                    "bound fails at delta = {delta}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn truncation_examples() {
        let p = params(1e-3);
        assert_eq!(truncate_phi(-0.2), 0.0);
        assert_eq!(truncate_phi(0.3), 0.3);
        assert_eq!(truncate_phi(1.7), 1.0);
        assert_eq!(truncate_eps(&p, -1.0), 0.0);
        assert_eq!(truncate_eps(&p, 5.0), 5.0);
        assert_eq!(truncate_eps(&p, 2e3), 1e3);
        assert_eq!(h_k(&p, 25.0), 10.0);
        assert_eq!(h_k(&p, -25.0), -10.0);
        assert_eq!(h_k(&p, 3.0), 3.0);
    }

    proptest! {
        #[test]
        fn truncations_idempotent_and_one_lipschitz(
            x in -50.0f64..50.0,
            y in -50.0f64..50.0,
        ) {
            let p = params(1e-2);
            for t in [truncate_phi as fn(f64) -> f64] {
                prop_assert_eq!(t(t(x)), t(x));
                prop_assert!((t(x) - t(y)).abs() <= (x - y).abs() + 1e-15);
            }
            prop_assert_eq!(truncate_eps(&p, truncate_eps(&p, x)), truncate_eps(&p, x));
            prop_assert!((truncate_eps(&p, x) - truncate_eps(&p, y)).abs() <= (x - y).abs() + 1e-15);
            prop_assert_eq!(h_k(&p, h_k(&p, x)), h_k(&p, x));
            prop_assert!((h_k(&p, x) - h_k(&p, y)).abs() <= (x - y).abs() + 1e-15);
        }

        #[test]
        fn prime_is_lipschitz_with_tail_curvature(
            x in -5.0f64..6.0,
            y in -5.0f64..6.0,
        ) {
            let p = params(5e-2);
            let lip = p.tail_curvature();
            let gap = (f1_delta_prime(&p, x) - f1_delta_prime(&p, y)).abs();
            prop_assert!(gap <= lip * (x - y).abs() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn regularized_potential_is_convex_in_phi(
            x in -2.0f64..3.0,
            y in -2.0f64..3.0,
        ) {
            // monotone derivative <=> convex
            let p = params(1e-2);
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            prop_assert!(f1_delta_prime(&p, lo) <= f1_delta_prime(&p, hi) + 1e-12);
        }
    }
}
