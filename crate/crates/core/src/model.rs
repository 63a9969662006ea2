//! Model assembly: parameters, state, chemical potential, fluxes, and the
//! full right-hand side of the regularized system
//!
//! ```text
//! mu      = (-Delta)^s phi + d/dphi f_delta(phi, c) - delta Lap phi
//! d/dt phi = div( M(phi) ( grad mu - [c]_+^eps grad d/dc f_delta ) )
//! d/dt c   = -div( [c]_+^eps M(phi) ( grad mu - [c]_+^eps grad d/dc f_delta ) )
//!          + div( [c]_+^eps e^{-[phi]_+^1} grad d/dc f_delta ) + delta Lap c
//! ```
//!
//! with `grad d/dc f_delta = grad c - grad phi`. Products of coefficient
//! fields with gradients are formed pointwise in physical space; divergences
//! are taken spectrally and passed through the 2/3-rule filter, so both
//! equations are exact divergences and conserve their means to rounding.

use std::borrow::Cow;

use crate::potential::{self, PotentialParams};
use crate::spectral::{self, Grid, RealField, VectorField};
use crate::{Error, Result};

/// Mobility descriptor. Whatever the descriptor returns is clamped into
/// `[gamma, 1/gamma]` at evaluation time.
#[derive(Clone, Debug, PartialEq)]
pub enum Mobility {
    /// `M = 1`.
    Constant,
    /// `M(phi) = 1 + phi^2 / 2`.
    Quadratic,
    /// Piecewise-linear interpolation of `(phi_i, m_i)` samples, constant
    /// beyond the tabulated range. Knots must be strictly increasing.
    Table { phi: Vec<f64>, m: Vec<f64> },
}

impl Mobility {
    fn raw(&self, phi: f64) -> f64 {
        match self {
            Mobility::Constant => 1.0,
            Mobility::Quadratic => 1.0 + 0.5 * phi * phi,
            Mobility::Table { phi: xs, m: ms } => {
                if phi <= xs[0] {
                    return ms[0];
                }
                if phi >= xs[xs.len() - 1] {
                    return ms[ms.len() - 1];
                }
                let i = xs.partition_point(|&x| x <= phi) - 1;
                let w = (phi - xs[i]) / (xs[i + 1] - xs[i]);
                ms[i] + w * (ms[i + 1] - ms[i])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Mobility::Table { phi, m } = self {
            if phi.len() < 2 || phi.len() != m.len() {
                return Err(Error::invalid(
                    "mobility",
                    "table needs at least two (phi, m) samples of equal length",
                ));
            }
            if phi.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid(
                    "mobility",
                    "table knots must be strictly increasing",
                ));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("mobility", "table values must be finite"));
            }
        }
        Ok(())
    }
}

/// Full model description.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Fractional diffusion order, `1/2 <= s < 1`.
    pub s: f64,
    /// Potential regularization/truncation scales.
    pub pot: PotentialParams,
    /// Mobility descriptor.
    pub mobility: Mobility,
    /// Mobility bounds parameter: `M` is clamped into `[gamma, 1/gamma]`,
    /// `0 < gamma <= 1`.
    pub gamma: f64,
    /// Shared grid for all fields.
    pub grid: Grid,
    /// Galerkin truncation: retain modes `k_i < modes_kept` per axis
    /// (0 = no truncation).
    pub modes_kept: usize,
}

impl ModelParams {
    pub fn new(
        s: f64,
        pot: PotentialParams,
        mobility: Mobility,
        gamma: f64,
        grid: Grid,
        modes_kept: usize,
    ) -> Result<ModelParams> {
        if !(s.is_finite() && (0.5..1.0).contains(&s)) {
            return Err(Error::invalid("s", format!("need 1/2 <= s < 1, got {s}")));
        }
        if !(gamma.is_finite() && gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(
                "gamma",
                format!("need 0 < gamma <= 1, got {gamma}"),
            ));
        }
        mobility.validate()?;
        if modes_kept != 0 {
            let n_min = (0..grid.dims()).map(|a| grid.n(a)).min().unwrap();
            if modes_kept < 2 || modes_kept > n_min {
                return Err(Error::invalid(
                    "modes_kept",
                    format!("need 2 <= modes_kept <= min(n) = {n_min}, got {modes_kept}"),
                ));
            }
        }
        Ok(ModelParams {
            s,
            pot,
            mobility,
            gamma,
            grid,
            modes_kept,
        })
    }
}

/// The evolving state: phase field, nutrient field, time, and an optional
/// cached chemical potential belonging to exactly this `(phi, c)` pair.
#[derive(Clone, Debug)]
pub struct State {
    pub phi: RealField,
    pub c: RealField,
    pub t: f64,
    /// Chemical potential evaluated at `(phi, c)`, if already computed.
    /// Anyone mutating `phi` or `c` must reset this to `None`.
    pub mu_cache: Option<RealField>,
}

impl State {
    pub fn new(phi: RealField, c: RealField, t: f64) -> Result<State> {
        if phi.grid() != c.grid() {
            return Err(Error::GridMismatch(
                "phi and c live on different grids".into(),
            ));
        }
        Ok(State {
            phi,
            c,
            t,
            mu_cache: None,
        })
    }

    /// The chemical potential for this state: cached if available,
    /// otherwise computed on the fly.
    pub fn mu<'a>(&'a self, p: &ModelParams) -> Cow<'a, RealField> {
        match &self.mu_cache {
            Some(mu) => Cow::Borrowed(mu),
            None => Cow::Owned(chemical_potential(self, p)),
        }
    }

    /// Computes and stores the chemical potential.
    pub fn ensure_mu(&mut self, p: &ModelParams) {
        if self.mu_cache.is_none() {
            self.mu_cache = Some(chemical_potential(self, p));
        }
    }
}

/// Pointwise mobility `M(phi)`, clamped into `[gamma, 1/gamma]`.
pub fn mobility_eval(p: &ModelParams, phi: &RealField) -> RealField {
    let lo = p.gamma;
    let hi = 1.0 / p.gamma;
    phi.map(|v| p.mobility.raw(v).clamp(lo, hi))
}

/// Chemical potential
/// `mu = (-Delta)^s phi + f1_delta'(phi) + 1 - 2 phi - c + delta (-Delta) phi`.
pub fn chemical_potential(st: &State, p: &ModelParams) -> RealField {
    let mut mu = spectral::apply_neg_laplacian_power(&st.phi, p.s)
        .expect("model order s is validated positive");
    let visc = spectral::apply_neg_laplacian_power(&st.phi, 1.0)
        .expect("unit power is valid");
    mu.add_scaled(&visc, p.pot.delta);
    let pot = &p.pot;
    for ((m, &phi), &c) in mu
        .values_mut()
        .iter_mut()
        .zip(st.phi.values())
        .zip(st.c.values())
    {
        *m += potential::f1_delta_prime(pot, phi) + 1.0 - 2.0 * phi - c;
    }
    mu
}

/// Joint flux velocity `v = grad mu - [c]_+^eps (grad c - grad phi)`;
/// multiplying by the mobility is left to the caller.
pub fn joint_flux_velocity(st: &State, p: &ModelParams) -> VectorField {
    let mu = st.mu(p);
    let grad_mu = spectral::gradient(&mu);
    let grad_coupling = coupling_gradient(st, p);
    grad_mu.sub(&grad_coupling)
}

/// `[c]_+^eps * (grad c - grad phi)`, the truncated cross-diffusion drift.
fn coupling_gradient(st: &State, p: &ModelParams) -> VectorField {
    let grad_c = spectral::gradient(&st.c);
    let grad_phi = spectral::gradient(&st.phi);
    let c_trunc = st.c.map(|v| potential::truncate_eps(&p.pot, v));
    grad_c.sub(&grad_phi).scale_pointwise(&c_trunc)
}

/// Time derivatives of both fields.
#[derive(Clone, Debug)]
pub struct Rhs {
    pub dphi_dt: RealField,
    pub dc_dt: RealField,
}

/// Evaluates the full right-hand side at the given state.
pub fn rhs(st: &State, p: &ModelParams) -> Rhs {
    let mu = st.mu(p);
    let grad_mu = spectral::gradient(&mu);

    let grad_c = spectral::gradient(&st.c);
    let grad_phi = spectral::gradient(&st.phi);
    let grad_dc_f = grad_c.sub(&grad_phi);
    let c_trunc = st.c.map(|v| potential::truncate_eps(&p.pot, v));

    // v = grad mu - [c]_+^eps grad d/dc f
    let v = grad_mu.sub(&grad_dc_f.scale_pointwise(&c_trunc));

    let m = mobility_eval(p, &st.phi);
    let flux_phi = v.scale_pointwise(&m);
    let dphi_dt = spectral::divergence_dealiased(&flux_phi);

    // -div([c] M v) + div([c] e^{-[phi]} grad d/dc f) + delta Lap c
    let flux_c_adv = flux_phi.scale_pointwise(&c_trunc);
    let damp = st
        .phi
        .map(|v| (-potential::truncate_phi(v)).exp())
        .zip_map(&c_trunc, |e, c| e * c);
    let flux_c_diff = grad_dc_f.scale_pointwise(&damp);

    let mut dc_dt = spectral::divergence_dealiased(&flux_c_diff);
    dc_dt.add_scaled(&spectral::divergence_dealiased(&flux_c_adv), -1.0);
    let lap_c = spectral::apply_neg_laplacian_power(&st.c, 1.0).expect("unit power is valid");
    dc_dt.add_scaled(&lap_c, -p.pot.delta);

    Rhs { dphi_dt, dc_dt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{eigenfunction, eigenvalue, inner_product, mean};

    fn params(grid: Grid) -> ModelParams {
        ModelParams::new(
            0.75,
            PotentialParams::new(1e-3, 1e-3, 10.0).unwrap(),
            Mobility::Constant,
            1.0,
            grid,
            0,
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let pot = PotentialParams::new(1e-3, 1e-3, 10.0).unwrap();
        assert!(ModelParams::new(0.4, pot, Mobility::Constant, 1.0, g, 0).is_err());
        assert!(ModelParams::new(1.0, pot, Mobility::Constant, 1.0, g, 0).is_err());
        assert!(ModelParams::new(0.75, pot, Mobility::Constant, 0.0, g, 0).is_err());
        assert!(ModelParams::new(0.75, pot, Mobility::Constant, 2.0, g, 0).is_err());
        assert!(ModelParams::new(0.75, pot, Mobility::Constant, 1.0, g, 1).is_err());
        assert!(ModelParams::new(0.75, pot, Mobility::Constant, 1.0, g, 32).is_err());
        let bad_table = Mobility::Table {
            phi: vec![0.0, 0.0],
            m: vec![1.0, 1.0],
        };
        assert!(ModelParams::new(0.75, pot, bad_table, 1.0, g, 0).is_err());
    }

    #[test]
    fn mobility_clamp() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let mut p = params(g);
        p.gamma = 0.5;
        // descriptor always returning 10 gets clamped to 1/gamma = 2
        p.mobility = Mobility::Table {
            phi: vec![0.0, 1.0],
            m: vec![10.0, 10.0],
        };
        let phi = RealField::constant(g, 0.3);
        let m = mobility_eval(&p, &phi);
        assert!(m.values().iter().all(|&v| v == 2.0));
        // quadratic stays inside on [0, 1]: M(1) = 3/2 <= 2
        p.mobility = Mobility::Quadratic;
        let m = mobility_eval(&p, &RealField::constant(g, 1.0));
        assert!(m.values().iter().all(|&v| (v - 1.5).abs() < 1e-15));
    }

    #[test]
    fn mobility_table_interpolates() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let mut p = params(g);
        p.gamma = 0.25;
        p.mobility = Mobility::Table {
            phi: vec![0.0, 1.0],
            m: vec![1.0, 0.5],
        };
        let m = mobility_eval(&p, &RealField::constant(g, 0.25));
        assert!(m.values().iter().all(|&v| (v - 0.875).abs() < 1e-15));
        // constant extension beyond the table
        let m = mobility_eval(&p, &RealField::constant(g, -3.0));
        assert!(m.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn chemical_potential_linearization_at_half() {
        // phi = 1/2 + a e_1, c = 0:
        // mu ~ (lambda^s + delta lambda + f1_delta''(1/2) - 2) a e_1
        // and f1_delta''(1/2) = 4
        let g = Grid::new_1d(32, 1.0).unwrap();
        let p = params(g);
        let a = 1e-6;
        let e1 = eigenfunction(&g, &[1, 0]);
        let mut phi = RealField::constant(g, 0.5);
        phi.add_scaled(&e1, a);
        let st = State::new(phi, RealField::constant(g, 0.0), 0.0).unwrap();
        let mu = chemical_potential(&st, &p);
        let lambda = eigenvalue(&g, &[1, 0]);
        let expect = (lambda.powf(p.s) + p.pot.delta * lambda + 2.0) * a;
        let got = inner_product(&mu, &e1).unwrap();
        assert!(
            (got - expect).abs() < 1e-6 * expect.abs(),
            "got {got}, want {expect}"
        );
    }

    #[test]
    fn equilibrium_states_are_stationary() {
        for (grid, phi_bar, c_bar) in [
            (Grid::new_1d(128, 1.0).unwrap(), 0.5, 0.1),
            (Grid::new_2d([16, 16], [1.0, 2.0]).unwrap(), 0.3, 0.0),
        ] {
            let p = params(grid);
            let st = State::new(
                RealField::constant(grid, phi_bar),
                RealField::constant(grid, c_bar),
                0.0,
            )
            .unwrap();
            let out = rhs(&st, &p);
            let worst = out
                .dphi_dt
                .values()
                .iter()
                .chain(out.dc_dt.values())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= 1e-12, "rhs at equilibrium: {worst}");
        }
    }

    #[test]
    fn rhs_conserves_both_means() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let p = params(g);
        // generic non-equilibrium state
        let mut phi = RealField::constant(g, 0.45);
        phi.add_scaled(&eigenfunction(&g, &[2, 0]), 0.07);
        phi.add_scaled(&eigenfunction(&g, &[5, 0]), -0.04);
        let mut c = RealField::constant(g, 0.2);
        c.add_scaled(&eigenfunction(&g, &[3, 0]), 0.05);
        let st = State::new(phi, c, 0.0).unwrap();
        let out = rhs(&st, &p);
        let scale = out
            .dphi_dt
            .values()
            .iter()
            .chain(out.dc_dt.values())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(mean(&out.dphi_dt).abs() <= 1e-13 * scale.max(1.0));
        assert!(mean(&out.dc_dt).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn dispersion_relation_for_small_perturbations() {
        // With c = 0 the cross terms vanish ([c]_+^eps = 0) and the phi
        // equation linearizes per mode to
        //   d/dt phi_hat = -lambda (lambda^s + delta lambda + 2) phi_hat.
        let g = Grid::new_1d(32, 1.0).unwrap();
        let p = params(g);
        let a = 1e-5;
        for k in [1usize, 2, 3] {
            let ek = eigenfunction(&g, &[k, 0]);
            let mut phi = RealField::constant(g, 0.5);
            phi.add_scaled(&ek, a);
            let st = State::new(phi, RealField::constant(g, 0.0), 0.0).unwrap();
            let out = rhs(&st, &p);
            let lambda = eigenvalue(&g, &[k, 0]);
            let expect = -lambda * (lambda.powf(p.s) + p.pot.delta * lambda + 2.0) * a;
            let got = inner_product(&out.dphi_dt, &ek).unwrap();
            assert!(
                (got - expect).abs() <= 1e-5 * expect.abs(),
                "mode {k}: got {got}, want {expect}"
            );
        }
    }

    #[test]
    fn flux_components_match_finite_differences() {
        // The joint flux velocity against a centered-difference evaluation of
        // the same expression: the gap is FD truncation error, O(h^2).
        let worst_gap = |n: usize| -> f64 {
            let g = Grid::new_1d(n, 1.0).unwrap();
            let p = params(g);
            let pi = std::f64::consts::PI;
            let phi = RealField::from_fn(g, |x| 0.5 + 0.2 * (pi * x[0]).cos());
            let c = RealField::from_fn(g, |x| 0.3 + 0.1 * (2.0 * pi * x[0]).cos());
            let mut st = State::new(phi, c, 0.0).unwrap();
            st.ensure_mu(&p);
            let v = joint_flux_velocity(&st, &p);
            let mu = st.mu_cache.as_ref().unwrap();
            let h = g.cell(0);
            let mut worst = 0.0f64;
            for j in 1..n - 1 {
                let d = |f: &RealField| (f.values()[j + 1] - f.values()[j - 1]) / (2.0 * h);
                let c_trunc = potential::truncate_eps(&p.pot, st.c.values()[j]);
                let fd = d(mu) - c_trunc * (d(&st.c) - d(&st.phi));
                worst = worst.max((v.component(0).values()[j] - fd).abs());
            }
            worst
        };
        let (coarse, fine) = (worst_gap(64), worst_gap(128));
        let ratio = coarse / fine;
        assert!(
            (3.2..=4.8).contains(&ratio),
            "expected ~4x reduction, got {ratio} ({coarse} -> {fine})"
        );
    }

    #[test]
    fn truncated_and_plain_nutrient_coefficients_agree_when_nonnegative() {
        // for c in [0, 1/eps] the truncation is the identity
        let p = PotentialParams::new(1e-3, 1e-2, 10.0).unwrap();
        for c in [0.0, 0.3, 57.0, 100.0] {
            assert_eq!(potential::truncate_eps(&p, c), c.min(1.0 / p.eps));
        }
    }
}
