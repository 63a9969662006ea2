//! Monitored quantities of the energy framework
//!
//! The free energy of a state is
//!
//! ```text
//! E = integral( 1/2 |(-Delta)^{s/2} phi|^2 + f_delta(phi, c)
//!               + delta/2 |grad phi|^2 )
//! ```
//!
//! and along exact trajectories it obeys `dE/dt + D1 + D2 = R` with the flux
//! dissipation `D1 = int M |v|^2`, the nutrient dissipation
//! `D2 = int [c]_+^eps e^{-[phi]_+^1} |grad c - grad phi|^2`, and the
//! viscous coupling `R = -delta int grad c . grad(c - phi)`. A report
//! evaluates every one of these terms (plus norms, extremes, and masses) for
//! one state; [`energy_residual`] measures how far two consecutive reports
//! are from satisfying the discrete version of the law. All reductions are
//! sequential, so a report is a pure, bit-reproducible function of the state.

use crate::integrator::{self, RunSink, StepperConfig};
use crate::model::{self, ModelParams, State};
use crate::potential;
use crate::spectral::{self, dct_forward, gradient, hs_seminorm, lp_norm, mean, RealField};
use crate::{Error, Result};

/// Everything we monitor about a single state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// Free energy `E`.
    pub energy: f64,
    /// `D1 = int M(phi) |grad mu - [c]_+^eps (grad c - grad phi)|^2`.
    pub diss_flux: f64,
    /// `D2 = int [c]_+^eps e^{-[phi]_+^1} |grad c - grad phi|^2`.
    pub diss_nutrient: f64,
    /// `delta int |grad c|^2`, the dissipation of the artificial viscosity.
    pub diss_artificial: f64,
    /// `R = -delta int grad c . grad(c - phi)`, the signed right-hand side
    /// of the energy law.
    pub coupling: f64,
    /// Mean of `phi`.
    pub mass_phi: f64,
    /// Mean of `c`.
    pub mass_c: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub c_min: f64,
    /// `||(-Delta)^s phi||_{L^2}`.
    pub hs_norm_phi: f64,
    /// `||mu||_{L^{4/3}} + ||grad mu||_{L^{4/3}}`.
    pub mu_w14_norm: f64,
    /// Fraction of the domain where `phi < eta` or `phi > 1 - eta`.
    pub phase_violation: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,energy,diss_flux,diss_nutrient,\
        diss_artificial,coupling,mass_phi,mass_c,phi_min,phi_max,c_min,\
        hs_norm_phi,mu_w14_norm,phase_violation";

    /// One CSV row (no trailing newline), 17 significant digits per value.
    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},\
             {:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.t,
            self.energy,
            self.diss_flux,
            self.diss_nutrient,
            self.diss_artificial,
            self.coupling,
            self.mass_phi,
            self.mass_c,
            self.phi_min,
            self.phi_max,
            self.c_min,
            self.hs_norm_phi,
            self.mu_w14_norm,
            self.phase_violation,
        )
    }
}

/// Evaluates the full report for one state. `eta` is the phase-violation
/// threshold, `0 < eta < 1/2`.
pub fn report(st: &State, p: &ModelParams, eta: f64) -> Result<EnergyReport> {
    if !(eta.is_finite() && eta > 0.0 && eta < 0.5) {
        return Err(Error::invalid("eta", format!("need 0 < eta < 1/2, got {eta}")));
    }
    let pot = &p.pot;
    let grid = *st.phi.grid();
    let w = grid.cell_volume();

    // energy: both seminorm terms straight from the coefficients
    let mut energy = 0.5 * hs_seminorm(&st.phi, p.s)?.powi(2)
        + 0.5 * pot.delta * hs_seminorm(&st.phi, 1.0)?.powi(2);
    for (&phi, &c) in st.phi.values().iter().zip(st.c.values()) {
        energy += w * potential::f_delta_energy(pot, phi, c);
    }

    // dissipation integrands in physical space
    let mu = st.mu(p);
    let grad_mu = gradient(&mu);
    let grad_phi = gradient(&st.phi);
    let grad_c = gradient(&st.c);
    let grad_dc_f = grad_c.sub(&grad_phi);
    let c_trunc = st.c.map(|v| potential::truncate_eps(pot, v));
    let v = grad_mu.sub(&grad_dc_f.scale_pointwise(&c_trunc));
    let m = model::mobility_eval(p, &st.phi);

    let mut diss_flux = 0.0;
    let mut diss_nutrient = 0.0;
    for j in 0..grid.len() {
        let v2: f64 = v
            .components()
            .iter()
            .map(|comp| comp.values()[j].powi(2))
            .sum();
        let g2: f64 = grad_dc_f
            .components()
            .iter()
            .map(|comp| comp.values()[j].powi(2))
            .sum();
        diss_flux += w * m.values()[j] * v2;
        let damp = (-potential::truncate_phi(st.phi.values()[j])).exp();
        diss_nutrient += w * c_trunc.values()[j] * damp * g2;
    }

    // viscous terms from the coefficients: sum_k lambda_k c_k (c_k - phi_k)
    let phi_hat = dct_forward(&st.phi);
    let c_hat = dct_forward(&st.c);
    let mut grad_c_sq = 0.0;
    let mut cross = 0.0;
    spectral::for_each_mode(&grid, |flat, lambda| {
        let ck = c_hat.coeffs()[flat];
        grad_c_sq += lambda * ck * ck;
        cross += lambda * ck * (ck - phi_hat.coeffs()[flat]);
    });
    let diss_artificial = pot.delta * grad_c_sq;
    let coupling = -pot.delta * cross;

    let violations = st
        .phi
        .values()
        .iter()
        .filter(|&&v| v < eta || v > 1.0 - eta)
        .count();

    Ok(EnergyReport {
        t: st.t,
        energy,
        diss_flux,
        diss_nutrient,
        diss_artificial,
        coupling,
        mass_phi: mean(&st.phi),
        mass_c: mean(&st.c),
        phi_min: st.phi.min(),
        phi_max: st.phi.max(),
        c_min: st.c.min(),
        hs_norm_phi: hs_seminorm(&st.phi, 2.0 * p.s)?,
        mu_w14_norm: lp_norm(&mu, 4.0 / 3.0) + lp_norm(&grad_mu.magnitude(), 4.0 / 3.0),
        phase_violation: violations as f64 / grid.len() as f64,
    })
}

/// Discrete residual of the energy law between two consecutive reports:
///
/// ```text
/// r = [E1 - E0] / [t1 - t0] + avg(D1 + D2) - avg(R)
/// ```
///
/// with trapezoidal averages of the dissipation and coupling terms. Exact
/// trajectories drive `r` to zero as the step shrinks; the step controller
/// compares it against its tolerance budget.
pub fn energy_residual(r0: &EnergyReport, r1: &EnergyReport) -> Result<f64> {
    if !(r1.t > r0.t) {
        return Err(Error::invalid(
            "reports",
            format!("need r1.t > r0.t, got {} and {}", r0.t, r1.t),
        ));
    }
    let de_dt = (r1.energy - r0.energy) / (r1.t - r0.t);
    let diss = 0.5 * (r0.diss_flux + r1.diss_flux + r0.diss_nutrient + r1.diss_nutrient);
    let coupling = 0.5 * (r0.coupling + r1.coupling);
    Ok(de_dt + diss - coupling)
}

/// Convex test functions `F` with `F(1/2) = F'(1/2) = 0` and bounded `F''`,
/// for probing the sign structure of the fractional operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvexTest {
    /// `F(u) = (u - 1/2)^2`.
    Quadratic,
    /// Pseudo-Huber bowl `F(u) = m^2 (sqrt(1 + ((u-1/2)/m)^2) - 1)`:
    /// quadratic near `1/2`, asymptotically linear, `F''` bounded by 1.
    PseudoHuber { scale: f64 },
}

impl ConvexTest {
    fn validate(&self) -> Result<()> {
        if let ConvexTest::PseudoHuber { scale } = self {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Error::invalid(
                    "convex_test",
                    format!("pseudo-Huber scale must be positive, got {scale}"),
                ));
            }
        }
        Ok(())
    }

    fn derivative(&self, u: f64) -> f64 {
        let x = u - 0.5;
        match self {
            ConvexTest::Quadratic => 2.0 * x,
            ConvexTest::PseudoHuber { scale } => x / (1.0 + (x / scale).powi(2)).sqrt(),
        }
    }
}

/// Evaluates `int F'(u) (-Delta)^s u dx`. For every convex `F` in the family
/// this is nonnegative up to quadrature rounding; callers assert
/// `>= -1e-10 ||u||^2`.
pub fn stroock_varopoulos_check(u: &spectral::RealField, s: f64, f: ConvexTest) -> Result<f64> {
    if !(s.is_finite() && s > 0.0 && s < 1.0) {
        return Err(Error::invalid("s", format!("need 0 < s < 1, got {s}")));
    }
    f.validate()?;
    let frac = spectral::apply_neg_laplacian_power(u, s)?;
    spectral::inner_product(&u.map(|v| f.derivative(v)), &frac)
}

/// One run of a parameter study: a table label, the numeric value of the
/// varied parameter, and the full run description.
pub struct SweepScenario {
    pub label: String,
    pub value: f64,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub initial: State,
}

/// Convergence data for one parameter level. The difference columns compare
/// against the previous level in `L^2` over space and time (trapezoid over
/// the shared sample times) and are NaN on the first row.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub label: String,
    pub value: f64,
    pub diff_phi: f64,
    pub diff_c: f64,
    pub terminal_phase_violation: f64,
    pub sup_hs_norm_phi: f64,
    pub sup_mu_w14_norm: f64,
}

/// Result of [`sweep`]: one row per parameter level, in input order.
#[derive(Clone, Debug, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const CSV_HEADER: &'static str =
        "label,value,diff_phi_l2,diff_c_l2,phase_violation_end,sup_hs_norm_phi,sup_mu_w14_norm";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.label,
                r.value,
                r.diff_phi,
                r.diff_c,
                r.terminal_phase_violation,
                r.sup_hs_norm_phi,
                r.sup_mu_w14_norm,
            ));
        }
        out
    }
}

/// Builds a sink for scenario `i`, called in input order before the
/// scenario starts. Return [`integrator::NullSink`] boxed to discard output.
pub type SinkFactory<'a> = &'a (dyn Fn(usize) -> Result<Box<dyn RunSink + Send>> + Sync);

type LevelOutcome = (Vec<(f64, RealField, RealField)>, Vec<EnergyReport>);

struct SampleCollector {
    inner: Box<dyn RunSink + Send>,
    samples: Vec<(f64, RealField, RealField)>,
}

impl RunSink for SampleCollector {
    fn on_report(&mut self, r: &EnergyReport) -> Result<()> {
        self.inner.on_report(r)
    }
    fn on_snapshot(&mut self, st: &State, r: &EnergyReport) -> Result<()> {
        self.inner.on_snapshot(st, r)
    }
    fn on_sample(&mut self, st: &State, r: &EnergyReport) -> Result<()> {
        self.samples.push((st.t, st.phi.clone(), st.c.clone()));
        self.inner.on_sample(st, r)
    }
}

/// Runs every scenario (worker threads capped by `FRACCHS_THREADS`) and
/// tabulates level-to-level convergence. Scenarios must share the grid and
/// the horizon; `plan.sample_times` is the comparison grid in time and
/// needs at least two points inside `[0, t_end]`.
pub fn sweep(
    scenarios: &[SweepScenario],
    plan: &integrator::OutputPlan,
    sink_factory: SinkFactory,
) -> Result<SweepTable> {
    let first = scenarios
        .first()
        .ok_or_else(|| Error::invalid("scenarios", "need at least one scenario"))?;
    let grid = *first.initial.phi.grid();
    let t_end = first.stepper.t_end;
    for sc in scenarios {
        if *sc.initial.phi.grid() != grid || sc.params.grid != grid {
            return Err(Error::GridMismatch(format!(
                "scenario '{}' does not share the sweep grid",
                sc.label
            )));
        }
        if sc.stepper.t_end != t_end {
            return Err(Error::invalid(
                "scenarios",
                format!("scenario '{}' does not share the horizon {t_end}", sc.label),
            ));
        }
    }
    let mut times: Vec<f64> = plan
        .sample_times
        .iter()
        .copied()
        .filter(|t| t.is_finite() && (0.0..=t_end).contains(t))
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    if times.len() < 2 {
        return Err(Error::invalid(
            "sample_times",
            "need at least two sample times inside [0, t_end]",
        ));
    }
    let shared_plan = integrator::OutputPlan {
        sample_times: times.clone(),
        ..plan.clone()
    };

    let workers = worker_count_from(
        std::env::var("FRACCHS_THREADS").ok().as_deref(),
        scenarios.len(),
    )?;
    let mut outcomes: Vec<Option<Result<LevelOutcome>>> =
        (0..scenarios.len()).map(|_| None).collect();
    let indices: Vec<usize> = (0..scenarios.len()).collect();
    for batch in indices.chunks(workers) {
        let mut sinks = Vec::with_capacity(batch.len());
        for &i in batch {
            sinks.push(sink_factory(i)?);
        }
        std::thread::scope(|scope| -> Result<()> {
            let mut handles = Vec::with_capacity(batch.len());
            for (&i, sink) in batch.iter().zip(sinks) {
                let plan_ref = &shared_plan;
                let sc = &scenarios[i];
                handles.push((
                    i,
                    scope.spawn(move || -> Result<LevelOutcome> {
                        let mut coll = SampleCollector {
                            inner: sink,
                            samples: Vec::new(),
                        };
                        let out =
                            integrator::run(sc.initial.clone(), &sc.params, &sc.stepper, plan_ref, &mut coll)?;
                        Ok((coll.samples, out.reports))
                    }),
                ));
            }
            for (i, h) in handles {
                outcomes[i] = Some(h.join().map_err(|_| {
                    Error::Step(format!("sweep worker for scenario {i} panicked"))
                })?);
            }
            Ok(())
        })?;
    }

    let mut rows = Vec::with_capacity(scenarios.len());
    let mut prev_samples: Option<Vec<(f64, RealField, RealField)>> = None;
    for (i, sc) in scenarios.iter().enumerate() {
        let (samples, reports) = outcomes[i].take().unwrap()?;
        if samples.len() != times.len() {
            return Err(Error::Step(format!(
                "scenario '{}' sampled {} of {} requested times",
                sc.label,
                samples.len(),
                times.len()
            )));
        }
        let (mut diff_phi, mut diff_c) = (f64::NAN, f64::NAN);
        if let Some(prev) = &prev_samples {
            diff_phi = space_time_l2(prev, &samples, |(_, phi, _)| phi);
            diff_c = space_time_l2(prev, &samples, |(_, _, c)| c);
        }
        rows.push(SweepRow {
            label: sc.label.clone(),
            value: sc.value,
            diff_phi,
            diff_c,
            terminal_phase_violation: reports.last().map_or(0.0, |r| r.phase_violation),
            sup_hs_norm_phi: reports.iter().fold(0.0, |m, r| m.max(r.hs_norm_phi)),
            sup_mu_w14_norm: reports.iter().fold(0.0, |m, r| m.max(r.mu_w14_norm)),
        });
        prev_samples = Some(samples);
    }
    Ok(SweepTable { rows })
}

/// `L^2(Omega x (0,T))` distance between two sampled trajectories:
/// trapezoid in time over the shared sample instants.
fn space_time_l2(
    a: &[(f64, RealField, RealField)],
    b: &[(f64, RealField, RealField)],
    pick: impl Fn(&(f64, RealField, RealField)) -> &RealField,
) -> f64 {
    let m = a.len() - 1;
    let mut acc = 0.0;
    for j in 0..=m {
        let w = match j {
            0 => 0.5 * (a[1].0 - a[0].0),
            _ if j == m => 0.5 * (a[m].0 - a[m - 1].0),
            _ => 0.5 * (a[j + 1].0 - a[j - 1].0),
        };
        let d = pick(&a[j]).zip_map(pick(&b[j]), |x, y| x - y);
        acc += w * spectral::l2_norm(&d).powi(2);
    }
    acc.sqrt()
}

/// Resolves the worker count: the `FRACCHS_THREADS` value if set (must be a
/// positive integer), otherwise one worker per scenario.
fn worker_count_from(env_value: Option<&str>, n_scenarios: usize) -> Result<usize> {
    let n = n_scenarios.max(1);
    match env_value {
        None => Ok(n),
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(k.min(n)),
            _ => Err(Error::Config(format!(
                "FRACCHS_THREADS must be a positive integer, got {raw:?}"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mobility;
    use crate::potential::PotentialParams;
    use crate::spectral::{dct_inverse, eigenfunction, eigenvalue, Grid, RealField, SpectralCoeffs};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

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

    /// Band-limited random field with the requested mean, amplitude scaled
    /// so the constant offset dominates.
    fn random_state(grid: Grid, seed: u64) -> State {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut phi = RealField::constant(grid, 0.45);
        let mut c = RealField::constant(grid, 0.2);
        for k in 1..6 {
            phi.add_scaled(&eigenfunction(&grid, &[k, 0]), 0.03 * rng.gen_range(-1.0..1.0));
            c.add_scaled(&eigenfunction(&grid, &[k, 0]), 0.02 * rng.gen_range(-1.0..1.0));
        }
        State::new(phi, c, 0.0).unwrap()
    }

    #[test]
    fn uniform_state_report() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let p = params(g);
        let st = State::new(
            RealField::constant(g, 0.5),
            RealField::constant(g, 0.0),
            0.0,
        )
        .unwrap();
        let r = report(&st, &p, 1e-3).unwrap();
        // f_delta(1/2, 0) = 1/4 and every gradient vanishes
        assert!((r.energy - 0.25 * g.volume()).abs() < 1e-14);
        assert_eq!(r.diss_flux, 0.0);
        assert_eq!(r.diss_nutrient, 0.0);
        assert_eq!(r.diss_artificial, 0.0);
        assert_eq!(r.coupling, 0.0);
        assert_eq!(r.hs_norm_phi, 0.0);
        assert_eq!(r.phase_violation, 0.0);
        assert!((r.mass_phi - 0.5).abs() < 1e-15);
        // mu = 0 + f1_delta'(1/2) + 1 - 2*(1/2) - 0 = 0 identically
        assert!(r.mu_w14_norm < 1e-13);
    }

    #[test]
    fn constant_state_has_zero_fractional_norm() {
        let g = Grid::new_2d([16, 16], [1.0, 2.0]).unwrap();
        let p = params(g);
        let st = State::new(
            RealField::constant(g, 0.3),
            RealField::constant(g, 0.7),
            0.0,
        )
        .unwrap();
        let r = report(&st, &p, 1e-3).unwrap();
        assert_eq!(r.hs_norm_phi, 0.0);
        assert_eq!(r.phase_violation, 0.0);
        assert!((r.mass_c - 0.7).abs() < 1e-13);
    }

    #[test]
    fn eta_is_validated() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let p = params(g);
        let st = random_state(g, 1);
        assert!(report(&st, &p, 0.0).is_err());
        assert!(report(&st, &p, 0.5).is_err());
        assert!(report(&st, &p, f64::NAN).is_err());
    }

    /// Spectral interpolation onto a grid with doubled resolution: the
    /// orthonormal coefficients are grid-independent, so zero-padding them
    /// is exact for band-limited fields.
    fn upsample(u: &RealField) -> RealField {
        let g = u.grid();
        let fine = if g.dims() == 1 {
            Grid::new_1d(2 * g.n(0), g.extent(0)).unwrap()
        } else {
            Grid::new_2d(
                [2 * g.n(0), 2 * g.n(1)],
                [g.extent(0), g.extent(1)],
            )
            .unwrap()
        };
        let coarse_hat = dct_forward(u);
        let mut padded = vec![0.0; fine.len()];
        if g.dims() == 1 {
            padded[..g.n(0)].copy_from_slice(coarse_hat.coeffs());
        } else {
            for k0 in 0..g.n(0) {
                for k1 in 0..g.n(1) {
                    padded[k0 * fine.n(1) + k1] = coarse_hat.coeffs()[k0 * g.n(1) + k1];
                }
            }
        }
        dct_inverse(&SpectralCoeffs::from_raw(fine, padded))
    }

    #[test]
    fn energy_matches_refined_quadrature() {
        for seed in [3u64, 4] {
            let g = Grid::new_1d(64, 1.0).unwrap();
            let p = params(g);
            let st = random_state(g, seed);
            let r = report(&st, &p, 1e-3).unwrap();

            // same energy functional, midpoint rule on the doubled grid
            let phi_f = upsample(&st.phi);
            let c_f = upsample(&st.c);
            let mut oracle = 0.5 * hs_seminorm(&phi_f, p.s).unwrap().powi(2)
                + 0.5 * p.pot.delta * hs_seminorm(&phi_f, 1.0).unwrap().powi(2);
            let w = phi_f.grid().cell_volume();
            for (&phi, &c) in phi_f.values().iter().zip(c_f.values()) {
                oracle += w * potential::f_delta_energy(&p.pot, phi, c);
            }
            assert!(
                (r.energy - oracle).abs() <= 1e-8 * oracle.abs(),
                "seed {seed}: energy {} vs refined oracle {oracle}",
                r.energy
            );
        }
    }

    #[test]
    fn dissipations_are_nonnegative_and_reports_are_pure() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let p = params(g);
        for seed in 0..20 {
            let st = random_state(g, seed);
            let r = report(&st, &p, 1e-3).unwrap();
            assert!(r.energy.is_finite());
            assert!(r.diss_flux >= 0.0);
            assert!(r.diss_nutrient >= 0.0);
            assert!(r.diss_artificial >= 0.0);
            assert!((0.0..=1.0).contains(&r.phase_violation));
            assert_eq!(r, report(&st, &p, 1e-3).unwrap());
        }
    }

    #[test]
    fn residual_of_identical_equilibrium_reports_is_zero() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let p = params(g);
        let mk = |t: f64| {
            let st = State::new(
                RealField::constant(g, 0.5),
                RealField::constant(g, 0.1),
                t,
            )
            .unwrap();
            report(&st, &p, 1e-3).unwrap()
        };
        let (r0, r1) = (mk(0.0), mk(0.25));
        assert_eq!(energy_residual(&r0, &r1).unwrap(), 0.0);
        assert!(energy_residual(&r1, &r0).is_err());
        assert!(energy_residual(&r0, &r0).is_err());
    }

    #[test]
    fn residual_tracks_exact_single_mode_decay() {
        // Sample phi = 1/2 + a e^{-alpha t} e_1 (c = 0) at t = 0 and t = dt,
        // the exact linearized trajectory with rate
        // alpha = lambda (lambda^s + delta lambda + 2). To O(a^2) the energy
        // above the equilibrium floor is (alpha / 2 lambda) a(t)^2 and the
        // dissipation is (alpha^2 / lambda) a(t)^2, so the two-point residual
        // has the closed form
        //   r = (alpha^2 / 2 lambda) a^2 g(2 alpha dt),
        //   g(x) = 2 (e^{-x} - 1)/x + 1 + e^{-x} = x^2/6 + O(x^3),
        // i.e. the leading behaviour is alpha^4 a^2 dt^2 / (3 lambda).
        let g = Grid::new_1d(64, 1.0).unwrap();
        let p = params(g);
        let e1 = eigenfunction(&g, &[1, 0]);
        let lambda = eigenvalue(&g, &[1, 0]);
        let alpha = lambda * (lambda.powf(p.s) + p.pot.delta * lambda + 2.0);
        let a = 1e-3;
        let sample = |t: f64| {
            let mut phi = RealField::constant(g, 0.5);
            phi.add_scaled(&e1, a * (-alpha * t).exp());
            let st = State::new(phi, RealField::constant(g, 0.0), t).unwrap();
            report(&st, &p, 1e-3).unwrap()
        };
        let r0 = sample(0.0);
        for dt in [1e-3, 5e-4] {
            let r = energy_residual(&r0, &sample(dt)).unwrap();
            let x = 2.0 * alpha * dt;
            let bowl = 2.0 * ((-x).exp() - 1.0) / x + 1.0 + (-x).exp();
            let expect = 0.5 * alpha * alpha * a * a * bowl / lambda;
            let leading = alpha.powi(4) * a * a * dt * dt / (3.0 * lambda);
            assert!(
                (r - expect).abs() <= 0.01 * expect,
                "dt {dt}: residual {r} vs closed form {expect}"
            );
            assert!(
                (r - leading).abs() <= 0.15 * leading,
                "dt {dt}: residual {r} vs leading term {leading}"
            );
        }
    }

    #[test]
    fn positivity_check_on_constants_and_single_modes() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let u = RealField::constant(g, 0.8);
        assert_eq!(
            stroock_varopoulos_check(&u, 0.75, ConvexTest::Quadratic).unwrap(),
            0.0
        );
        // u = 1/2 + e_1 with the quadratic bowl: exactly 2 lambda_1^s
        let mut u = RealField::constant(g, 0.5);
        u.add_scaled(&eigenfunction(&g, &[1, 0]), 1.0);
        let got = stroock_varopoulos_check(&u, 0.75, ConvexTest::Quadratic).unwrap();
        let want = 2.0 * eigenvalue(&g, &[1, 0]).powf(0.75);
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn positivity_check_rejects_bad_descriptors() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let u = RealField::constant(g, 0.5);
        assert!(stroock_varopoulos_check(&u, 0.75, ConvexTest::PseudoHuber { scale: 0.0 }).is_err());
        assert!(
            stroock_varopoulos_check(&u, 0.75, ConvexTest::PseudoHuber { scale: -1.0 }).is_err()
        );
        assert!(stroock_varopoulos_check(&u, 1.0, ConvexTest::Quadratic).is_err());
        assert!(stroock_varopoulos_check(&u, 0.0, ConvexTest::Quadratic).is_err());
    }

    #[test]
    fn positivity_check_on_random_fields() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut u = RealField::constant(g, rng.gen_range(0.2..0.8));
            for k in 1..12 {
                u.add_scaled(&eigenfunction(&g, &[k, 0]), 0.2 * rng.gen_range(-1.0..1.0));
            }
            let floor = -1e-10 * spectral::l2_norm(&u).powi(2);
            for s in [0.5, 0.75, 0.9] {
                for f in [ConvexTest::Quadratic, ConvexTest::PseudoHuber { scale: 0.1 }] {
                    let val = stroock_varopoulos_check(&u, s, f).unwrap();
                    assert!(val >= floor, "s={s}, {f:?}: {val} < {floor}");
                }
            }
        }
    }

    fn scenario(label: &str, value: f64, grid: Grid) -> SweepScenario {
        let mut phi = RealField::constant(grid, 0.5);
        phi.add_scaled(&eigenfunction(&grid, &[1, 0]), 0.01);
        phi.add_scaled(&eigenfunction(&grid, &[3, 0]), -0.005);
        SweepScenario {
            label: label.into(),
            value,
            params: params(grid),
            stepper: StepperConfig {
                dt_init: 1e-4,
                dt_min: 1e-9,
                dt_max: 1e-3,
                stab_kappa: 1.0,
                energy_tol: 1e-3,
                t_end: 4e-4,
                adaptive: true,
            },
            initial: State::new(phi, RealField::constant(grid, 0.1), 0.0).unwrap(),
        }
    }

    fn null_factory() -> impl Fn(usize) -> Result<Box<dyn RunSink + Send>> + Sync {
        |_| Ok(Box::new(integrator::NullSink))
    }

    #[test]
    fn sweep_of_identical_scenarios_has_zero_differences() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let plan = integrator::OutputPlan {
            eta: 1e-3,
            report_every: 0,
            snapshot_every: 0,
            sample_times: vec![0.0, 2e-4, 4e-4],
        };
        let scenarios = [scenario("a", 1.0, g), scenario("b", 1.0, g)];
        let table = sweep(&scenarios, &plan, &null_factory()).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[0].diff_phi.is_nan());
        assert_eq!(table.rows[1].diff_phi, 0.0);
        assert_eq!(table.rows[1].diff_c, 0.0);
        assert!(table.rows[1].sup_hs_norm_phi > 0.0);
        let csv = table.to_csv();
        assert!(csv.starts_with(SweepTable::CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn sweep_validates_its_inputs() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let other = Grid::new_1d(32, 1.0).unwrap();
        let plan = integrator::OutputPlan {
            eta: 1e-3,
            report_every: 0,
            snapshot_every: 0,
            sample_times: vec![0.0, 2e-4, 4e-4],
        };
        let mismatched = [scenario("a", 1.0, g), scenario("b", 2.0, other)];
        assert!(matches!(
            sweep(&mismatched, &plan, &null_factory()),
            Err(crate::Error::GridMismatch(_))
        ));

        let mut short_horizon = scenario("b", 2.0, g);
        short_horizon.stepper.t_end = 1e-4;
        assert!(sweep(&[scenario("a", 1.0, g), short_horizon], &plan, &null_factory()).is_err());

        let sparse = integrator::OutputPlan {
            sample_times: vec![0.0],
            ..plan
        };
        assert!(sweep(&[scenario("a", 1.0, g)], &sparse, &null_factory()).is_err());
    }

    #[test]
    fn worker_count_resolution() {
        assert_eq!(worker_count_from(None, 3).unwrap(), 3);
        assert_eq!(worker_count_from(Some("2"), 3).unwrap(), 2);
        assert_eq!(worker_count_from(Some("8"), 3).unwrap(), 3);
        assert_eq!(worker_count_from(Some(" 1 "), 3).unwrap(), 1);
        assert!(worker_count_from(Some("0"), 3).is_err());
        assert!(worker_count_from(Some("lots"), 3).is_err());
    }

    #[test]
    fn csv_row_has_full_precision_and_matches_header() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let p = params(g);
        let st = random_state(g, 11);
        let r = report(&st, &p, 1e-3).unwrap();
        let row = r.csv_row();
        assert_eq!(
            row.split(',').count(),
            EnergyReport::CSV_HEADER.split(',').count()
        );
        let first: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, r.t);
        let energy: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(energy, r.energy);
    }
}
