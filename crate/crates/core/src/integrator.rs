//! Semi-implicit time stepping with energy-law step control
//!
//! One step treats the stiff linear operators implicitly on the increment,
//! per mode in the shared eigenbasis:
//!
//! ```text
//! phi_k^{n+1} = phi_k^n + dt R_k / (1 + dt kappa (lambda^{1+s} + delta lambda^2))
//! c_k^{n+1}   = c_k^n   + dt S_k / (1 + dt delta lambda)
//! ```
//!
//! where `(R, S)` is the full nonlinear right-hand side at `t^n` and
//! `kappa >= 1/gamma` dominates the mobility. The split is first-order
//! consistent (all denominators tend to 1 as `dt -> 0`) and conservative:
//! `lambda_0 = 0` and both right-hand sides have exactly zero mean, so the
//! zero mode never moves. Only the increment is synthesized back to physical
//! space, hence exact equilibria are preserved bit-for-bit.
//!
//! Adaptive runs accept a trial step only if the discrete energy law holds
//! within budget: the residual of [`diagnostics::energy_residual`] must stay
//! below `energy_tol (1 + |E| + D1 + D2)`, and the energy may not grow
//! faster than the nonnegative part of the viscous coupling term plus that
//! same budget. Rejected steps halve `dt`; five consecutive accepts grow it
//! by 1.2 up to `dt_max`; falling below `dt_min` is a hard failure carrying
//! a diagnostic dump.

use crate::diagnostics::{self, EnergyReport};
use crate::model::{self, ModelParams, State};
use crate::spectral::{self, dct_forward, dct_inverse};
use crate::{Error, Result};

/// Time-stepping policy knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Stabilization coefficient of the implicit operator, `>= 1/gamma`.
    pub stab_kappa: f64,
    /// Relative tolerance of the energy-law residual test.
    pub energy_tol: f64,
    pub t_end: f64,
    /// `false` freezes the step size: every step is taken at `dt_init`
    /// (clipped only to land on checkpoints) and accepted unconditionally.
    pub adaptive: bool,
}

impl StepperConfig {
    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        let all_finite = self.dt_init.is_finite()
            && self.dt_min.is_finite()
            && self.dt_max.is_finite()
            && self.stab_kappa.is_finite()
            && self.energy_tol.is_finite()
            && self.t_end.is_finite();
        if !all_finite {
            return Err(Error::invalid("stepper", "all fields must be finite"));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::invalid(
                "dt",
                format!(
                    "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                    self.dt_min, self.dt_init, self.dt_max
                ),
            ));
        }
        if self.stab_kappa < 1.0 / p.gamma {
            return Err(Error::invalid(
                "stab_kappa",
                format!(
                    "must dominate the mobility bound 1/gamma = {}, got {}",
                    1.0 / p.gamma,
                    self.stab_kappa
                ),
            ));
        }
        if self.energy_tol <= 0.0 {
            return Err(Error::invalid("energy_tol", "must be positive"));
        }
        if self.t_end < 0.0 {
            return Err(Error::invalid("t_end", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Takes one IMEX step of size `dt`. Fails if the update contains
/// non-finite values (the caller may retry with a smaller step).
pub fn step(st: &State, dt: f64, p: &ModelParams, cfg: &StepperConfig) -> Result<State> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("need dt > 0, got {dt}")));
    }
    let rhs = model::rhs(st, p);
    let mut dphi = dct_forward(&rhs.dphi_dt);
    let mut dc = dct_forward(&rhs.dc_dt);
    let grid = *st.phi.grid();
    let (kappa, delta) = (cfg.stab_kappa, p.pot.delta);
    {
        let dphi = dphi.coeffs_mut();
        let dc = dc.coeffs_mut();
        let mut flat = 0;
        spectral::for_each_mode(&grid, |_, lambda| {
            dphi[flat] *= dt / (1.0 + dt * kappa * (lambda.powf(1.0 + p.s) + delta * lambda * lambda));
            dc[flat] *= dt / (1.0 + dt * delta * lambda);
            flat += 1;
        });
    }
    if p.modes_kept > 0 {
        spectral::project_modes(&mut dphi, p.modes_kept);
        spectral::project_modes(&mut dc, p.modes_kept);
    }
    let mut phi = st.phi.clone();
    phi.add_scaled(&dct_inverse(&dphi), 1.0);
    let mut c = st.c.clone();
    c.add_scaled(&dct_inverse(&dc), 1.0);
    if !(phi.all_finite() && c.all_finite()) {
        return Err(Error::Step(format!(
            "non-finite update at t = {}, dt = {dt}",
            st.t
        )));
    }
    Ok(State {
        phi,
        c,
        t: st.t + dt,
        mu_cache: None,
    })
}

/// Adaptive step-size state: current nominal step and the accept streak.
#[derive(Clone, Copy, Debug)]
pub struct StepController {
    dt: f64,
    consecutive_accepts: u32,
}

impl StepController {
    pub fn new(cfg: &StepperConfig) -> StepController {
        StepController {
            dt: cfg.dt_init,
            consecutive_accepts: 0,
        }
    }

    /// Current nominal step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Applies the acceptance test to a trial step and updates the nominal
    /// step size. Returns the decision and the step size to use next.
    pub fn adapt(
        &mut self,
        prev: &EnergyReport,
        next: &EnergyReport,
        dt: f64,
        cfg: &StepperConfig,
    ) -> Result<(bool, f64)> {
        let r = diagnostics::energy_residual(prev, next)?;
        let budget = cfg.energy_tol
            * (1.0
                + 0.5 * (prev.energy.abs() + next.energy.abs())
                + 0.5 * (prev.diss_flux + next.diss_flux)
                + 0.5 * (prev.diss_nutrient + next.diss_nutrient));
        // energy may legitimately grow at the rate of the positive part of
        // delta int grad c . grad phi = coupling + diss_artificial
        let growth_allowance = (0.5
            * (prev.coupling + next.coupling + prev.diss_artificial + next.diss_artificial))
            .max(0.0);
        let de_dt = (next.energy - prev.energy) / (next.t - prev.t);
        let accepted = r.abs() <= budget && de_dt <= growth_allowance + budget;
        if accepted {
            self.consecutive_accepts += 1;
            if self.consecutive_accepts % 5 == 0 {
                self.dt = (self.dt * 1.2).min(cfg.dt_max);
            }
        } else {
            self.consecutive_accepts = 0;
            let halved = 0.5 * self.dt.min(dt);
            if halved < cfg.dt_min {
                return Err(Error::Step(format!(
                    "step size fell below dt_min = {} after rejection at t = {}: \
                     residual {r:e} vs budget {budget:e}, dE/dt {de_dt:e} vs allowance {:e}; \
                     E {} -> {}, D1 {:e}, D2 {:e}",
                    cfg.dt_min,
                    prev.t,
                    growth_allowance + budget,
                    prev.energy,
                    next.energy,
                    next.diss_flux,
                    next.diss_nutrient,
                )));
            }
            self.dt = halved;
        }
        Ok((accepted, self.dt))
    }

    /// Handles a step that failed to produce finite values: halve and retry.
    fn note_failure(&mut self, detail: &Error, cfg: &StepperConfig) -> Result<()> {
        self.consecutive_accepts = 0;
        let halved = 0.5 * self.dt;
        if halved < cfg.dt_min {
            return Err(Error::Step(format!(
                "step size fell below dt_min = {} while recovering from: {detail}",
                cfg.dt_min
            )));
        }
        self.dt = halved;
        Ok(())
    }
}

/// What to emit while running, and how often (in accepted steps;
/// 0 disables a cadence — initial and final events are always emitted).
#[derive(Clone, Debug)]
pub struct OutputPlan {
    /// Phase-violation threshold passed to every report.
    pub eta: f64,
    pub report_every: usize,
    pub snapshot_every: usize,
    /// Times to land on exactly and hand to [`RunSink::on_sample`].
    pub sample_times: Vec<f64>,
}

impl OutputPlan {
    /// Reports only (every accepted step), no snapshots, no samples.
    pub fn reports_only(eta: f64) -> OutputPlan {
        OutputPlan {
            eta,
            report_every: 1,
            snapshot_every: 0,
            sample_times: Vec::new(),
        }
    }
}

/// Receives output events during a run. All methods default to no-ops.
pub trait RunSink {
    fn on_report(&mut self, _r: &EnergyReport) -> Result<()> {
        Ok(())
    }
    fn on_snapshot(&mut self, _st: &State, _r: &EnergyReport) -> Result<()> {
        Ok(())
    }
    fn on_sample(&mut self, _st: &State, _r: &EnergyReport) -> Result<()> {
        Ok(())
    }
}

/// Sink that discards everything.
pub struct NullSink;

impl RunSink for NullSink {}

/// Outcome of a run: final state plus the full accepted-step report series.
#[derive(Debug)]
pub struct RunResult {
    pub state: State,
    pub reports: Vec<EnergyReport>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Checks the admissibility of initial data: `0 <= phi <= 1` pointwise,
/// `0 < mean(phi) < 1`, and `c >= 0` pointwise.
pub fn validate_initial(st: &State) -> Result<()> {
    if !(st.phi.all_finite() && st.c.all_finite()) {
        return Err(Error::Domain("initial fields must be finite".into()));
    }
    if st.phi.min() < 0.0 || st.phi.max() > 1.0 {
        return Err(Error::Domain(format!(
            "initial phi must lie in [0, 1], found range [{}, {}]",
            st.phi.min(),
            st.phi.max()
        )));
    }
    let m = spectral::mean(&st.phi);
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!(
            "initial mean of phi must lie strictly inside (0, 1), got {m}"
        )));
    }
    if st.c.min() < 0.0 {
        return Err(Error::Domain(format!(
            "initial c must be nonnegative, found minimum {}",
            st.c.min()
        )));
    }
    Ok(())
}

/// Advances the state to `cfg.t_end`, validating the initial-data
/// hypotheses first and emitting output events per `plan`.
pub fn run(
    st0: State,
    p: &ModelParams,
    cfg: &StepperConfig,
    plan: &OutputPlan,
    sink: &mut dyn RunSink,
) -> Result<RunResult> {
    validate_initial(&st0)?;
    drive(st0, p, cfg, cfg.t_end, plan, sink)
}

/// Advances an already-running state to `t_target` without re-validating
/// the initial-data hypotheses and without emitting output events.
pub fn advance(
    st: State,
    p: &ModelParams,
    cfg: &StepperConfig,
    t_target: f64,
    eta: f64,
) -> Result<RunResult> {
    let plan = OutputPlan {
        eta,
        report_every: 0,
        snapshot_every: 0,
        sample_times: Vec::new(),
    };
    drive(st, p, cfg, t_target, &plan, &mut NullSink)
}

fn drive(
    mut st: State,
    p: &ModelParams,
    cfg: &StepperConfig,
    t_end: f64,
    plan: &OutputPlan,
    sink: &mut dyn RunSink,
) -> Result<RunResult> {
    cfg.validate(p)?;
    if p.modes_kept > 0 {
        for field in [&mut st.phi, &mut st.c] {
            let mut hat = dct_forward(field);
            spectral::project_modes(&mut hat, p.modes_kept);
            *field = dct_inverse(&hat);
        }
        st.mu_cache = None;
    }
    st.ensure_mu(p);
    let mut r_prev = diagnostics::report(&st, p, plan.eta)?;
    let mut reports = vec![r_prev];
    sink.on_report(&r_prev)?;
    sink.on_snapshot(&st, &r_prev)?;
    if plan.sample_times.contains(&st.t) {
        sink.on_sample(&st, &r_prev)?;
    }

    let mut samples: Vec<f64> = plan
        .sample_times
        .iter()
        .copied()
        .filter(|&t| t.is_finite() && t > st.t && t <= t_end)
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples.dedup();
    let mut next_sample = 0;

    let mut ctrl = StepController::new(cfg);
    let mut accepted_steps = 0usize;
    let mut rejected_steps = 0usize;
    let (mut reported_at, mut snapped_at) = (0usize, 0usize);
    let t_eps = 1e-12 * t_end.abs().max(1.0);

    while st.t < t_end - t_eps {
        let checkpoint = samples
            .get(next_sample)
            .copied()
            .unwrap_or(t_end)
            .min(t_end);
        let dt_nominal = if cfg.adaptive { ctrl.dt() } else { cfg.dt_init };
        // snap onto the checkpoint instead of leaving a sliver behind
        let remaining = checkpoint - st.t;
        let landing = remaining <= dt_nominal * (1.0 + 1e-9);
        let dt_eff = if landing { remaining } else { dt_nominal };

        let mut trial = match step(&st, dt_eff, p, cfg) {
            Ok(trial) => trial,
            Err(e) if cfg.adaptive => {
                rejected_steps += 1;
                ctrl.note_failure(&e, cfg)?;
                continue;
            }
            Err(e) => return Err(e),
        };
        if landing {
            trial.t = checkpoint;
        }
        trial.ensure_mu(p);
        let r_trial = diagnostics::report(&trial, p, plan.eta)?;

        if cfg.adaptive {
            let (ok, _) = ctrl.adapt(&r_prev, &r_trial, dt_eff, cfg)?;
            if !ok {
                rejected_steps += 1;
                continue;
            }
        }

        st = trial;
        r_prev = r_trial;
        accepted_steps += 1;
        reports.push(r_trial);
        if plan.report_every > 0 && accepted_steps % plan.report_every == 0 {
            sink.on_report(&r_trial)?;
            reported_at = accepted_steps;
        }
        if plan.snapshot_every > 0 && accepted_steps % plan.snapshot_every == 0 {
            sink.on_snapshot(&st, &r_trial)?;
            snapped_at = accepted_steps;
        }
        if landing && samples.get(next_sample) == Some(&st.t) {
            sink.on_sample(&st, &r_trial)?;
            next_sample += 1;
        }
    }

    // the final state is always emitted, without duplicating cadence events
    if accepted_steps > 0 {
        if reported_at != accepted_steps {
            sink.on_report(&r_prev)?;
        }
        if snapped_at != accepted_steps {
            sink.on_snapshot(&st, &r_prev)?;
        }
    }
    Ok(RunResult {
        state: st,
        reports,
        accepted_steps,
        rejected_steps,
    })
}
