//! Run configuration: parsing, validation, and initial-condition synthesis.
//!
//! Config files are flat `key = value` text with `#` comments and the four
//! sections `[model]`, `[stepper]`, `[init]`, and `[output]` (a TOML
//! subset). Every key has a default, unknown keys are rejected, and
//! validation reports all violated constraints together with their key
//! names. Initial states are band-limited cosine noise around the
//! configured means, deterministic per seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::integrator::StepperConfig;
use crate::model::{Mobility, ModelParams, State};
use crate::potential::PotentialParams;
use crate::spectral::{self, dct_inverse, Grid, RealField, SpectralCoeffs};
use crate::{Error, Result};

/// Mobility choices expressible in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityKind {
    Constant,
    Quadratic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Fractional diffusion order, `1/2 <= s < 1`.
    pub s: f64,
    /// Potential regularization scale, `0 < delta <= 1/4`.
    pub delta: f64,
    /// Nutrient truncation scale, `0 < eps <= 1`.
    pub eps: f64,
    /// Symmetric clamp bound of the auxiliary truncation.
    pub k_cut: f64,
    /// Mobility clamp parameter, `0 < gamma <= 1`.
    pub gamma: f64,
    pub mobility: MobilityKind,
    /// Grid points per axis (1 or 2 axes, powers of two).
    pub n: Vec<usize>,
    /// Domain edge lengths, same number of axes as `n`.
    pub extent: Vec<f64>,
    /// Galerkin truncation; 0 keeps every mode.
    pub modes_kept: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            s: 0.75,
            delta: 1e-3,
            eps: 1e-3,
            k_cut: 10.0,
            gamma: 1.0,
            mobility: MobilityKind::Constant,
            n: vec![128],
            extent: vec![1.0],
            modes_kept: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub stab_kappa: f64,
    pub energy_tol: f64,
    pub t_end: f64,
    pub adaptive: bool,
}

impl Default for StepperSection {
    fn default() -> Self {
        StepperSection {
            dt_init: 1e-4,
            dt_min: 1e-9,
            dt_max: 1e-2,
            stab_kappa: 1.0,
            energy_tol: 1e-3,
            t_end: 1.0,
            adaptive: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    /// Mean of the initial phase field, strictly inside (0, 1).
    pub phi_mean: f64,
    /// Mean of the initial nutrient field, nonnegative.
    pub c_mean: f64,
    /// Sup-norm amplitude of the phase noise.
    pub amplitude: f64,
    /// Sup-norm amplitude of the nutrient noise.
    pub c_amplitude: f64,
    /// Highest excited mode index per axis.
    pub band_limit: usize,
    /// Optional spectral low-pass applied to the initial phase field:
    /// keep modes `k < mollify_modes` (0 disables).
    pub mollify_modes: usize,
    pub seed: u64,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            phi_mean: 0.5,
            c_mean: 0.1,
            amplitude: 0.01,
            c_amplitude: 0.0,
            band_limit: 8,
            mollify_modes: 0,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    /// Emit a trajectory row every this many accepted steps (0: ends only).
    pub report_every: usize,
    /// Emit a snapshot every this many accepted steps (0: ends only).
    pub snapshot_every: usize,
    /// Number of equispaced sample times used for sweep comparisons.
    pub sample_count: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "out".into(),
            report_every: 1,
            snapshot_every: 0,
            sample_count: 17,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Phase-violation threshold used by every report, `0 < eta < 1/2`.
    pub eta: f64,
    pub model: ModelSection,
    pub stepper: StepperSection,
    pub init: InitSection,
    pub output: OutputSection,
}

impl RunConfig {
    /// Checks every constraint and reports all violations at once,
    /// each prefixed with its config key.
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<String> = Vec::new();
        fn check(bad: &mut Vec<String>, ok: bool, key: &str, want: String) {
            if !ok {
                bad.push(format!("{key}: {want}"));
            }
        }
        let m = &self.model;
        check(
            &mut bad,
            m.s.is_finite() && (0.5..1.0).contains(&m.s),
            "model.s",
            format!("need 1/2 <= s < 1, got {}", m.s),
        );
        check(
            &mut bad,
            m.delta.is_finite() && m.delta > 0.0 && m.delta <= 0.25,
            "model.delta",
            format!("need 0 < delta <= 1/4, got {}", m.delta),
        );
        check(
            &mut bad,
            m.eps.is_finite() && m.eps > 0.0 && m.eps <= 1.0,
            "model.eps",
            format!("need 0 < eps <= 1, got {}", m.eps),
        );
        check(
            &mut bad,
            m.k_cut.is_finite() && m.k_cut > 0.0,
            "model.k_cut",
            format!("need k_cut > 0, got {}", m.k_cut),
        );
        check(
            &mut bad,
            m.gamma.is_finite() && m.gamma > 0.0 && m.gamma <= 1.0,
            "model.gamma",
            format!("need 0 < gamma <= 1, got {}", m.gamma),
        );
        let grid = Grid::new(&m.n, &m.extent);
        if let Err(e) = &grid {
            bad.push(format!("model.n / model.extent: {e}"));
        }
        if let Ok(g) = &grid {
            let n_min = (0..g.dims()).map(|a| g.n(a)).min().unwrap();
            check(
                &mut bad,
                m.modes_kept == 0 || (2..=n_min).contains(&m.modes_kept),
                "model.modes_kept",
                format!("need 0 or 2 <= modes_kept <= {n_min}, got {}", m.modes_kept),
            );
            let cutoff = (0..g.dims())
                .map(|a| spectral::two_thirds_cutoff(g.n(a)))
                .min()
                .unwrap();
            check(
                &mut bad,
                (1..cutoff).contains(&self.init.band_limit),
                "init.band_limit",
                format!(
                    "need 1 <= band_limit < dealias cutoff {cutoff}, got {}",
                    self.init.band_limit
                ),
            );
        }

        let st = &self.stepper;
        check(
            &mut bad,
            st.dt_min.is_finite() && st.dt_min > 0.0 && st.dt_min <= st.dt_init && st.dt_init <= st.dt_max && st.dt_max.is_finite(),
            "stepper.dt_init/dt_min/dt_max",
            format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                st.dt_min, st.dt_init, st.dt_max
            ),
        );
        check(
            &mut bad,
            st.stab_kappa.is_finite() && m.gamma > 0.0 && st.stab_kappa >= 1.0 / m.gamma,
            "stepper.stab_kappa",
            format!("need stab_kappa >= 1/gamma, got {}", st.stab_kappa),
        );
        check(
            &mut bad,
            st.energy_tol.is_finite() && st.energy_tol > 0.0,
            "stepper.energy_tol",
            format!("need energy_tol > 0, got {}", st.energy_tol),
        );
        check(
            &mut bad,
            st.t_end.is_finite() && st.t_end >= 0.0,
            "stepper.t_end",
            format!("need t_end >= 0, got {}", st.t_end),
        );

        let init = &self.init;
        check(
            &mut bad,
            init.phi_mean.is_finite() && init.phi_mean > 0.0 && init.phi_mean < 1.0,
            "init.phi_mean",
            format!("need 0 < phi_mean < 1, got {}", init.phi_mean),
        );
        check(
            &mut bad,
            init.c_mean.is_finite() && init.c_mean >= 0.0,
            "init.c_mean",
            format!("need c_mean >= 0, got {}", init.c_mean),
        );
        let amp_cap = init.phi_mean.min(1.0 - init.phi_mean);
        check(
            &mut bad,
            init.amplitude.is_finite()
                && init.amplitude >= 0.0
                && (init.amplitude <= amp_cap || !amp_cap.is_finite()),
            "init.amplitude",
            format!(
                "need 0 <= amplitude <= min(phi_mean, 1 - phi_mean) = {amp_cap}, got {}",
                init.amplitude
            ),
        );
        check(
            &mut bad,
            init.c_amplitude.is_finite() && init.c_amplitude >= 0.0,
            "init.c_amplitude",
            format!("need c_amplitude >= 0, got {}", init.c_amplitude),
        );
        check(
            &mut bad,
            self.eta.is_finite() && self.eta > 0.0 && self.eta < 0.5,
            "eta",
            format!("need 0 < eta < 1/2, got {}", self.eta),
        );
        check(
            &mut bad,
            !self.output.directory.is_empty(),
            "output.directory",
            "must not be empty".into(),
        );
        check(
            &mut bad,
            self.output.sample_count == 0 || self.output.sample_count >= 2,
            "output.sample_count",
            format!("need 0 or >= 2, got {}", self.output.sample_count),
        );

        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// The validated grid.
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(&self.model.n, &self.model.extent)
    }

    /// The validated model parameters.
    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let mobility = match m.mobility {
            MobilityKind::Constant => Mobility::Constant,
            MobilityKind::Quadratic => Mobility::Quadratic,
        };
        ModelParams::new(
            m.s,
            PotentialParams::new(m.delta, m.eps, m.k_cut)?,
            mobility,
            m.gamma,
            self.grid()?,
            m.modes_kept,
        )
    }

    /// The validated stepper configuration.
    pub fn stepper_config(&self) -> StepperConfig {
        let st = &self.stepper;
        StepperConfig {
            dt_init: st.dt_init,
            dt_min: st.dt_min,
            dt_max: st.dt_max,
            stab_kappa: st.stab_kappa,
            energy_tol: st.energy_tol,
            t_end: st.t_end,
            adaptive: st.adaptive,
        }
    }

    /// Serializes back to config-file text; parsing the result yields an
    /// identical configuration.
    pub fn to_text(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eta: 1e-3,
            model: ModelSection::default(),
            stepper: StepperSection::default(),
            init: InitSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Parses and validates config-file text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Seeded band-limited noise with zero mean and unit sup norm
/// (identically zero if no mode fits under the band limit).
fn unit_noise(grid: Grid, band_limit: usize, rng: &mut ChaCha12Rng) -> RealField {
    let mut coeffs = vec![0.0; grid.len()];
    let limit = |axis: usize| band_limit.min(grid.n(axis) - 1);
    if grid.dims() == 1 {
        for k in 1..=limit(0) {
            coeffs[k] = rng.gen_range(-1.0..1.0);
        }
    } else {
        for k0 in 0..=limit(0) {
            for k1 in 0..=limit(1) {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                coeffs[k0 * grid.n(1) + k1] = rng.gen_range(-1.0..1.0);
            }
        }
    }
    let field = dct_inverse(&SpectralCoeffs::from_raw(grid, coeffs));
    let sup = field.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return field;
    }
    field.map(|v| v / sup)
}

/// Builds the initial state: phase field `phi_mean + amplitude * noise`
/// clamped to `[0, 1]` and re-centered to the exact mean, nutrient field
/// `c_mean + c_amplitude * noise` clamped at 0. Deterministic per seed.
pub fn make_initial_state(cfg: &RunConfig) -> Result<State> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let init = &cfg.init;

    let mut phi = RealField::constant(grid, init.phi_mean);
    if init.amplitude > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(init.seed);
        phi.add_scaled(&unit_noise(grid, init.band_limit, &mut rng), init.amplitude);
        if init.mollify_modes > 0 {
            let mut hat = spectral::dct_forward(&phi);
            spectral::project_modes(&mut hat, init.mollify_modes);
            phi = dct_inverse(&hat);
        }
        phi = phi.map(|v| v.clamp(0.0, 1.0));
        let shift = init.phi_mean - spectral::mean(&phi);
        phi = phi.map(|v| v + shift);
    }

    let mut c = RealField::constant(grid, init.c_mean);
    if init.c_amplitude > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(init.seed);
        rng.set_stream(1);
        c.add_scaled(&unit_noise(grid, init.band_limit, &mut rng), init.c_amplitude);
        c = c.map(|v| v.max(0.0));
    }

    State::new(phi, c, 0.0)
}
