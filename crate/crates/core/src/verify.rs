//! Self-checks for the solver's structural facts.
//!
//! Each check is a named, seeded property test over one family of
//! invariants the dynamics rely on:
//!
//! * operator identities — eigenrelation `(-Δ)^σ e_k = λ_k^σ e_k`,
//!   the semigroup law `(-Δ)^{σ/2}(-Δ)^{σ/2} = (-Δ)^σ`, the duality
//!   `<(-Δ)^s u, (-Δ)^σ u> = |u|_{s+σ}²`, and annihilation of constants;
//! * convex-dissipation positivity `∫ F'(u) (-Δ)^s u dx ≥ 0`;
//! * the regularized potential family — convexity, monotone convergence
//!   in δ, derivative sign pattern, finite-difference consistency, the
//!   quadratic lower bound, and the truncation operators;
//! * stationarity of constant states and exact mass conservation.
//!
//! `run_all` executes every check and reports one pass/fail outcome per
//! name; the CLI turns that into a table and a process exit code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::diagnostics::{stroock_varopoulos_check, ConvexTest};
use crate::integrator::{self, StepperConfig};
use crate::model::{self, Mobility, ModelParams, State};
use crate::potential::{self, PotentialParams};
use crate::spectral::{
    self, dct_forward, dct_inverse, Grid, RealField,
};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 7;

/// Result of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable summary of the measured extremes.
    pub detail: String,
}

type CheckFn = fn(u64) -> CheckOutcome;

const CHECKS: &[(&str, CheckFn)] = &[
    ("operator-eigenrelation", check_eigenrelation),
    ("operator-semigroup", check_semigroup),
    ("operator-duality", check_duality),
    ("operator-annihilates-constants", check_constants),
    ("positivity-convex-dissipation", check_positivity),
    ("potential-convexity", check_potential_convexity),
    ("potential-delta-monotonicity", check_delta_monotonicity),
    ("potential-derivative-sign", check_derivative_sign),
    ("potential-gradient-consistency", check_gradient_consistency),
    ("potential-quadratic-lower-bound", check_quadratic_lower_bound),
    ("potential-truncations", check_truncations),
    ("model-constant-states-stationary", check_stationary_constants),
    ("model-mass-conservation", check_mass_conservation),
];

/// Names of all checks, in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(name, _)| *name).collect()
}

/// Runs one check by name.
pub fn run_named(name: &str, seed: u64) -> Option<CheckOutcome> {
    CHECKS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f(seed))
}

/// Runs the whole suite.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    CHECKS.iter().map(|(_, f)| f(seed)).collect()
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

/// The two grids every operator check runs on.
fn check_grids() -> [Grid; 2] {
    [
        Grid::new_1d(64, 1.0).unwrap(),
        Grid::new_2d([32, 32], [1.0, 0.75]).unwrap(),
    ]
}

const S_VALUES: [f64; 3] = [0.5, 0.75, 0.9];

/// Random zero-mean field supported on modes with every index <= `band`.
fn random_field(grid: &Grid, band: usize, rng: &mut ChaCha12Rng) -> RealField {
    let mut a = dct_forward(&RealField::constant(grid.clone(), 0.0));
    for flat in 0..grid.len() {
        let k = grid.decompose(flat);
        let dims = grid.dims();
        let in_band = k[..dims].iter().all(|&ki| ki <= band);
        let nonzero = k[..dims].iter().any(|&ki| ki != 0);
        if in_band && nonzero {
            a.coeffs_mut()[flat] = rng.gen_range(-1.0..1.0);
        }
    }
    dct_inverse(&a)
}

fn check_eigenrelation(_seed: u64) -> CheckOutcome {
    let tol = 1e-12;
    let mut worst = 0.0f64;
    for grid in &check_grids() {
        let dims = grid.dims();
        for flat in 1..grid.len() {
            let k = grid.decompose(flat);
            let e = spectral::eigenfunction(grid, &k[..dims]);
            let lam = spectral::eigenvalue(grid, &k[..dims]);
            for s in S_VALUES {
                for sigma in [s / 2.0, s, 1.0, (1.0 + s) / 2.0] {
                    let mut diff = spectral::apply_neg_laplacian_power(&e, sigma).unwrap();
                    let scale = lam.powf(sigma);
                    diff.add_scaled(&e, -scale);
                    worst = worst.max(spectral::l2_norm(&diff) / scale);
                }
            }
        }
    }
    outcome(
        "operator-eigenrelation",
        worst <= tol,
        format!("max relative error {worst:.3e} over all modes (tol {tol:.0e})"),
    )
}

fn check_semigroup(seed: u64) -> CheckOutcome {
    let tol = 1e-10;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let grids = check_grids();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let u = random_field(&grids[i % 2], 10, &mut rng);
        for sigma in [0.5, 0.75, 0.9, 1.5] {
            let half = spectral::apply_neg_laplacian_power(&u, sigma / 2.0).unwrap();
            let mut composed = spectral::apply_neg_laplacian_power(&half, sigma / 2.0).unwrap();
            let direct = spectral::apply_neg_laplacian_power(&u, sigma).unwrap();
            composed.add_scaled(&direct, -1.0);
            worst = worst.max(spectral::l2_norm(&composed) / spectral::l2_norm(&direct));
        }
    }
    outcome(
        "operator-semigroup",
        worst <= tol,
        format!("max relative error {worst:.3e} over 50 fields (tol {tol:.0e})"),
    )
}

fn check_duality(seed: u64) -> CheckOutcome {
    let tol = 1e-10;
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(1));
    let grids = check_grids();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let u = random_field(&grids[i % 2], 10, &mut rng);
        for s in S_VALUES {
            for sigma in S_VALUES {
                let lhs = spectral::inner_product(
                    &spectral::apply_neg_laplacian_power(&u, s).unwrap(),
                    &spectral::apply_neg_laplacian_power(&u, sigma).unwrap(),
                )
                .unwrap();
                let rhs = spectral::hs_seminorm(&u, s + sigma).unwrap().powi(2);
                worst = worst.max((lhs - rhs).abs() / rhs);
            }
        }
    }
    outcome(
        "operator-duality",
        worst <= tol,
        format!("max relative error {worst:.3e} over 50 fields (tol {tol:.0e})"),
    )
}

fn check_constants(_seed: u64) -> CheckOutcome {
    let mut worst = 0.0f64;
    for grid in &check_grids() {
        for value in [1.0, -0.37, 1e6] {
            let u = RealField::constant(grid.clone(), value);
            for sigma in [0.5, 0.75, 1.0, 1.5] {
                let w = spectral::apply_neg_laplacian_power(&u, sigma).unwrap();
                worst = worst.max(w.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
            let g = spectral::gradient(&u);
            for comp in g.components() {
                worst = worst.max(comp.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
            }
        }
    }
    outcome(
        "operator-annihilates-constants",
        worst == 0.0,
        format!("max |(-Δ)^σ const| and |∇const| = {worst:.3e} (want exactly 0)"),
    )
}

fn check_positivity(seed: u64) -> CheckOutcome {
    let tol = -1e-10;
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(2));
    let grids = check_grids();
    let tests = [
        ConvexTest::Quadratic,
        ConvexTest::PseudoHuber { scale: 0.35 },
    ];
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let shift = rng.gen_range(-1.0..1.0);
        let mut u = random_field(&grids[i % 2], 12, &mut rng);
        u.values_mut().iter_mut().for_each(|v| *v += shift);
        let norm_sq = spectral::l2_norm(&u).powi(2);
        for s in S_VALUES {
            for f in tests {
                let val = stroock_varopoulos_check(&u, s, f).unwrap();
                worst = worst.min(val / norm_sq);
            }
        }
    }
    outcome(
        "positivity-convex-dissipation",
        worst >= tol,
        format!("min ∫F'(u)(-Δ)^s u / ‖u‖² = {worst:.3e} over 100 fields (floor {tol:.0e})"),
    )
}

const DELTAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

fn pot(delta: f64) -> PotentialParams {
    PotentialParams::new(delta, 1e-3, 10.0).unwrap()
}

fn check_potential_convexity(_seed: u64) -> CheckOutcome {
    let pts = 3000usize;
    let h = 3.0 / pts as f64;
    let mut worst_rise = f64::INFINITY;
    let mut worst_curv = f64::INFINITY;
    for delta in DELTAS {
        let p = pot(delta);
        let mut prev = potential::f1_delta_prime(&p, -1.0);
        for i in 1..=pts {
            let x = -1.0 + h * i as f64;
            let cur = potential::f1_delta_prime(&p, x);
            let slack = 1e-10 * (1.0 + cur.abs().max(prev.abs()));
            worst_rise = worst_rise.min((cur - prev) + slack);
            prev = cur;
        }
        for i in 1..pts {
            let x = -1.0 + h * i as f64;
            let d2 = (potential::f1_delta(&p, x + h) - 2.0 * potential::f1_delta(&p, x)
                + potential::f1_delta(&p, x - h))
                / (h * h);
            let slack = 1e-8 * (1.0 + potential::f1_delta(&p, x).abs());
            worst_curv = worst_curv.min(d2 + slack);
        }
    }
    let passed = worst_rise >= 0.0 && worst_curv >= 0.0;
    outcome(
        "potential-convexity",
        passed,
        format!(
            "derivative monotone and second differences nonnegative on [-1,2] \
             for δ ∈ {{1e-1,1e-2,1e-3}} (margins {worst_rise:.3e}, {worst_curv:.3e})"
        ),
    )
}

fn check_delta_monotonicity(_seed: u64) -> CheckOutcome {
    let ps: Vec<PotentialParams> = DELTAS.iter().map(|&d| pot(d)).collect();
    let mut worst = f64::INFINITY;
    for i in 1..1000 {
        let x = i as f64 / 1000.0;
        let singular = x * x.ln() + (1.0 - x) * (1.0 - x).ln() + 2.0f64.ln();
        let slack = 1e-12 * (1.0 + singular.abs());
        let mut prev_val = f64::NEG_INFINITY;
        let mut prev_abs = 0.0f64;
        for p in &ps {
            let val = potential::f1_delta(p, x);
            let dabs = potential::f1_delta_prime(p, x).abs();
            // values increase toward the singular part as δ shrinks,
            // never exceeding it; |f'| grows alongside
            worst = worst.min(val - prev_val + slack);
            worst = worst.min(singular - val + slack);
            worst = worst.min(dabs - prev_abs + slack);
            prev_val = val;
            prev_abs = dabs;
        }
    }
    outcome(
        "potential-delta-monotonicity",
        worst >= 0.0,
        format!("f_{{1,δ}} ↗ singular part as δ ↓ at 10³ points (margin {worst:.3e})"),
    )
}

fn check_derivative_sign(_seed: u64) -> CheckOutcome {
    let mut worst = f64::INFINITY;
    let mut at_half = 0.0f64;
    for delta in DELTAS {
        let p = pot(delta);
        at_half = at_half.max(potential::f1_delta_prime(&p, 0.5).abs());
        for i in 0..=3000 {
            let x = -1.0 + i as f64 / 1000.0;
            let d = potential::f1_delta_prime(&p, x);
            let signed = if x < 0.5 { -d } else { d };
            if (x - 0.5).abs() > 1e-12 {
                worst = worst.min(signed);
            }
        }
    }
    let passed = worst >= 0.0 && at_half == 0.0;
    outcome(
        "potential-derivative-sign",
        passed,
        format!("f'_{{1,δ}} ≤ 0 below 1/2, ≥ 0 above, = {at_half:.1e} at 1/2 (margin {worst:.3e})"),
    )
}

fn check_gradient_consistency(_seed: u64) -> CheckOutcome {
    // interior of the log branch for δ = 0.1, away from the joins at δ, 1-δ
    let p = pot(0.1);
    let h = 1e-2;
    let mut ratios = Vec::new();
    for x in [0.2, 0.35, 0.64, 0.8] {
        let err = |h: f64| {
            ((potential::f1_delta(&p, x + h) - potential::f1_delta(&p, x - h)) / (2.0 * h)
                - potential::f1_delta_prime(&p, x))
            .abs()
        };
        ratios.push(err(h) / err(h / 2.0));
    }
    let half_err = ((potential::f1_delta(&p, 0.5 + h) - potential::f1_delta(&p, 0.5 - h))
        / (2.0 * h))
        .abs();
    let passed = ratios.iter().all(|r| (3.2..=4.8).contains(r)) && half_err <= 1e-10;
    outcome(
        "potential-gradient-consistency",
        passed,
        format!(
            "central-difference error ratios under h → h/2: {:?} (want ≈ 4)",
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn check_quadratic_lower_bound(_seed: u64) -> CheckOutcome {
    // existence of C* with f_{1,δ}(x) >= x²/(4δ*) - C* at δ* = 1/4
    let mut details = Vec::new();
    let mut passed = true;
    for delta in DELTAS {
        let p = pot(delta);
        let mut c_star = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let x = -10.0 + i as f64 / 200.0;
            c_star = c_star.max(x * x - potential::f1_delta(&p, x));
        }
        passed &= c_star.is_finite();
        for x in [-1e6, -1e4, -1e2, 1e2, 1e4, 1e6] {
            passed &= potential::f1_delta(&p, x) >= x * x - c_star;
        }
        details.push(format!("C*(δ={delta:.0e}) = {c_star:.3}"));
    }
    outcome(
        "potential-quadratic-lower-bound",
        passed,
        format!("f_{{1,δ}}(x) ≥ x² - C* holds out to |x| = 1e6; {}", details.join(", ")),
    )
}

fn check_truncations(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(3));
    let p = PotentialParams::new(1e-2, 0.5, 10.0).unwrap();
    let ops: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("unit", Box::new(potential::truncate_phi)),
        ("eps", Box::new(|x| potential::truncate_eps(&p, x))),
        ("h_k", Box::new(|x| potential::h_k(&p, x))),
    ];
    let mut passed = potential::truncate_phi(-0.3) == 0.0
        && potential::truncate_phi(1.2) == 1.0
        && potential::truncate_eps(&p, 5.0) == 2.0
        && potential::h_k(&p, 3.5) == 3.5
        && potential::h_k(&p, -30.0) == -10.0;
    for _ in 0..1000 {
        let x = rng.gen_range(-50.0..50.0);
        let y = rng.gen_range(-50.0..50.0);
        for (_, t) in &ops {
            passed &= t(t(x)) == t(x); // idempotent
            passed &= (t(x) - t(y)).abs() <= (x - y).abs(); // 1-Lipschitz
        }
    }
    outcome(
        "potential-truncations",
        passed,
        "clamps are idempotent and 1-Lipschitz over 1000 random pairs".into(),
    )
}

fn model_params(grid: Grid) -> ModelParams {
    ModelParams::new(
        0.75,
        PotentialParams::new(1e-3, 1e-3, 10.0).unwrap(),
        Mobility::Quadratic,
        0.5,
        grid,
        0,
    )
    .unwrap()
}

fn check_stationary_constants(_seed: u64) -> CheckOutcome {
    let tol = 1e-12;
    let grids = [
        Grid::new_1d(64, 1.0).unwrap(),
        Grid::new_2d([16, 16], [1.0, 2.0]).unwrap(),
    ];
    let mut worst = 0.0f64;
    for grid in &grids {
        let p = model_params(grid.clone());
        for (phi_bar, c_bar) in [(0.5, 0.0), (0.3, 0.2), (0.7, 0.1)] {
            let st = State::new(
                RealField::constant(grid.clone(), phi_bar),
                RealField::constant(grid.clone(), c_bar),
                0.0,
            )
            .unwrap();
            let r = model::rhs(&st, &p);
            for v in r.dphi_dt.values().iter().chain(r.dc_dt.values()) {
                worst = worst.max(v.abs());
            }
        }
    }
    outcome(
        "model-constant-states-stationary",
        worst <= tol,
        format!("max |rhs| at constant states {worst:.3e} (tol {tol:.0e})"),
    )
}

fn check_mass_conservation(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(4));
    let grid = Grid::new_1d(64, 1.0).unwrap();
    let p = model_params(grid.clone());
    let cfg = StepperConfig {
        dt_init: 1e-4,
        dt_min: 1e-9,
        dt_max: 1e-2,
        stab_kappa: 2.0,
        energy_tol: 1e-3,
        t_end: 1e-4,
        adaptive: false,
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut phi = random_field(&grid, 5, &mut rng);
        phi.scale(0.05);
        phi.values_mut().iter_mut().for_each(|v| *v += 0.45);
        let mut c = random_field(&grid, 5, &mut rng);
        c.scale(0.05);
        c.values_mut().iter_mut().for_each(|v| *v = (*v + 0.2).max(0.0));
        let st = State::new(phi, c, 0.0).unwrap();

        let r = model::rhs(&st, &p);
        let scale = r
            .dphi_dt
            .values()
            .iter()
            .chain(r.dc_dt.values())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(spectral::mean(&r.dphi_dt).abs() / scale);
        worst = worst.max(spectral::mean(&r.dc_dt).abs() / scale);

        let next = integrator::step(&st, 1e-4, &p, &cfg).unwrap();
        worst = worst.max(
            (spectral::mean(&next.phi) - spectral::mean(&st.phi)).abs()
                / spectral::mean(&st.phi).abs(),
        );
        worst = worst.max(
            (spectral::mean(&next.c) - spectral::mean(&st.c)).abs()
                / spectral::mean(&st.c).abs(),
        );
    }
    let tol = 1e-13;
    outcome(
        "model-mass-conservation",
        worst <= tol,
        format!("max relative mean drift of rhs and one step {worst:.3e} (tol {tol:.0e})"),
    )
}
