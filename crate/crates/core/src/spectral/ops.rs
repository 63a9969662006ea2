//! Spectral operators: fractional Neumann Laplacian powers, gradient,
//! divergence, norms, and dealiasing.
//!
//! All operators act on the cosine interpolant of the sampled field, so the
//! eigenrelation `(-Delta)^sigma e_k = lambda_k^sigma e_k`, the semigroup and
//! duality identities, and the adjointness of gradient and divergence hold to
//! rounding, not to discretization order.

use std::f64::consts::PI;

use crate::{Error, Result};

use super::grid::{Grid, RealField, VectorField};
use super::transform::{
    dct_forward, dct_inverse, map_lanes, scale_axis, transform_axis, Kernel, SpectralCoeffs,
};

/// Neumann eigenvalue `lambda_k = sum_i (k_i pi / L_i)^2` of mode `k`.
/// Entries of `k` beyond the grid dimension are ignored.
pub fn eigenvalue(grid: &Grid, k: &[usize]) -> f64 {
    (0..grid.dims())
        .map(|axis| {
            let w = k[axis] as f64 * PI / grid.extent(axis);
            w * w
        })
        .sum()
}

/// Squared per-axis wavenumbers `(k pi / L)^2`, `k = 0..n`.
fn axis_eigenvalues(grid: &Grid, axis: usize) -> Vec<f64> {
    (0..grid.n(axis))
        .map(|k| {
            let w = k as f64 * PI / grid.extent(axis);
            w * w
        })
        .collect()
}

/// Visits every mode as `(flat index, lambda_k)` in row-major order.
pub(crate) fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, f64)) {
    let e0 = axis_eigenvalues(grid, 0);
    if grid.dims() == 1 {
        for (k, &l) in e0.iter().enumerate() {
            f(k, l);
        }
    } else {
        let e1 = axis_eigenvalues(grid, 1);
        let n1 = grid.n(1);
        for (k0, &l0) in e0.iter().enumerate() {
            for (k1, &l1) in e1.iter().enumerate() {
                f(k0 * n1 + k1, l0 + l1);
            }
        }
    }
}

/// The L2-orthonormal eigenfunction `e_k` sampled on the grid.
pub fn eigenfunction(grid: &Grid, k: &[usize]) -> RealField {
    let dims = grid.dims();
    let norms: Vec<f64> = (0..dims)
        .map(|axis| {
            let l = grid.extent(axis);
            if k[axis] == 0 {
                1.0 / l.sqrt()
            } else {
                (2.0 / l).sqrt()
            }
        })
        .collect();
    RealField::from_fn(*grid, |x| {
        (0..dims)
            .map(|axis| {
                norms[axis] * (k[axis] as f64 * PI * x[axis] / grid.extent(axis)).cos()
            })
            .product()
    })
}

/// Applies `(-Delta)^sigma` spectrally: each coefficient is multiplied by
/// `lambda_k^sigma`, with the `k = 0` mode annihilated, so the output has
/// zero mean. Requires a finite `sigma > 0`.
pub fn apply_neg_laplacian_power(u: &RealField, sigma: f64) -> Result<RealField> {
    let mut a = dct_forward(u);
    scale_by_eigenvalue_power(&mut a, sigma)?;
    Ok(dct_inverse(&a))
}

/// Coefficient-space core of [`apply_neg_laplacian_power`].
pub(crate) fn scale_by_eigenvalue_power(a: &mut SpectralCoeffs, sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("fractional power must be finite and > 0, got {sigma}"),
        ));
    }
    let grid = *a.grid();
    let coeffs = a.coeffs_mut();
    for_each_mode(&grid, |flat, lambda| {
        coeffs[flat] *= if lambda == 0.0 { 0.0 } else { lambda.powf(sigma) };
    });
    Ok(())
}

/// Mean value `(1/N) sum_j u_j` (equals the quadrature mean on a midpoint
/// grid). Summation order is fixed for bit-identical reruns.
pub fn mean(u: &RealField) -> f64 {
    u.values().iter().sum::<f64>() / u.values().len() as f64
}

/// Quadrature inner product `(u, w)_h = prod_i h_i * sum_j u_j w_j`.
pub fn inner_product(u: &RealField, w: &RealField) -> Result<f64> {
    if u.grid() != w.grid() {
        return Err(Error::GridMismatch(
            "inner_product arguments live on different grids".into(),
        ));
    }
    Ok(u.grid().cell_volume()
        * u.values()
            .iter()
            .zip(w.values())
            .map(|(a, b)| a * b)
            .sum::<f64>())
}

/// Quadrature L2 norm.
pub fn l2_norm(u: &RealField) -> f64 {
    (u.grid().cell_volume() * u.values().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Quadrature Lp norm `(sum_j h |u_j|^p)^(1/p)` for `p >= 1`.
pub fn lp_norm(u: &RealField, p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    (u.grid().cell_volume()
        * u.values()
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>())
    .powf(1.0 / p)
}

/// Fractional seminorm: `hs_seminorm(u, sigma)^2 = sum_{k != 0} lambda_k^sigma (u, e_k)^2`,
/// which by Parseval equals `l2_norm(apply_neg_laplacian_power(u, sigma/2))`.
pub fn hs_seminorm(u: &RealField, sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("seminorm order must be finite and > 0, got {sigma}"),
        ));
    }
    let a = dct_forward(u);
    let mut acc = 0.0;
    let coeffs = a.coeffs();
    for_each_mode(a.grid(), |flat, lambda| {
        if lambda > 0.0 {
            acc += lambda.powf(sigma) * coeffs[flat] * coeffs[flat];
        }
    });
    Ok(acc.sqrt())
}

/// Scales a cosine-coefficient lane into the matching sine-coefficient lane
/// of the derivative: slot `m` (sine frequency `m + 1`) receives
/// `-( (m+1) pi / L ) c_{m+1}`; the Nyquist slot is empty.
fn shift_cos_to_sin(lane: &mut [f64], l: f64) {
    let n = lane.len();
    for m in 0..n - 1 {
        lane[m] = -((m as f64 + 1.0) * PI / l) * lane[m + 1];
    }
    lane[n - 1] = 0.0;
}

/// Scales a sine-coefficient lane into the cosine-coefficient lane of the
/// derivative: cosine slot `k` receives `(k pi / L) b_k` where `b_k` sits at
/// sine slot `k - 1`. The sine Nyquist mode has no cosine image on this grid
/// and is dropped, which is exactly what adjointness to the gradient needs.
fn shift_sin_to_cos(lane: &mut [f64], l: f64) {
    let n = lane.len();
    for k in (1..n).rev() {
        lane[k] = (k as f64 * PI / l) * lane[k - 1];
    }
    lane[0] = 0.0;
}

/// Spectral gradient. Each cosine mode differentiates exactly into the
/// matching sine mode, so `gradient(e_k)` is exact for band-limited fields.
pub fn gradient(u: &RealField) -> VectorField {
    let grid = *u.grid();
    let a = dct_forward(u);
    let comps: Vec<RealField> = (0..grid.dims())
        .map(|axis| {
            let mut vals = a.coeffs().to_vec();
            map_lanes(&grid, &mut vals, axis, |lane| {
                shift_cos_to_sin(lane, grid.extent(axis))
            });
            synthesize_mixed(&grid, vals, axis)
        })
        .collect();
    VectorField::new(comps).expect("components constructed on one grid")
}

/// Synthesizes a field whose coefficients are sine along `sine_axis`
/// (orthonormal, slot `m` = frequency `m + 1`) and cosine along other axes.
fn synthesize_mixed(grid: &Grid, mut vals: Vec<f64>, sine_axis: usize) -> RealField {
    for axis in 0..grid.dims() {
        let l = grid.extent(axis);
        if axis == sine_axis {
            let s = (2.0 / l).sqrt();
            scale_axis(grid, &mut vals, axis, |_| s);
            transform_axis(grid, &mut vals, axis, Kernel::Dst3);
        } else {
            let s0 = 2.0 / l.sqrt();
            let sk = (2.0 / l).sqrt();
            scale_axis(grid, &mut vals, axis, |k| if k == 0 { s0 } else { sk });
            transform_axis(grid, &mut vals, axis, Kernel::Dct3);
        }
    }
    RealField::from_values(*grid, vals).expect("layout matches grid")
}

/// Cosine coefficients of the divergence of `v` (shared by the plain and
/// dealiased variants). The zero mode is exactly zero by construction.
fn divergence_coeffs(v: &VectorField) -> SpectralCoeffs {
    let grid = *v.grid();
    let mut acc = vec![0.0; grid.len()];
    for axis in 0..grid.dims() {
        let mut vals = v.component(axis).values().to_vec();
        for j in 0..grid.dims() {
            let n = grid.n(j) as f64;
            let l = grid.extent(j);
            if j == axis {
                transform_axis(&grid, &mut vals, j, Kernel::Dst2);
                let s = (2.0 * l).sqrt() / n;
                scale_axis(&grid, &mut vals, j, |_| s);
            } else {
                transform_axis(&grid, &mut vals, j, Kernel::Dct2);
                let s0 = l.sqrt() / n;
                let sk = (2.0 * l).sqrt() / n;
                scale_axis(&grid, &mut vals, j, |k| if k == 0 { s0 } else { sk });
            }
        }
        map_lanes(&grid, &mut vals, axis, |lane| {
            shift_sin_to_cos(lane, grid.extent(axis))
        });
        for (a, &d) in acc.iter_mut().zip(&vals) {
            *a += d;
        }
    }
    SpectralCoeffs::from_raw(grid, acc)
}

/// Spectral divergence, the negative adjoint of [`gradient`] under the
/// midpoint quadrature. Its output has exactly zero mean (the zero mode is
/// never written), so fluxes in divergence form conserve mass to rounding.
pub fn divergence(v: &VectorField) -> RealField {
    dct_inverse(&divergence_coeffs(v))
}

/// Divergence followed by the 2/3-rule filter, fused so the product rule
/// `dealias(divergence(v))` costs no extra transform pair.
pub(crate) fn divergence_dealiased(v: &VectorField) -> RealField {
    let mut a = divergence_coeffs(v);
    filter_two_thirds(&mut a);
    dct_inverse(&a)
}

/// First retained-mode count removed by the 2/3 rule: modes `k >= cutoff`
/// are zeroed, modes `k < cutoff` kept.
pub fn two_thirds_cutoff(n: usize) -> usize {
    2 * n / 3
}

/// Zeroes every coefficient with `k_i >= two_thirds_cutoff(n_i)` on any axis.
pub(crate) fn filter_two_thirds(a: &mut SpectralCoeffs) {
    let grid = *a.grid();
    for axis in 0..grid.dims() {
        let cut = two_thirds_cutoff(grid.n(axis));
        scale_axis(&grid, a.coeffs_mut(), axis, |k| {
            if k < cut {
                1.0
            } else {
                0.0
            }
        });
    }
}

/// 2/3-rule dealiasing filter on a sampled field.
pub fn dealias(u: &RealField) -> RealField {
    let mut a = dct_forward(u);
    filter_two_thirds(&mut a);
    dct_inverse(&a)
}

/// Galerkin mode projection: keeps modes with `k_i < keep` on every axis
/// (`keep >= 1`, so the conserved zero mode always survives).
pub fn project_modes(a: &mut SpectralCoeffs, keep: usize) {
    assert!(keep >= 1, "project_modes would drop the zero mode");
    let grid = *a.grid();
    for axis in 0..grid.dims() {
        scale_axis(&grid, a.coeffs_mut(), axis, |k| {
            if k < keep {
                1.0
            } else {
                0.0
            }
        });
    }
}
