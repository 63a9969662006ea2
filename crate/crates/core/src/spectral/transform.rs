//! Lane-based cosine/sine transforms with the orthonormal normalization.
//!
//! `rustdct` supplies unnormalized in-place DCT-II/III and DST-II/III kernels;
//! everything here is the bookkeeping that turns them into analysis/synthesis
//! against the L2(Omega)-orthonormal cosine and sine bases described in the
//! module docs. The raw kernel conventions (no scaling, half-weight on the
//! first DCT-III / last DST-III element) are pinned by the naive-summation
//! oracles in the tests below.

use std::sync::{Arc, Mutex, OnceLock};

use rustdct::{DctPlanner, TransformType2And3};

use super::grid::{Grid, RealField, MAX_DIMS};

static PLANNER: OnceLock<Mutex<DctPlanner<f64>>> = OnceLock::new();

fn plan_cosine(len: usize) -> Arc<dyn TransformType2And3<f64>> {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(DctPlanner::new()))
        .lock()
        .expect("transform planner poisoned");
    planner.plan_dct2(len)
}

fn plan_sine(len: usize) -> Arc<dyn TransformType2And3<f64>> {
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(DctPlanner::new()))
        .lock()
        .expect("transform planner poisoned");
    planner.plan_dst2(len)
}

/// Which 1-d kernel to run on each lane.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    Dct2,
    Dct3,
    Dst2,
    Dst3,
}

/// Applies a 1-d kernel to every lane of `values` along `axis`.
pub(crate) fn transform_axis(grid: &Grid, values: &mut [f64], axis: usize, kernel: Kernel) {
    let n = grid.n(axis);
    let plan = match kernel {
        Kernel::Dct2 | Kernel::Dct3 => plan_cosine(n),
        Kernel::Dst2 | Kernel::Dst3 => plan_sine(n),
    };
    let mut scratch = vec![0.0; plan.get_scratch_len()];
    let run = |lane: &mut [f64], scratch: &mut [f64]| match kernel {
        Kernel::Dct2 => plan.process_dct2_with_scratch(lane, scratch),
        Kernel::Dct3 => plan.process_dct3_with_scratch(lane, scratch),
        Kernel::Dst2 => plan.process_dst2_with_scratch(lane, scratch),
        Kernel::Dst3 => plan.process_dst3_with_scratch(lane, scratch),
    };
    if axis == grid.dims() - 1 {
        // contiguous lanes
        for lane in values.chunks_exact_mut(n) {
            run(lane, &mut scratch);
        }
    } else {
        // strided lanes (axis 0 of a 2-d grid): gather, transform, scatter
        let n1 = grid.n(1);
        let mut lane = vec![0.0; n];
        for j1 in 0..n1 {
            for (j0, l) in lane.iter_mut().enumerate() {
                *l = values[j0 * n1 + j1];
            }
            run(&mut lane, &mut scratch);
            for (j0, l) in lane.iter().enumerate() {
                values[j0 * n1 + j1] = *l;
            }
        }
    }
}

/// Applies an arbitrary in-place lane function along `axis`
/// (used for the cosine <-> sine index shifts in gradient/divergence).
pub(crate) fn map_lanes(grid: &Grid, values: &mut [f64], axis: usize, mut f: impl FnMut(&mut [f64])) {
    let n = grid.n(axis);
    if axis == grid.dims() - 1 {
        for lane in values.chunks_exact_mut(n) {
            f(lane);
        }
    } else {
        let n1 = grid.n(1);
        let mut lane = vec![0.0; n];
        for j1 in 0..n1 {
            for (j0, l) in lane.iter_mut().enumerate() {
                *l = values[j0 * n1 + j1];
            }
            f(&mut lane);
            for (j0, l) in lane.iter().enumerate() {
                values[j0 * n1 + j1] = *l;
            }
        }
    }
}

/// Multiplies each element by a factor depending on its index along `axis`.
pub(crate) fn scale_axis(grid: &Grid, values: &mut [f64], axis: usize, factor: impl Fn(usize) -> f64) {
    if grid.dims() == 1 {
        for (k, v) in values.iter_mut().enumerate() {
            *v *= factor(k);
        }
    } else if axis == 1 {
        let n1 = grid.n(1);
        let f: Vec<f64> = (0..n1).map(factor).collect();
        for row in values.chunks_exact_mut(n1) {
            for (v, &s) in row.iter_mut().zip(&f) {
                *v *= s;
            }
        }
    } else {
        let n1 = grid.n(1);
        for (k0, row) in values.chunks_exact_mut(n1).enumerate() {
            let s = factor(k0);
            for v in row {
                *v *= s;
            }
        }
    }
}

/// Spectral coefficients of a field against the orthonormal cosine basis.
///
/// Entry `k = (k_1, k_2)` (row-major, same layout as the field) is
/// `(u, e_k)_h`; the `k = 0` entry is `mean(u) * sqrt(|Omega|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCoeffs {
    grid: Grid,
    coeffs: Vec<f64>,
}

impl SpectralCoeffs {
    pub(crate) fn from_raw(grid: Grid, coeffs: Vec<f64>) -> SpectralCoeffs {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralCoeffs { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Coefficient for mode `k` (second entry ignored in 1-d).
    pub fn get(&self, k: [usize; MAX_DIMS]) -> f64 {
        if self.grid.dims() == 1 {
            self.coeffs[k[0]]
        } else {
            self.coeffs[k[0] * self.grid.n(1) + k[1]]
        }
    }
}

/// Forward transform: orthonormal cosine coefficients of `u`.
pub fn dct_forward(u: &RealField) -> SpectralCoeffs {
    let grid = *u.grid();
    let mut vals = u.values().to_vec();
    for axis in 0..grid.dims() {
        let n = grid.n(axis) as f64;
        let l = grid.extent(axis);
        transform_axis(&grid, &mut vals, axis, Kernel::Dct2);
        let s0 = l.sqrt() / n;
        let sk = (2.0 * l).sqrt() / n;
        scale_axis(&grid, &mut vals, axis, |k| if k == 0 { s0 } else { sk });
    }
    SpectralCoeffs::from_raw(grid, vals)
}

/// Inverse transform: synthesizes the field from orthonormal coefficients.
pub fn dct_inverse(a: &SpectralCoeffs) -> RealField {
    let grid = *a.grid();
    let mut vals = a.coeffs().to_vec();
    for axis in 0..grid.dims() {
        let l = grid.extent(axis);
        // DCT-III halves its first input, hence the doubled k = 0 factor.
        let s0 = 2.0 / l.sqrt();
        let sk = (2.0 / l).sqrt();
        scale_axis(&grid, &mut vals, axis, |k| if k == 0 { s0 } else { sk });
        transform_axis(&grid, &mut vals, axis, Kernel::Dct3);
    }
    RealField::from_values(grid, vals).expect("coefficient layout matches grid")
}
