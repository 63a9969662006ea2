use crate::{Error, Result};

/// Maximum spatial dimension supported by the solver.
pub const MAX_DIMS: usize = 2;

/// A midpoint tensor grid on a rectangle `(0,L1) x (0,L2)` (or an interval).
///
/// Grids are small `Copy` values; fields embed one and operations compare
/// them structurally to detect mismatches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dims: usize,
    n: [usize; MAX_DIMS],
    extent: [f64; MAX_DIMS],
}

impl Grid {
    /// Builds a grid from per-axis point counts and extents.
    ///
    /// Requires `1 <= dims <= 2`, every `n_i` a power of two with `n_i >= 4`,
    /// and every `L_i` positive and finite.
    pub fn new(n: &[usize], extent: &[f64]) -> Result<Grid> {
        if n.is_empty() || n.len() > MAX_DIMS {
            return Err(Error::invalid(
                "grid.n",
                format!("expected 1 or 2 axes, got {}", n.len()),
            ));
        }
        if extent.len() != n.len() {
            return Err(Error::invalid(
                "grid.extent",
                format!("{} extents for {} axes", extent.len(), n.len()),
            ));
        }
        let mut total: usize = 1;
        for (axis, &ni) in n.iter().enumerate() {
            if ni < 4 || !ni.is_power_of_two() {
                return Err(Error::invalid(
                    "grid.n",
                    format!("axis {axis}: n = {ni}, need a power of two >= 4"),
                ));
            }
            total = total.checked_mul(ni).ok_or_else(|| {
                Error::invalid("grid.n", "total point count overflows usize".to_string())
            })?;
        }
        for (axis, &li) in extent.iter().enumerate() {
            if !(li.is_finite() && li > 0.0) {
                return Err(Error::invalid(
                    "grid.extent",
                    format!("axis {axis}: L = {li}, need finite L > 0"),
                ));
            }
        }
        let mut grid = Grid {
            dims: n.len(),
            n: [1; MAX_DIMS],
            extent: [1.0; MAX_DIMS],
        };
        grid.n[..n.len()].copy_from_slice(n);
        grid.extent[..n.len()].copy_from_slice(extent);
        Ok(grid)
    }

    /// Convenience 1-d constructor.
    pub fn new_1d(n: usize, extent: f64) -> Result<Grid> {
        Grid::new(&[n], &[extent])
    }

    /// Convenience 2-d constructor.
    pub fn new_2d(n: [usize; 2], extent: [f64; 2]) -> Result<Grid> {
        Grid::new(&n, &extent)
    }

    /// Spatial dimension (1 or 2).
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Points along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    /// Extent `L` along `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n[..self.dims].iter().product()
    }

    /// True when the grid holds no points (never, for a valid grid).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mesh width `h = L / n` along `axis`.
    pub fn cell(&self, axis: usize) -> f64 {
        self.extent[axis] / self.n[axis] as f64
    }

    /// Quadrature weight per point, `prod_i h_i`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dims).map(|a| self.cell(a)).product()
    }

    /// Domain volume `|Omega| = prod_i L_i`.
    pub fn volume(&self) -> f64 {
        self.extent[..self.dims].iter().product()
    }

    /// Midpoint coordinate of index `j` along `axis`.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        (j as f64 + 0.5) * self.cell(axis)
    }

    /// Splits a flat row-major index into per-axis indices.
    /// The second entry is 0 in 1-d.
    pub fn decompose(&self, flat: usize) -> [usize; MAX_DIMS] {
        if self.dims == 1 {
            [flat, 0]
        } else {
            [flat / self.n[1], flat % self.n[1]]
        }
    }
}

/// A scalar field sampled on the midpoint grid, row-major (axis 0 slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    /// Constant field.
    pub fn constant(grid: Grid, value: f64) -> RealField {
        RealField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Field sampled from a function of the midpoint coordinates.
    /// The closure receives a slice of length `grid.dims()`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> RealField {
        let mut values = Vec::with_capacity(grid.len());
        match grid.dims() {
            1 => {
                for j in 0..grid.n(0) {
                    values.push(f(&[grid.coord(0, j)]));
                }
            }
            _ => {
                for j0 in 0..grid.n(0) {
                    let x0 = grid.coord(0, j0);
                    for j1 in 0..grid.n(1) {
                        values.push(f(&[x0, grid.coord(1, j1)]));
                    }
                }
            }
        }
        RealField { grid, values }
    }

    /// Wraps a raw value vector; the length must match the grid.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<RealField> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(RealField { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// New field with `f` applied to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// New field combining two fields pointwise. Panics on grid mismatch;
    /// use this only where grids agree by construction.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> RealField {
        assert_eq!(self.grid, other.grid, "zip_map requires matching grids");
        RealField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// In-place `self += a * other`.
    pub fn add_scaled(&mut self, other: &RealField, a: f64) {
        assert_eq!(self.grid, other.grid, "add_scaled requires matching grids");
        for (s, &o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }

    /// In-place multiplication by a scalar.
    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// True when every sample is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Minimum sample value.
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum sample value.
    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A vector field: one component per grid axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: Vec<RealField>,
}

impl VectorField {
    /// Assembles a vector field from per-axis components on a common grid.
    pub fn new(comps: Vec<RealField>) -> Result<VectorField> {
        let grid = *comps
            .first()
            .ok_or_else(|| Error::GridMismatch("vector field with no components".into()))?
            .grid();
        if comps.len() != grid.dims() {
            return Err(Error::GridMismatch(format!(
                "{} components for a {}-d grid",
                comps.len(),
                grid.dims()
            )));
        }
        if comps.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch(
                "vector components on different grids".into(),
            ));
        }
        Ok(VectorField { grid, comps })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Component along `axis`.
    pub fn component(&self, axis: usize) -> &RealField {
        &self.comps[axis]
    }

    pub fn components(&self) -> &[RealField] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [RealField] {
        &mut self.comps
    }

    /// Pointwise Euclidean magnitude `|v|`.
    pub fn magnitude(&self) -> RealField {
        let mut sq = self.comps[0].map(|v| v * v);
        for c in &self.comps[1..] {
            for (s, &v) in sq.values_mut().iter_mut().zip(c.values()) {
                *s += v * v;
            }
        }
        sq.map(f64::sqrt)
    }

    /// Pointwise scaling of every component by a scalar field.
    pub fn scale_pointwise(&self, w: &RealField) -> VectorField {
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .map(|c| c.zip_map(w, |a, b| a * b))
                .collect(),
        }
    }

    /// Pointwise linear combination `self - other`.
    pub fn sub(&self, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid, "sub requires matching grids");
        VectorField {
            grid: self.grid,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.zip_map(b, |x, y| x - y))
                .collect(),
        }
    }

    /// True when every component sample is finite.
    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(RealField::all_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new_1d(3, 1.0).is_err());
        assert!(Grid::new_1d(12, 1.0).is_err()); // not a power of two
        assert!(Grid::new_1d(16, 0.0).is_err());
        assert!(Grid::new_1d(16, f64::NAN).is_err());
        assert!(Grid::new(&[16, 16, 16][..], &[1.0, 1.0, 1.0]).is_err());
        assert!(Grid::new_1d(4, 1.0).is_ok());
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new_2d([4, 8], [2.0, 1.0]).unwrap();
        assert_eq!(g.len(), 32);
        assert_eq!(g.cell(0), 0.5);
        assert_eq!(g.cell(1), 0.125);
        assert_eq!(g.cell_volume(), 0.0625);
        assert_eq!(g.volume(), 2.0);
        assert_eq!(g.coord(0, 0), 0.25);
        assert_eq!(g.decompose(9), [1, 1]);
    }

    #[test]
    fn from_fn_row_major_layout() {
        let g = Grid::new_2d([4, 4], [1.0, 1.0]).unwrap();
        let f = RealField::from_fn(g, |x| x[0] * 10.0 + x[1]);
        // index (i0, i1) lives at flat i0*n1 + i1
        let v = f.values();
        assert_eq!(v[1], g.coord(0, 0) * 10.0 + g.coord(1, 1));
        assert_eq!(v[4], g.coord(0, 1) * 10.0 + g.coord(1, 0));
    }

    #[test]
    fn vector_field_requires_matching_grids() {
        let g = Grid::new_1d(8, 1.0).unwrap();
        let h = Grid::new_1d(8, 2.0).unwrap();
        let a = RealField::constant(g, 1.0);
        let b = RealField::constant(h, 1.0);
        assert!(VectorField::new(vec![a.clone()]).is_ok());
        assert!(VectorField::new(vec![b]).is_ok());
        let c = RealField::constant(g, 2.0);
        assert!(VectorField::new(vec![a, c]).is_err()); // 2 comps on 1-d grid
    }
}
