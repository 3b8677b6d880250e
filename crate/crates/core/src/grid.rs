//! Uniform tensor grids and the sampled fields living on them.
//!
//! Horizontal nodes are `-R + i h` for `i = 0..n` with `h = 2R/n`, so the
//! origin is node `n/2` and the layout is periodic-friendly for FFTs.
//! 3D arrays are indexed `[i3, i1, i2]`: each vertical slice is contiguous.

use crate::error::{LabError, Result};
use ndarray::{Array2, Array3, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    n: usize,
    radius: f64,
}

impl Grid2D {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        check_points("n", n)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(LabError::param("radius", format!("must be positive, got {radius}")));
        }
        Ok(Self { n, radius })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn h(&self) -> f64 {
        2.0 * self.radius / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.h()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        self.h() * self.h()
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
        let c = self.coords();
        Array2::from_shape_fn((self.n, self.n), |(i, j)| f(c[i], c[j]))
    }

    /// Trapezoid (equivalently rectangle, for decayed integrands) rule.
    pub fn integrate(&self, a: &ArrayView2<f64>) -> f64 {
        a.sum() * self.cell_area()
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self.n == other.n && self.radius == other.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3D {
    horizontal: Grid2D,
    n3: usize,
    half_height: f64,
}

impl Grid3D {
    pub fn new(n: usize, radius: f64, n3: usize, half_height: f64) -> Result<Self> {
        let horizontal = Grid2D::new(n, radius)?;
        check_points("n3", n3)?;
        if !(half_height.is_finite() && half_height > 0.0) {
            return Err(LabError::param("half_height", format!("must be positive, got {half_height}")));
        }
        Ok(Self { horizontal, n3, half_height })
    }

    pub fn horizontal(&self) -> Grid2D {
        self.horizontal
    }

    pub fn n(&self) -> usize {
        self.horizontal.n
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn h3(&self) -> f64 {
        2.0 * self.half_height / self.n3 as f64
    }

    pub fn coord3(&self, k: usize) -> f64 {
        -self.half_height + k as f64 * self.h3()
    }

    pub fn coords3(&self) -> Vec<f64> {
        (0..self.n3).map(|k| self.coord3(k)).collect()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n3, self.n(), self.n())
    }

    pub fn sample(&self, f: impl Fn(f64, f64, f64) -> f64) -> Array3<f64> {
        let c = self.horizontal.coords();
        let c3 = self.coords3();
        Array3::from_shape_fn(self.shape(), |(k, i, j)| f(c[i], c[j], c3[k]))
    }

    pub fn same_as(&self, other: &Grid3D) -> bool {
        self.horizontal.same_as(&other.horizontal)
            && self.n3 == other.n3
            && self.half_height == other.half_height
    }
}

fn check_points(name: &'static str, n: usize) -> Result<()> {
    if n < 8 || n % 2 != 0 {
        return Err(LabError::param(name, format!("points per axis must be even and at least 8, got {n}")));
    }
    Ok(())
}

/// Scalar samples on a 2D grid. With `weighted_repr` the samples hold
/// `exp(|xi|^2/8) * value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid2D,
    pub data: Array2<f64>,
    pub weighted_repr: bool,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, data: Array2<f64>) -> Result<Self> {
        if data.dim() != (grid.n(), grid.n()) {
            return Err(LabError::GridMismatch(format!(
                "array shape {:?} does not match n = {}",
                data.dim(),
                grid.n()
            )));
        }
        Ok(Self { grid, data, weighted_repr: false })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, data: Array2::zeros((grid.n(), grid.n())), weighted_repr: false }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { grid, data: grid.sample(f), weighted_repr: false }
    }

    /// Samples in the Gaussian-weighted representation.
    pub fn from_fn_weighted(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = grid.sample(|x, y| (0.125 * (x * x + y * y)).exp() * f(x, y));
        Self { grid, data, weighted_repr: true }
    }

    /// Plain samples, undoing the weighted representation if present.
    pub fn plain(&self) -> Array2<f64> {
        if !self.weighted_repr {
            return self.data.clone();
        }
        let c = self.grid.coords();
        let mut out = self.data.clone();
        out.indexed_iter_mut()
            .for_each(|((i, j), v)| *v *= (-0.125 * (c[i] * c[i] + c[j] * c[j])).exp());
        out
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.plain().view())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.plain().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { data: &self.data * a, ..self.clone() }
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField2D) -> Result<()> {
        self.check_compatible(other)?;
        Zip::from(&mut self.data).and(&other.data).for_each(|x, &y| *x += a * y);
        Ok(())
    }

    fn check_compatible(&self, other: &ScalarField2D) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.weighted_repr != other.weighted_repr {
            return Err(LabError::GridMismatch("scalar fields on different grids or representations".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2D {
    pub grid: Grid2D,
    pub comps: [Array2<f64>; 2],
}

impl VectorField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        let z = Array2::zeros((grid.n(), grid.n()));
        Self { grid, comps: [z.clone(), z] }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest pointwise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        let mut m: f64 = 0.0;
        Zip::from(&self.comps[0])
            .and(&self.comps[1])
            .for_each(|a, b| m = m.max(a.hypot(*b)));
        m
    }
}

/// Scalar samples on a 3D grid, indexed `[i3, i1, i2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3D {
    pub grid: Grid3D,
    pub data: Array3<f64>,
}

impl ScalarField3D {
    pub fn from_fn(grid: Grid3D, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        Self { grid, data: grid.sample(f) }
    }

    pub fn slice(&self, k: usize) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid.horizontal(),
            data: self.data.index_axis(Axis(0), k).to_owned(),
            weighted_repr: false,
        }
    }
}

/// Vector samples on a 3D grid, each component indexed `[i3, i1, i2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3D {
    pub grid: Grid3D,
    pub comps: [Array3<f64>; 3],
    pub weighted_repr: bool,
}

impl VectorField3D {
    pub fn zeros(grid: Grid3D) -> Self {
        let z = Array3::zeros(grid.shape());
        Self { grid, comps: [z.clone(), z.clone(), z], weighted_repr: false }
    }

    pub fn from_fn(grid: Grid3D, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let c = grid.horizontal().coords();
        let c3 = grid.coords3();
        let mut out = Self::zeros(grid);
        for k in 0..grid.n3() {
            for i in 0..grid.n() {
                for j in 0..grid.n() {
                    let v = f(c[i], c[j], c3[k]);
                    for (a, comp) in out.comps.iter_mut().enumerate() {
                        comp[[k, i, j]] = v[a];
                    }
                }
            }
        }
        out
    }

    pub fn component_slice(&self, comp: usize, k: usize) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid.horizontal(),
            data: self.comps[comp].index_axis(Axis(0), k).to_owned(),
            weighted_repr: self.weighted_repr,
        }
    }

    pub fn component(&self, comp: usize) -> ScalarField3D {
        ScalarField3D { grid: self.grid, data: self.comps[comp].clone() }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            comps: [&self.comps[0] * a, &self.comps[1] * a, &self.comps[2] * a],
            weighted_repr: self.weighted_repr,
        }
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField3D) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(LabError::GridMismatch("vector fields on different grids".into()));
        }
        for c in 0..3 {
            Zip::from(&mut self.comps[c]).and(&other.comps[c]).for_each(|x, &y| *x += a * y);
        }
        Ok(())
    }

    pub fn sub(&self, other: &VectorField3D) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_a_node() {
        let g = Grid2D::new(16, 4.0).unwrap();
        assert_eq!(g.coord(8), 0.0);
        assert_eq!(g.h(), 0.5);
    }

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(Grid2D::new(6, 1.0).is_err());
        assert!(Grid2D::new(9, 1.0).is_err());
        assert!(Grid2D::new(8, 0.0).is_err());
        assert!(Grid3D::new(8, 1.0, 4, 1.0).is_err());
    }

    #[test]
    fn weighted_repr_round_trip() {
        let g = Grid2D::new(32, 6.0).unwrap();
        let f = |x: f64, y: f64| (-(x * x + y * y) / 4.0).exp();
        let plain = ScalarField2D::from_fn(g, f);
        let weighted = ScalarField2D::from_fn_weighted(g, f);
        let diff = (&plain.data - &weighted.plain()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-15);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = Grid2D::new(16, 4.0).unwrap();
        assert!(ScalarField2D::new(g, Array2::zeros((8, 8))).is_err());
    }
}
