//! Pseudo-spectral derivatives on the computational grids: horizontal
//! derivatives treat slices as periodic on `[-R, R)^2`, vertical ones treat
//! columns as periodic on `[-Z, Z)`. Fields are expected to decay (or be
//! periodic-smooth) across the box edges.

use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Grid2D, Grid3D};
use ndarray::{Array2, Array3, ArrayView2, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// `d/dxi_1`, `d/dxi_2` and the Laplacian of one slice.
#[derive(Debug, Clone)]
pub struct HorizontalDerivs {
    pub d1: Array2<f64>,
    pub d2: Array2<f64>,
    pub lap: Array2<f64>,
}

#[derive(Clone)]
pub struct SpectralOps2D {
    n: usize,
    fft: Fft2,
    k: Vec<f64>,
}

impl std::fmt::Debug for SpectralOps2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpectralOps2D({})", self.n)
    }
}

impl SpectralOps2D {
    pub fn new(grid: &Grid2D) -> Self {
        let n = grid.n();
        let mut k = wavenumbers(n, grid.h());
        // Nyquist mode: its odd derivative is not real-valued; zero it.
        let kn = k[n / 2];
        k[n / 2] = 0.0;
        let mut ops = Self { n, fft: Fft2::new(n), k };
        ops.k.push(kn);
        ops
    }

    fn k2(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            self.k[self.n] * self.k[self.n]
        } else {
            self.k[i] * self.k[i]
        }
    }

    fn inverse_with(&self, hat: &[Complex64], m: impl Fn(usize, usize) -> Complex64) -> Array2<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = (0..n * n).map(|idx| hat[idx] * m(idx / n, idx % n)).collect();
        self.fft.inverse(&mut buf);
        Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].re)
    }

    fn forward(&self, a: &ArrayView2<f64>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        buf
    }

    pub fn derivs(&self, a: &ArrayView2<f64>) -> HorizontalDerivs {
        let hat = self.forward(a);
        let k = &self.k;
        HorizontalDerivs {
            d1: self.inverse_with(&hat, |i, _| Complex64::new(0.0, k[i])),
            d2: self.inverse_with(&hat, |_, j| Complex64::new(0.0, k[j])),
            lap: self.inverse_with(&hat, |i, j| Complex64::new(-(self.k2(i) + self.k2(j)), 0.0)),
        }
    }

    pub fn gradient(&self, a: &ArrayView2<f64>) -> [Array2<f64>; 2] {
        let hat = self.forward(a);
        let k = &self.k;
        [
            self.inverse_with(&hat, |i, _| Complex64::new(0.0, k[i])),
            self.inverse_with(&hat, |_, j| Complex64::new(0.0, k[j])),
        ]
    }
}

#[derive(Clone)]
pub struct SpectralOps3D {
    grid: Grid3D,
    horizontal: SpectralOps2D,
    fwd3: Arc<dyn Fft<f64>>,
    inv3: Arc<dyn Fft<f64>>,
    k3: Vec<f64>,
}

impl std::fmt::Debug for SpectralOps3D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpectralOps3D({:?})", self.grid)
    }
}

impl SpectralOps3D {
    pub fn new(grid: &Grid3D) -> Self {
        let mut planner = FftPlanner::new();
        let n3 = grid.n3();
        Self {
            grid: *grid,
            horizontal: SpectralOps2D::new(&grid.horizontal()),
            fwd3: planner.plan_fft_forward(n3),
            inv3: planner.plan_fft_inverse(n3),
            k3: wavenumbers(n3, grid.h3()),
        }
    }

    pub fn grid(&self) -> Grid3D {
        self.grid
    }

    pub fn horizontal(&self) -> &SpectralOps2D {
        &self.horizontal
    }

    /// Slice-wise horizontal derivatives `(d1, d2, lap)`.
    pub fn horizontal_derivs(&self, a: &Array3<f64>) -> [Array3<f64>; 3] {
        let mut out = [Array3::zeros(a.dim()), Array3::zeros(a.dim()), Array3::zeros(a.dim())];
        for (k, slice) in a.axis_iter(Axis(0)).enumerate() {
            let d = self.horizontal.derivs(&slice);
            out[0].index_axis_mut(Axis(0), k).assign(&d.d1);
            out[1].index_axis_mut(Axis(0), k).assign(&d.d2);
            out[2].index_axis_mut(Axis(0), k).assign(&d.lap);
        }
        out
    }

    pub fn horizontal_gradient(&self, a: &Array3<f64>) -> [Array3<f64>; 2] {
        let mut out = [Array3::zeros(a.dim()), Array3::zeros(a.dim())];
        for (k, slice) in a.axis_iter(Axis(0)).enumerate() {
            let [d1, d2] = self.horizontal.gradient(&slice);
            out[0].index_axis_mut(Axis(0), k).assign(&d1);
            out[1].index_axis_mut(Axis(0), k).assign(&d2);
        }
        out
    }

    /// First and second vertical derivatives.
    pub fn vertical_derivs(&self, a: &Array3<f64>) -> [Array3<f64>; 2] {
        let (n3, n, _) = a.dim();
        let mut d1 = Array3::zeros(a.dim());
        let mut d2 = Array3::zeros(a.dim());
        let mut col = vec![Complex64::new(0.0, 0.0); n3];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n3];
        let s = 1.0 / n3 as f64;
        for i in 0..n {
            for j in 0..n {
                for l in 0..n3 {
                    col[l] = Complex64::new(a[[l, i, j]], 0.0);
                }
                self.fwd3.process(&mut col);
                for l in 0..n3 {
                    let kk = if l == n3 / 2 { 0.0 } else { self.k3[l] };
                    tmp[l] = col[l] * Complex64::new(0.0, kk);
                }
                self.inv3.process(&mut tmp);
                for l in 0..n3 {
                    d1[[l, i, j]] = tmp[l].re * s;
                    tmp[l] = col[l] * (-self.k3[l] * self.k3[l]);
                }
                self.inv3.process(&mut tmp);
                for l in 0..n3 {
                    d2[[l, i, j]] = tmp[l].re * s;
                }
            }
        }
        [d1, d2]
    }

    pub fn vertical_derivative(&self, a: &Array3<f64>) -> Array3<f64> {
        let [d1, _] = self.vertical_derivs(a);
        d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_a_gaussian() {
        let grid = Grid3D::new(64, 10.0, 32, 8.0).unwrap();
        let ops = SpectralOps3D::new(&grid);
        let f = grid.sample(|x, y, z| (-(x * x + y * y) / 4.0).exp() * (std::f64::consts::PI * z / 8.0).sin());
        let [d1, _, lap] = ops.horizontal_derivs(&f);
        let [dz, dzz] = ops.vertical_derivs(&f);
        let w = std::f64::consts::PI / 8.0;
        let e1 = grid.sample(|x, y, z| -x / 2.0 * (-(x * x + y * y) / 4.0).exp() * (w * z).sin());
        let el = grid.sample(|x, y, z| ((x * x + y * y) / 4.0 - 1.0) * (-(x * x + y * y) / 4.0).exp() * (w * z).sin());
        let ez = grid.sample(|x, y, z| w * (-(x * x + y * y) / 4.0).exp() * (w * z).cos());
        let ezz = &f * (-w * w);
        for (a, b) in [(d1, e1), (lap, el), (dz, ez), (dzz, ezz)] {
            assert!((&a - &b).iter().all(|v| v.abs() < 1e-9));
        }
    }
}
