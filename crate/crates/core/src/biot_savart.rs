//! Velocity from vorticity. Horizontal directions use a free-space
//! convolution on a zero-padded grid with a spectrally accurate truncated
//! kernel; the vertical direction of 3D fields is treated as periodic.

use crate::error::{LabError, Result};
use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Grid2D, Grid3D, ScalarField2D, VectorField2D, VectorField3D};
use crate::special::{bessel_j0, bessel_j1, bessel_k};
use crate::weighted::TAIL_FRACTION_LIMIT;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BsMethod {
    FftFreeSpace,
    DirectQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsConfig {
    pub method: BsMethod,
    /// Padded size over grid size for the FFT convolution.
    pub padding: usize,
    /// Kernel truncation radius; `None` picks the box diagonal.
    pub cutoff: Option<f64>,
    /// Largest tolerated fraction of `|w|^2` in the outer frame.
    pub tail_limit: f64,
}

impl Default for BsConfig {
    fn default() -> Self {
        Self { method: BsMethod::FftFreeSpace, padding: 2, cutoff: None, tail_limit: TAIL_FRACTION_LIMIT }
    }
}

impl BsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.padding < 2 {
            return Err(LabError::param("padding", format!("must be at least 2, got {}", self.padding)));
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(LabError::param("cutoff", format!("must be positive, got {c}")));
            }
        }
        Ok(())
    }

    fn cutoff_for(&self, grid: &Grid2D) -> f64 {
        self.cutoff.unwrap_or(2.0 * 2f64.sqrt() * grid.radius())
    }
}

/// Transform of `-(1/2 pi) ln r` truncated at radius `l`.
fn laplace_hat(k: f64, l: f64) -> f64 {
    if k == 0.0 {
        l * l / 4.0 - l * l * l.ln() / 2.0
    } else {
        (1.0 - bessel_j0(k * l)) / (k * k) - l * l.ln() * bessel_j1(k * l) / k
    }
}

/// Transform of `K_0(a r)/(2 pi)` truncated at radius `l`.
fn screened_hat(k: f64, a: f64, l: f64, k0: f64, k1: f64) -> f64 {
    (1.0 + l * (k * bessel_j1(k * l) * k0 - a * bessel_j0(k * l) * k1)) / (k * k + a * a)
}

/// Builds, for each requested multiplier, the FFT (size `p`) of the
/// discrete convolution kernel whose continuous transform is
/// `mult(k1, k2) * green(|k|)`.
fn discrete_kernels(
    p: usize,
    h: f64,
    green: impl Fn(f64) -> f64,
    mults: &[&dyn Fn(f64, f64) -> Complex64],
) -> Vec<Vec<Complex64>> {
    let m = 2 * p;
    let km = wavenumbers(m, h);
    let mut ghat = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            ghat[i * m + j] = green(km[i].hypot(km[j]));
        }
    }
    let big = Fft2::new(m);
    let small = Fft2::new(p);
    let nyq = m / 2;
    mults
        .iter()
        .map(|mult| {
            let mut a: Vec<Complex64> = (0..m * m)
                .map(|idx| {
                    let (i, j) = (idx / m, idx % m);
                    if i == nyq || j == nyq {
                        Complex64::new(0.0, 0.0)
                    } else {
                        mult(km[i], km[j]) * ghat[idx]
                    }
                })
                .collect();
            big.inverse(&mut a);
            let mut b = vec![Complex64::new(0.0, 0.0); p * p];
            let half = p as isize / 2;
            for s1 in -half + 1..half {
                for s2 in -half + 1..half {
                    let src = (s1.rem_euclid(m as isize) as usize) * m + s2.rem_euclid(m as isize) as usize;
                    let dst = (s1.rem_euclid(p as isize) as usize) * p + s2.rem_euclid(p as isize) as usize;
                    b[dst] = Complex64::new(a[src].re, 0.0);
                }
            }
            small.forward(&mut b);
            b
        })
        .collect()
}

/// Fraction of `|a|^2` in the two outermost grid frames.
pub fn plain_tail_fraction(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let (mut outer, mut total) = (0.0, 0.0);
    for ((i, j), v) in a.indexed_iter() {
        let v2 = v * v;
        total += v2;
        if i.min(j).min(n - 1 - i).min(n - 1 - j) < 2 {
            outer += v2;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        outer / total
    }
}

/// 2D Biot-Savart solver bound to one grid; the kernel is precomputed.
#[derive(Debug, Clone)]
pub struct BiotSavart2D {
    grid: Grid2D,
    config: BsConfig,
    p: usize,
    fft: Fft2,
    /// FFT of `K_1 + i K_2`, so one inverse FFT yields `u_1 + i u_2`.
    kernel: Vec<Complex64>,
}

impl BiotSavart2D {
    pub fn new(grid: Grid2D, config: BsConfig) -> Result<Self> {
        config.validate()?;
        let n = grid.n();
        let p = config.padding * n;
        let l = config.cutoff_for(&grid);
        let kernel = if config.method == BsMethod::FftFreeSpace {
            let ks = discrete_kernels(
                p,
                grid.h(),
                |k| laplace_hat(k, l),
                &[&|_, k2| Complex64::new(0.0, k2), &|k1, _| Complex64::new(0.0, -k1)],
            );
            ks[0].iter().zip(&ks[1]).map(|(a, b)| a + Complex64::i() * b).collect()
        } else {
            Vec::new()
        };
        Ok(Self { grid, config, p, fft: Fft2::new(p), kernel })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn apply(&self, w: &ScalarField2D) -> Result<VectorField2D> {
        if !w.grid.same_as(&self.grid) {
            return Err(LabError::GridMismatch("Biot-Savart solver built for another grid".into()));
        }
        let plain = w.plain();
        let frac = plain_tail_fraction(&plain);
        if frac > self.config.tail_limit {
            return Err(LabError::TailMass { fraction: frac, limit: self.config.tail_limit });
        }
        Ok(match self.config.method {
            BsMethod::FftFreeSpace => self.apply_fft(&plain),
            BsMethod::DirectQuadrature => self.apply_direct(&plain),
        })
    }

    /// Convolution without the tail check, on plain samples.
    pub fn apply_fft(&self, plain: &Array2<f64>) -> VectorField2D {
        let (n, p) = (self.grid.n(), self.p);
        let mut buf = vec![Complex64::new(0.0, 0.0); p * p];
        for i in 0..n {
            for j in 0..n {
                buf[i * p + j] = Complex64::new(plain[[i, j]], 0.0);
            }
        }
        self.fft.forward(&mut buf);
        buf.iter_mut().zip(&self.kernel).for_each(|(b, k)| *b *= k);
        self.fft.inverse(&mut buf);
        let mut out = VectorField2D::zeros(self.grid);
        for i in 0..n {
            for j in 0..n {
                out.comps[0][[i, j]] = buf[i * p + j].re;
                out.comps[1][[i, j]] = buf[i * p + j].im;
            }
        }
        out
    }

    fn apply_direct(&self, plain: &Array2<f64>) -> VectorField2D {
        let n = self.grid.n();
        let c = self.grid.coords();
        let area = self.grid.cell_area();
        let cut2 = self.config.cutoff_for(&self.grid).powi(2);
        let mut out = VectorField2D::zeros(self.grid);
        for i in 0..n {
            for j in 0..n {
                let (mut u1, mut u2) = (0.0, 0.0);
                for a in 0..n {
                    for b in 0..n {
                        if a == i && b == j {
                            continue;
                        }
                        let (d1, d2) = (c[i] - c[a], c[j] - c[b]);
                        let r2 = d1 * d1 + d2 * d2;
                        if r2 > cut2 {
                            continue;
                        }
                        let f = plain[[a, b]] / r2;
                        u1 -= d2 * f;
                        u2 += d1 * f;
                    }
                }
                out.comps[0][[i, j]] = u1 * area / (2.0 * PI);
                out.comps[1][[i, j]] = u2 * area / (2.0 * PI);
            }
        }
        out
    }
}

/// Convenience wrapper building a default solver for one call.
pub fn bs2d(w: &ScalarField2D) -> Result<VectorField2D> {
    BiotSavart2D::new(w.grid, BsConfig::default())?.apply(w)
}

struct ModeKernels {
    k3: f64,
    /// Transforms of `G`, `d_1 G`, `d_2 G` (the latter two with `i k` factors).
    g: Vec<Complex64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
}

/// 3D solver: periodic in the vertical direction, free space horizontally.
pub struct BiotSavart3D {
    grid: Grid3D,
    config: BsConfig,
    p: usize,
    fft: Fft2,
    modes: Vec<ModeKernels>,
}

impl std::fmt::Debug for BiotSavart3D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BiotSavart3D({:?})", self.grid)
    }
}

impl BiotSavart3D {
    pub fn new(grid: Grid3D, config: BsConfig) -> Result<Self> {
        config.validate()?;
        if config.method != BsMethod::FftFreeSpace {
            return Err(LabError::param("method", "3D Biot-Savart supports only the FFT method"));
        }
        let hg = grid.horizontal();
        let n = hg.n();
        let p = config.padding * n;
        let l = config.cutoff_for(&hg);
        let k3s = wavenumbers(grid.n3(), grid.h3());
        let modes = (0..=grid.n3() / 2)
            .map(|idx| {
                let a = k3s[idx].abs();
                let mults: [&dyn Fn(f64, f64) -> Complex64; 3] = [
                    &|_, _| Complex64::new(1.0, 0.0),
                    &|k1, _| Complex64::new(0.0, k1),
                    &|_, k2| Complex64::new(0.0, k2),
                ];
                let ks = if a == 0.0 {
                    discrete_kernels(p, hg.h(), |k| laplace_hat(k, l), &mults)
                } else {
                    let (k0, k1) = (bessel_k(0.0, a * l), bessel_k(1.0, a * l));
                    discrete_kernels(p, hg.h(), |k| screened_hat(k, a, l, k0, k1), &mults)
                };
                let mut it = ks.into_iter();
                ModeKernels { k3: a, g: it.next().unwrap(), d1: it.next().unwrap(), d2: it.next().unwrap() }
            })
            .collect();
        Ok(Self { grid, config, p, fft: Fft2::new(p), modes })
    }

    pub fn grid(&self) -> Grid3D {
        self.grid
    }

    pub fn config(&self) -> BsConfig {
        self.config
    }

    /// Velocity `u` with `curl u = w`, `div u = 0`.
    pub fn apply(&self, w: &VectorField3D) -> Result<VectorField3D> {
        if !w.grid.same_as(&self.grid) {
            return Err(LabError::GridMismatch("Biot-Savart solver built for another grid".into()));
        }
        for comp in &w.comps {
            for k in 0..self.grid.n3() {
                let slice = comp.index_axis(ndarray::Axis(0), k).to_owned();
                let frac = plain_tail_fraction(&slice);
                if frac > self.config.tail_limit {
                    return Err(LabError::TailMass { fraction: frac, limit: self.config.tail_limit });
                }
            }
        }
        Ok(self.apply_unchecked(w))
    }

    pub fn apply_unchecked(&self, w: &VectorField3D) -> VectorField3D {
        let (n3, n, p) = (self.grid.n3(), self.grid.n(), self.p);
        let mut planner = FftPlanner::new();
        let fwd3 = planner.plan_fft_forward(n3);
        let inv3 = planner.plan_fft_inverse(n3);
        // Vertical transforms: spec[c][l][i*n+j].
        let mut spec: Vec<Vec<Vec<Complex64>>> = (0..3)
            .map(|c| {
                let mut s = vec![vec![Complex64::new(0.0, 0.0); n * n]; n3];
                let mut col = vec![Complex64::new(0.0, 0.0); n3];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n3 {
                            col[k] = Complex64::new(w.comps[c][[k, i, j]], 0.0);
                        }
                        fwd3.process(&mut col);
                        for k in 0..n3 {
                            s[k][i * n + j] = col[k];
                        }
                    }
                }
                s
            })
            .collect();
        let zero = Complex64::new(0.0, 0.0);
        let i_unit = Complex64::i();
        let mut bufs = vec![vec![zero; p * p]; 3];
        for (l, mode) in self.modes.iter().enumerate() {
            if n3 % 2 == 0 && l == n3 / 2 {
                for c in 0..3 {
                    spec[c][l].iter_mut().for_each(|v| *v = zero);
                }
                continue;
            }
            for c in 0..3 {
                bufs[c].iter_mut().for_each(|v| *v = zero);
                for i in 0..n {
                    for j in 0..n {
                        bufs[c][i * p + j] = spec[c][l][i * n + j];
                    }
                }
                self.fft.forward(&mut bufs[c]);
            }
            let k3 = mode.k3;
            for idx in 0..p * p {
                let (w1, w2, w3) = (bufs[0][idx], bufs[1][idx], bufs[2][idx]);
                let g = mode.g[idx];
                let (d1, d2) = (mode.d1[idx], mode.d2[idx]);
                bufs[0][idx] = d2 * w3 - i_unit * k3 * g * w2;
                bufs[1][idx] = i_unit * k3 * g * w1 - d1 * w3;
                bufs[2][idx] = d1 * w2 - d2 * w1;
            }
            for c in 0..3 {
                self.fft.inverse(&mut bufs[c]);
                for i in 0..n {
                    for j in 0..n {
                        spec[c][l][i * n + j] = bufs[c][i * p + j];
                    }
                }
            }
        }
        let mut out = VectorField3D::zeros(self.grid);
        let mut col = vec![zero; n3];
        for c in 0..3 {
            for i in 0..n {
                for j in 0..n {
                    for l in 0..=n3 / 2 {
                        col[l] = spec[c][l][i * n + j];
                    }
                    for l in 1..n3.div_ceil(2) {
                        col[n3 - l] = col[l].conj();
                    }
                    inv3.process(&mut col);
                    for k in 0..n3 {
                        out.comps[c][[k, i, j]] = col[k].re / n3 as f64;
                    }
                }
            }
        }
        out
    }
}

/// Convenience wrapper building a default 3D solver for one call.
pub fn bs3d(w: &VectorField3D) -> Result<VectorField3D> {
    BiotSavart3D::new(w.grid, BsConfig::default())?.apply(w)
}

/// Spectral derivative along a horizontal axis (1 or 2) of a decaying 2D array.
pub fn spectral_derivative_2d(grid: &Grid2D, a: &Array2<f64>, axis: usize) -> Array2<f64> {
    let n = grid.n();
    let fft = Fft2::new(n);
    let k = wavenumbers(n, grid.h());
    let mut buf: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for i in 0..n {
        for j in 0..n {
            let kk = if axis == 1 { k[i] } else { k[j] };
            let kk = if (axis == 1 && i == n / 2) || (axis == 2 && j == n / 2) { 0.0 } else { kk };
            buf[i * n + j] *= Complex64::new(0.0, kk);
        }
    }
    fft.inverse(&mut buf);
    Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].re)
}

/// Divergence of the horizontal velocity by 4th-order differences,
/// largest magnitude over nodes at least `band` cells from the edge.
pub fn divergence_2d_fd(u: &VectorField2D, band: usize) -> f64 {
    let n = u.grid.n();
    let h = u.grid.h();
    let d = |a: &Array2<f64>, i: usize, j: usize, ax: usize| {
        let at = |s: isize| {
            if ax == 1 {
                a[[(i as isize + s) as usize, j]]
            } else {
                a[[i, (j as isize + s) as usize]]
            }
        };
        (at(-2) - at(2) + 8.0 * (at(1) - at(-1))) / (12.0 * h)
    };
    let mut m: f64 = 0.0;
    for i in band.max(2)..n - band.max(2) {
        for j in band.max(2)..n - band.max(2) {
            m = m.max((d(&u.comps[0], i, j, 1) + d(&u.comps[1], i, j, 2)).abs());
        }
    }
    m
}

/// 3D array helper for tests and diagnostics: vertical spectral derivative.
pub fn spectral_derivative_vertical(grid: &Grid3D, a: &Array3<f64>) -> Array3<f64> {
    let (n3, n) = (grid.n3(), grid.n());
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n3);
    let inv = planner.plan_fft_inverse(n3);
    let k = wavenumbers(n3, grid.h3());
    let mut out = Array3::zeros(a.dim());
    let mut col = vec![Complex64::new(0.0, 0.0); n3];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n3 {
                col[l] = Complex64::new(a[[l, i, j]], 0.0);
            }
            fwd.process(&mut col);
            for l in 0..n3 {
                let kk = if l == n3 / 2 { 0.0 } else { k[l] };
                col[l] *= Complex64::new(0.0, kk);
            }
            inv.process(&mut col);
            for l in 0..n3 {
                out[[l, i, j]] = col[l].re / n3 as f64;
            }
        }
    }
    out
}
