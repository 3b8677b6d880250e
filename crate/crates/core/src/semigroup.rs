//! Closed-form semigroups of the horizontal operator
//! `L_h = Lap' + xi'/2 . grad' + 1` and the vertical operator
//! `L_3 = d3^2 - chi xi3 d3`.

use crate::biot_savart::plain_tail_fraction;
use crate::error::{LabError, Result};
use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Grid2D, ScalarField2D};
use crate::interp::{dilate_2d, lagrange_weights, Axis1, BICUBIC};
use crate::weighted::TAIL_FRACTION_LIMIT;
use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use std::f64::consts::PI;

/// `a(t) = 1 - e^{-t}` without cancellation at small `t`.
pub fn a_of(t: f64) -> f64 {
    -(-t).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    tau: f64,
    chi: f64,
    a: f64,
}

impl KernelParams {
    pub fn new(tau: f64, chi: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(LabError::param("tau", format!("must be nonnegative, got {tau}")));
        }
        if !(chi.is_finite() && chi > 1.0) {
            return Err(LabError::param("chi", format!("must exceed 1, got {chi}")));
        }
        Ok(Self { tau, chi, a: a_of(tau) })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `a(2 chi tau)`, the variance factor of the vertical kernel.
    pub fn vertical_a(&self) -> f64 {
        a_of(2.0 * self.chi * self.tau)
    }
}

/// Interpolation points per axis for the dilation step. The bicubic stencil
/// stalls around `1e-8` on the fixed point `g`; sixteen points keep both
/// the fixed point and the first moments at roundoff over hundreds of steps
/// on grids as coarse as `h = 0.25`.
pub const DILATION_POINTS: usize = 16;

/// `e^{tau L_h}` on one grid: dilate, convolve with the heat kernel, scale.
#[derive(Debug, Clone)]
pub struct LhSemigroup {
    grid: Grid2D,
    fft: Fft2,
    ksq: Vec<f64>,
    points: usize,
}

impl LhSemigroup {
    pub fn new(grid: Grid2D, points: usize) -> Result<Self> {
        if points < 2 || points % 2 != 0 {
            return Err(LabError::param("points", format!("must be even and at least 2, got {points}")));
        }
        let n = grid.n();
        let k = wavenumbers(n, grid.h());
        let ksq = (0..n * n).map(|idx| k[idx / n].powi(2) + k[idx % n].powi(2)).collect();
        Ok(Self { grid, fft: Fft2::new(n), ksq, points })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    /// Largest `tau` before the dilated samples crowd into a few cells.
    pub fn max_tau(&self) -> f64 {
        2.0 * (self.grid.radius() / (10.0 * self.grid.h())).ln()
    }

    pub fn apply(&self, f: &ScalarField2D, tau: f64) -> Result<ScalarField2D> {
        if !f.grid.same_as(&self.grid) {
            return Err(LabError::GridMismatch("semigroup built for another grid".into()));
        }
        let plain = f.plain();
        let frac = plain_tail_fraction(&plain);
        if frac > TAIL_FRACTION_LIMIT {
            return Err(LabError::TailMass { fraction: frac, limit: TAIL_FRACTION_LIMIT });
        }
        ScalarField2D::new(self.grid, self.apply_plain(&plain, tau)?)
    }

    /// Same as [`apply`](Self::apply) on plain samples, skipping the tail check.
    pub fn apply_plain(&self, a: &Array2<f64>, tau: f64) -> Result<Array2<f64>> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(LabError::param("tau", format!("must be nonnegative, got {tau}")));
        }
        if tau > self.max_tau() {
            return Err(LabError::Resolution(format!(
                "dilation factor e^(tau/2) = {:.3} exceeds R/(10h) = {:.3}",
                (tau / 2.0).exp(),
                self.grid.radius() / (10.0 * self.grid.h())
            )));
        }
        if tau == 0.0 {
            return Ok(a.clone());
        }
        let n = self.grid.n();
        let axis = Axis1::new(-self.grid.radius(), self.grid.h(), n);
        let dilated = dilate_2d(&axis, a, (tau / 2.0).exp(), self.points);
        let mut buf: Vec<Complex64> = dilated.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let at = a_of(tau);
        let scale = tau.exp();
        buf.iter_mut().zip(&self.ksq).for_each(|(b, k2)| *b *= scale * (-at * k2).exp());
        self.fft.inverse(&mut buf);
        Ok(Array2::from_shape_fn((n, n), |(i, j)| buf[i * n + j].re))
    }
}

pub fn apply_lh_semigroup(f: &ScalarField2D, tau: f64) -> Result<ScalarField2D> {
    LhSemigroup::new(f.grid, DILATION_POINTS)?.apply(f, tau)
}

/// Quadrature nodes per side of the vertical kernel's support.
const KERNEL_HALF_NODES: usize = 64;
/// Kernel support in standard deviations.
const KERNEL_SPAN: f64 = 8.0;

/// Adds `w * f(x)` to `row`, with `f` the cubic interpolant of the
/// samples on `axis` extended by constants.
fn scatter_constant(axis: &Axis1, row: &mut [f64], x: f64, w: f64) {
    let n = axis.n;
    if x <= axis.x0 {
        row[0] += w;
        return;
    }
    if x >= axis.last() {
        row[n - 1] += w;
        return;
    }
    let u = (x - axis.x0) / axis.h;
    let start = u.floor() as isize - (BICUBIC as isize / 2 - 1);
    for (k, lk) in lagrange_weights(u - start as f64, BICUBIC).into_iter().enumerate() {
        let idx = (start + k as isize).clamp(0, n as isize - 1) as usize;
        row[idx] += w * lk;
    }
}

/// Matrix of a Gaussian average `int N(center, sigma^2)(y) f(y) dy` for
/// every output node, built by trapezoid quadrature on `+-8 sigma`.
fn gaussian_average_matrix(axis: &Axis1, centers: &[f64], sigma: f64, warp: impl Fn(f64) -> f64) -> Array2<f64> {
    let n = axis.n;
    let q = KERNEL_HALF_NODES as isize;
    let dy = KERNEL_SPAN * sigma / q as f64;
    let norm = dy / ((2.0 * PI).sqrt() * sigma);
    let mut m = Array2::zeros((centers.len(), n));
    for (r, &c) in centers.iter().enumerate() {
        let row = m.row_mut(r).into_slice().expect("standard layout");
        for s in -q..=q {
            let y = s as f64 * dy;
            let w = norm * (-0.5 * (y / sigma).powi(2)).exp();
            scatter_constant(axis, row, warp(c + y), w);
        }
    }
    m
}

/// `e^{tau L_3}` as a dense matrix on uniform samples with constant extension.
#[derive(Debug, Clone)]
pub struct L3Kernel {
    matrix: Array2<f64>,
}

impl L3Kernel {
    pub fn new(axis: Axis1, params: KernelParams) -> Self {
        let n = axis.n;
        if params.tau() == 0.0 {
            return Self { matrix: Array2::eye(n) };
        }
        let contraction = (-params.chi() * params.tau()).exp();
        let sigma = (params.vertical_a() / params.chi()).sqrt();
        let centers: Vec<f64> = (0..n).map(|i| contraction * (axis.x0 + i as f64 * axis.h)).collect();
        Self { matrix: gaussian_average_matrix(&axis, &centers, sigma, |y| y) }
    }

    /// The unrewritten form: heat kernel in `xi3` acting on `f(eta e^{-chi tau})`.
    pub fn original_form(axis: Axis1, params: KernelParams) -> Self {
        let n = axis.n;
        if params.tau() == 0.0 {
            return Self { matrix: Array2::eye(n) };
        }
        let (chi, tau) = (params.chi(), params.tau());
        let sigma = ((2.0 * chi * tau).exp_m1() / chi).sqrt();
        let contraction = (-chi * tau).exp();
        let centers: Vec<f64> = (0..n).map(|i| axis.x0 + i as f64 * axis.h).collect();
        Self { matrix: gaussian_average_matrix(&axis, &centers, sigma, |y| y * contraction) }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.dot(&ndarray::ArrayView1::from(f)).to_vec()
    }

    /// Applies the kernel along axis 0 of a `[i3, i1, i2]` array.
    pub fn apply_vertical(&self, a: &Array3<f64>) -> Array3<f64> {
        let (n3, n1, n2) = a.dim();
        let flat = a.view().into_shape_with_order((n3, n1 * n2)).expect("contiguous");
        self.matrix.dot(&flat).into_shape_with_order((n3, n1, n2)).expect("shape preserved")
    }
}

pub fn apply_l3_semigroup(f: &[f64], axis: Axis1, tau: f64, chi: f64) -> Result<Vec<f64>> {
    if f.len() != axis.n {
        return Err(LabError::GridMismatch(format!("{} samples on {} nodes", f.len(), axis.n)));
    }
    Ok(L3Kernel::new(axis, KernelParams::new(tau, chi)?).apply(f))
}

/// `(chi/2pi)^{1/2} int e^{-chi eta^2/2} f(eta) d eta`, the large-`tau` limit.
pub fn l3_longtime_limit(f: &[f64], axis: Axis1, chi: f64) -> Result<f64> {
    if f.len() != axis.n {
        return Err(LabError::GridMismatch(format!("{} samples on {} nodes", f.len(), axis.n)));
    }
    if !(chi.is_finite() && chi > 1.0) {
        return Err(LabError::param("chi", format!("must exceed 1, got {chi}")));
    }
    let m = gaussian_average_matrix(&axis, &[0.0], chi.powf(-0.5), |y| y);
    Ok(m.row(0).iter().zip(f).map(|(a, b)| a * b).sum())
}

/// Applies `e^{tau L_3}` to every vertical column of a `[i3, i1, i2]` array.
pub fn apply_l3_columns(a: &Array3<f64>, axis: Axis1, params: KernelParams) -> Array3<f64> {
    debug_assert_eq!(a.len_of(Axis(0)), axis.n);
    L3Kernel::new(axis, params).apply_vertical(a)
}
