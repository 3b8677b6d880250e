//! Time stepping of the planar scalar equation and of the full perturbation
//! system in self-similar variables, decay-rate fits and extraction of the
//! secondary profile `sum_i (lambda_i + d_i) d_i G`.
//!
//! Both integrators use Strang splitting: the drift-diffusion part is
//! advanced exactly by the closed-form kernels, everything else by RK4 with
//! the velocity refreshed at each stage.

use crate::biot_savart::{plain_tail_fraction, BiotSavart2D, BiotSavart3D, BsConfig};
use crate::error::{LabError, Result};
use crate::fd::d1_full;
use crate::fields::{eval_g, grad_g};
use crate::fft::{wavenumbers, Fft2};
use crate::grid::{Grid2D, Grid3D, ScalarField2D, VectorField2D, VectorField3D};
use crate::interp::Axis1;
use crate::operators::{lambda_from_parts, theta_moments, Profile};
use crate::params::StrainParams;
use crate::selfsim::{beta_at_tau, from_selfsim_time};
use crate::semigroup::{KernelParams, L3Kernel, LhSemigroup, DILATION_POINTS};
use crate::spectral::{SpectralOps2D, SpectralOps3D};
use crate::weighted::{moments_of, norm_xbb_unchecked, rho_m, project_zero_mean, WeightExponent, TAIL_FRACTION_LIMIT};
use log::warn;
use ndarray::{Array2, Array3, Axis, Zip};
use num_complex::Complex64;
use nalgebra::DMatrix;
use serde::Serialize;

/// RK4 stability limit on `dt * speed * k_max`.
const CFL_LIMIT: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Nonlinearity {
    Off,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub dt: f64,
    pub tau_end: f64,
    /// Steps between history records.
    pub record_every: usize,
    pub weight: WeightExponent,
    /// Abort once the norm exceeds this multiple of its initial value.
    pub blowup_factor: f64,
}

impl StepControl {
    pub fn new(dt: f64, tau_end: f64, weight: WeightExponent) -> Result<Self> {
        let c = Self { dt, tau_end, record_every: 1, weight, blowup_factor: 1e3 };
        c.validate()?;
        Ok(c)
    }

    pub fn every(mut self, steps: usize) -> Self {
        self.record_every = steps.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(LabError::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.tau_end.is_finite() && self.tau_end >= 0.0) {
            return Err(LabError::param("tau_end", format!("must be nonnegative, got {}", self.tau_end)));
        }
        if self.weight.is_gaussian() {
            return Err(LabError::param("m", "dynamics run in L^2(m) with finite m"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.tau_end / self.dt).round() as usize
    }
}

/// Weighted horizontal `L^2(m)` norm of plain samples.
struct WeightTable {
    rho: Array2<f64>,
    da: f64,
}

impl WeightTable {
    fn new(grid: &Grid2D, m: WeightExponent) -> Self {
        let rho = grid.sample(|x, y| rho_m(x * x + y * y, m));
        Self { rho, da: grid.cell_area() }
    }

    fn norm2(&self, a: &ndarray::ArrayView2<f64>) -> f64 {
        Zip::from(a).and(&self.rho).fold(0.0, |s, &v, &r| s + v * v * r) * self.da
    }

    fn norm(&self, a: &ndarray::ArrayView2<f64>) -> f64 {
        self.norm2(a).sqrt()
    }
}

fn max_abs2(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------- 2D

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record2D {
    pub tau: f64,
    pub norm: f64,
    pub grad_norm: f64,
    pub mass: f64,
    pub first_moments: [f64; 2],
    /// `e^{tau/2} theta_i`, the coefficients of `d_i g` in the rescaled limit.
    pub p1: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct EvolutionState2D {
    pub w: ScalarField2D,
    pub tau: f64,
    pub history: Vec<Record2D>,
}

/// One Strang step of `w_tau = L_h w - alpha(U^G . grad w + v . grad g) - v . grad w`.
pub struct Stepper2D {
    grid: Grid2D,
    alpha: f64,
    nonlinear: Nonlinearity,
    lh: LhSemigroup,
    bs: BiotSavart2D,
    ops: SpectralOps2D,
    ug: [Array2<f64>; 2],
    grad_g: [Array2<f64>; 2],
}

impl std::fmt::Debug for Stepper2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Stepper2D(alpha = {}, {:?})", self.alpha, self.nonlinear)
    }
}

impl Stepper2D {
    pub fn new(grid: Grid2D, alpha: f64, nonlinear: Nonlinearity) -> Result<Self> {
        Ok(Self {
            grid,
            alpha,
            nonlinear,
            lh: LhSemigroup::new(grid, DILATION_POINTS)?,
            bs: BiotSavart2D::new(grid, BsConfig::default())?,
            ops: SpectralOps2D::new(&grid),
            ug: [grid.sample(|x, y| crate::fields::eval_ug(x, y)[0]), grid.sample(|x, y| crate::fields::eval_ug(x, y)[1])],
            grad_g: [grid.sample(|x, y| grad_g(x, y)[0]), grid.sample(|x, y| grad_g(x, y)[1])],
        })
    }

    pub fn velocity(&self, w: &Array2<f64>) -> VectorField2D {
        self.bs.apply_fft(w)
    }

    pub fn rhs(&self, w: &Array2<f64>) -> Array2<f64> {
        let v = self.bs.apply_fft(w);
        let [d1, d2] = self.ops.gradient(&w.view());
        let (a, b) = (&v.comps[0], &v.comps[1]);
        let mut out = Array2::zeros(w.dim());
        let nl = if self.nonlinear == Nonlinearity::Full { 1.0 } else { 0.0 };
        let alpha = self.alpha;
        Zip::indexed(&mut out).for_each(|(i, j), o| {
            let lin = self.ug[0][[i, j]] * d1[[i, j]]
                + self.ug[1][[i, j]] * d2[[i, j]]
                + a[[i, j]] * self.grad_g[0][[i, j]]
                + b[[i, j]] * self.grad_g[1][[i, j]];
            *o = -alpha * lin - nl * (a[[i, j]] * d1[[i, j]] + b[[i, j]] * d2[[i, j]]);
        });
        out
    }

    fn max_speed(&self, w: &Array2<f64>) -> f64 {
        let v = self.bs.apply_fft(w);
        let nl = if self.nonlinear == Nonlinearity::Full { 1.0 } else { 0.0 };
        let mut m: f64 = 0.0;
        for ((i, j), &u0) in self.ug[0].indexed_iter() {
            let s0 = self.alpha * u0 + nl * v.comps[0][[i, j]];
            let s1 = self.alpha * self.ug[1][[i, j]] + nl * v.comps[1][[i, j]];
            m = m.max(s0.hypot(s1));
        }
        m
    }

    pub fn check_cfl(&self, w: &Array2<f64>, dt: f64) -> Result<()> {
        let k = std::f64::consts::PI / self.grid.h();
        let c = dt * self.max_speed(w) * k;
        if c > CFL_LIMIT {
            return Err(LabError::guard("cfl", format!("dt * speed * k_max = {c:.3} exceeds {CFL_LIMIT}")));
        }
        Ok(())
    }

    fn rk4(&self, w: &Array2<f64>, dt: f64) -> Array2<f64> {
        let k1 = self.rhs(w);
        let k2 = self.rhs(&(w + &(&k1 * (dt / 2.0))));
        let k3 = self.rhs(&(w + &(&k2 * (dt / 2.0))));
        let k4 = self.rhs(&(w + &(&k3 * dt)));
        w + &((k1 + &k2 * 2.0 + &k3 * 2.0 + k4) * (dt / 6.0))
    }

    pub fn step(&self, w: &Array2<f64>, dt: f64) -> Result<Array2<f64>> {
        let half = self.lh.apply_plain(w, dt / 2.0)?;
        let mid = if self.alpha == 0.0 && self.nonlinear == Nonlinearity::Off { half } else { self.rk4(&half, dt) };
        self.lh.apply_plain(&mid, dt / 2.0)
    }
}

fn record2d(grid: &Grid2D, ops: &SpectralOps2D, wt: &WeightTable, w: &Array2<f64>, tau: f64) -> Record2D {
    let mom = moments_of(grid, &w.view());
    let [d1, d2] = ops.gradient(&w.view());
    let e = (tau / 2.0).exp();
    Record2D {
        tau,
        norm: wt.norm(&w.view()),
        grad_norm: (wt.norm2(&d1.view()) + wt.norm2(&d2.view())).sqrt(),
        mass: mom.zeroth,
        first_moments: mom.first,
        p1: [-e * mom.first[0], -e * mom.first[1]],
    }
}

/// Integrates the planar scalar equation from `w0` (projected to zero mean).
pub fn evolve2d(w0: &ScalarField2D, params: &StrainParams, nonlinear: Nonlinearity, ctl: &StepControl) -> Result<EvolutionState2D> {
    ctl.validate()?;
    let grid = w0.grid;
    let stepper = Stepper2D::new(grid, params.alpha(), nonlinear)?;
    let ops = SpectralOps2D::new(&grid);
    let wt = WeightTable::new(&grid, ctl.weight);
    let mut w = project_zero_mean(w0).plain();
    let frac = plain_tail_fraction(&w);
    if frac > TAIL_FRACTION_LIMIT {
        return Err(LabError::TailMass { fraction: frac, limit: TAIL_FRACTION_LIMIT });
    }
    let mut history = vec![record2d(&grid, &ops, &wt, &w, 0.0)];
    let n0 = history[0].norm.max(f64::MIN_POSITIVE);
    let steps = ctl.steps();
    for s in 1..=steps {
        if (s - 1) % ctl.record_every == 0 {
            stepper.check_cfl(&w, ctl.dt)?;
        }
        w = stepper.step(&w, ctl.dt)?;
        let tau = s as f64 * ctl.dt;
        if s % ctl.record_every == 0 || s == steps {
            let rec = record2d(&grid, &ops, &wt, &w, tau);
            if !rec.norm.is_finite() || rec.norm > ctl.blowup_factor * n0 {
                return Err(LabError::guard("blowup", format!("norm {:.3e} at tau = {tau:.3}", rec.norm)));
            }
            history.push(rec);
        }
    }
    let tau = steps as f64 * ctl.dt;
    Ok(EvolutionState2D { w: ScalarField2D::new(grid, w)?, tau, history })
}

// ---------------------------------------------------------------- 3D

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Record3D {
    pub tau: f64,
    /// Product norm, sup over slices.
    pub norm: f64,
    /// `||d_3 W||`, sup over the central half of the slices.
    pub d3_norm: f64,
    pub divergence: f64,
    /// Largest `|int W_3 dxi'|` over slices.
    pub max_slice_mean: f64,
    /// `theta_i` on the central slice.
    pub theta_center: [f64; 2],
    /// `e^{tau/2} theta_i` averaged over the central half.
    pub p1: [f64; 2],
    pub projected: bool,
}

#[derive(Debug, Clone)]
pub struct EvolutionState3D {
    pub w: VectorField3D,
    pub tau: f64,
    pub history: Vec<Record3D>,
    pub projections: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evolve3dOptions {
    pub nonlinear: Nonlinearity,
    /// Project when the divergence norm exceeds this multiple of its initial
    /// value (and `divergence_floor`).
    pub leray: bool,
    pub divergence_growth: f64,
    pub divergence_floor: f64,
}

impl Default for Evolve3dOptions {
    fn default() -> Self {
        Self { nonlinear: Nonlinearity::Full, leray: true, divergence_growth: 10.0, divergence_floor: 1e-8 }
    }
}

/// Derivatives of a 3D vector field used by the right-hand side.
struct Derivs {
    /// Spectral horizontal gradient of each component.
    grad_h: [[Array3<f64>; 2]; 3],
    /// Fourth-order vertical derivative of each component.
    dz: [Array3<f64>; 3],
}

pub struct Stepper3D {
    grid: Grid3D,
    alpha: f64,
    nonlinear: Nonlinearity,
    shifts: [f64; 3],
    lh: LhSemigroup,
    ops: SpectralOps3D,
    bs: BiotSavart3D,
    profile: Profile,
    chi: f64,
    l3_cache: std::sync::Mutex<Option<(f64, L3Kernel)>>,
}

impl std::fmt::Debug for Stepper3D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Stepper3D(alpha = {}, {:?}, {:?})", self.alpha, self.nonlinear, self.grid)
    }
}

impl Stepper3D {
    pub fn new(grid: Grid3D, params: &StrainParams, nonlinear: Nonlinearity) -> Result<Self> {
        let s = params.horizontal_shift();
        Ok(Self {
            grid,
            alpha: params.alpha(),
            nonlinear,
            // exponent of the component constants relative to L_h's +1
            shifts: [-s - 1.0, -s - 1.0, 0.0],
            lh: LhSemigroup::new(grid.horizontal(), DILATION_POINTS)?,
            ops: SpectralOps3D::new(&grid),
            bs: BiotSavart3D::new(grid, BsConfig::default())?,
            profile: Profile::sample(&grid),
            chi: params.chi(),
            l3_cache: std::sync::Mutex::new(None),
        })
    }

    pub fn grid(&self) -> Grid3D {
        self.grid
    }

    fn vertical_axis(&self) -> Axis1 {
        Axis1::new(-self.grid.half_height(), self.grid.h3(), self.grid.n3())
    }

    fn dz(&self, a: &Array3<f64>) -> Array3<f64> {
        d1_full(a, 0, self.grid.h3())
    }

    fn derivs(&self, w: &VectorField3D) -> Derivs {
        Derivs {
            grad_h: [0, 1, 2].map(|c| self.ops.horizontal_gradient(&w.comps[c])),
            dz: [0, 1, 2].map(|c| self.dz(&w.comps[c])),
        }
    }

    /// Exact step of the drift-diffusion part with the component constants.
    pub fn linear_step(&self, w: &VectorField3D, dt: f64) -> Result<VectorField3D> {
        let mut guard = self.l3_cache.lock().expect("kernel cache");
        if guard.as_ref().is_none_or(|(t, _)| *t != dt) {
            *guard = Some((dt, L3Kernel::new(self.vertical_axis(), KernelParams::new(dt, self.chi)?)));
        }
        let l3 = &guard.as_ref().expect("just filled").1;
        let mut out = VectorField3D::zeros(self.grid);
        for c in 0..3 {
            let factor = (self.shifts[c] * dt).exp();
            let mut comp = Array3::zeros(w.comps[c].dim());
            for (k, slice) in w.comps[c].axis_iter(Axis(0)).enumerate() {
                let h = self.lh.apply_plain(&slice.to_owned(), dt)?;
                comp.index_axis_mut(Axis(0), k).assign(&(h * factor));
            }
            out.comps[c] = l3.apply_vertical(&comp);
        }
        Ok(out)
    }

    /// `-alpha Lambda W - V . grad W + W . grad V` (nonlinear part optional).
    pub fn rhs(&self, w: &VectorField3D) -> VectorField3D {
        let v = self.bs.apply_unchecked(w);
        let dw = self.derivs(w);
        let dzv = [0, 1, 2].map(|c| self.dz(&v.comps[c]));
        let mut out = lambda_from_parts(&self.profile, w, &dw.grad_h, &v, &dzv).scaled(-self.alpha);
        if self.nonlinear == Nonlinearity::Full {
            let h = self.grid.horizontal().h();
            for c in 0..3 {
                let d1v = d1_full(&v.comps[c], 1, h);
                let d2v = d1_full(&v.comps[c], 2, h);
                let (g1, g2, gz) = (&dw.grad_h[c][0], &dw.grad_h[c][1], &dw.dz[c]);
                for (idx, o) in out.comps[c].indexed_iter_mut() {
                    let transport = v.comps[0][idx] * g1[idx] + v.comps[1][idx] * g2[idx] + v.comps[2][idx] * gz[idx];
                    let stretch = w.comps[0][idx] * d1v[idx] + w.comps[1][idx] * d2v[idx] + w.comps[2][idx] * dzv[c][idx];
                    *o += stretch - transport;
                }
            }
        }
        out
    }

    fn rk4(&self, w: &VectorField3D, dt: f64) -> Result<VectorField3D> {
        let stage = |base: &VectorField3D, k: &VectorField3D, s: f64| -> Result<VectorField3D> {
            let mut x = base.clone();
            x.axpy(s, k)?;
            Ok(x)
        };
        let k1 = self.rhs(w);
        let k2 = self.rhs(&stage(w, &k1, dt / 2.0)?);
        let k3 = self.rhs(&stage(w, &k2, dt / 2.0)?);
        let k4 = self.rhs(&stage(w, &k3, dt)?);
        let mut out = w.clone();
        out.axpy(dt / 6.0, &k1)?;
        out.axpy(dt / 3.0, &k2)?;
        out.axpy(dt / 3.0, &k3)?;
        out.axpy(dt / 6.0, &k4)?;
        Ok(out)
    }

    pub fn step(&self, w: &VectorField3D, dt: f64) -> Result<VectorField3D> {
        let half = self.linear_step(w, dt / 2.0)?;
        let mid = if self.alpha == 0.0 && self.nonlinear == Nonlinearity::Off { half } else { self.rk4(&half, dt)? };
        self.linear_step(&mid, dt / 2.0)
    }

    pub fn check_cfl(&self, w: &VectorField3D, dt: f64) -> Result<()> {
        let nl = if self.nonlinear == Nonlinearity::Full { 1.0 } else { 0.0 };
        let v = if nl > 0.0 { Some(self.bs.apply_unchecked(w)) } else { None };
        let mut speed: f64 = 0.0;
        for (k, _) in w.comps[0].axis_iter(Axis(0)).enumerate() {
            for ((i, j), &u0) in self.profile.ug[0].indexed_iter() {
                let mut s = [self.alpha * u0, self.alpha * self.profile.ug[1][[i, j]], 0.0];
                if let Some(v) = &v {
                    for (c, sc) in s.iter_mut().enumerate() {
                        *sc += v.comps[c][[k, i, j]];
                    }
                }
                speed = speed.max((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt());
            }
        }
        let kmax = std::f64::consts::PI / self.grid.horizontal().h().min(self.grid.h3());
        let c = dt * speed * kmax;
        if c > CFL_LIMIT {
            return Err(LabError::guard("cfl", format!("dt * speed * k_max = {c:.3} exceeds {CFL_LIMIT}")));
        }
        Ok(())
    }

    /// `div W` with spectral horizontal and fourth-order vertical derivatives.
    pub fn divergence(&self, w: &VectorField3D) -> Array3<f64> {
        let [d1, _] = self.ops.horizontal_gradient(&w.comps[0]);
        let [_, d2] = self.ops.horizontal_gradient(&w.comps[1]);
        d1 + d2 + self.dz(&w.comps[2])
    }

    pub fn d3(&self, w: &VectorField3D) -> VectorField3D {
        let mut out = VectorField3D::zeros(self.grid);
        for c in 0..3 {
            out.comps[c] = self.dz(&w.comps[c]);
        }
        out
    }
}

/// Slice indices with `|xi_3| <= fraction * Z`.
pub fn central_slices(grid: &Grid3D, fraction: f64) -> Vec<usize> {
    let lim = fraction * grid.half_height() + 1e-12;
    (0..grid.n3()).filter(|&k| grid.coord3(k).abs() <= lim).collect()
}

fn vector_slice_norm(wt: &WeightTable, w: &VectorField3D, k: usize) -> f64 {
    (0..3).map(|c| wt.norm2(&w.comps[c].index_axis(Axis(0), k))).sum::<f64>().sqrt()
}

fn record3d(stepper: &Stepper3D, wt: &WeightTable, w: &VectorField3D, tau: f64, projected: bool) -> Record3D {
    let grid = stepper.grid;
    let n3 = grid.n3();
    let norm = (0..n3).map(|k| vector_slice_norm(wt, w, k)).fold(0.0, f64::max);
    let center = central_slices(&grid, 0.5);
    let d3 = stepper.d3(w);
    let d3_norm = center.iter().map(|&k| vector_slice_norm(wt, &d3, k)).fold(0.0, f64::max);
    let div = stepper.divergence(w);
    let divergence = (1..n3 - 1).map(|k| wt.norm(&div.index_axis(Axis(0), k))).fold(0.0, f64::max);
    let da = grid.horizontal().cell_area();
    let max_slice_mean = w.comps[2].axis_iter(Axis(0)).map(|s| (s.sum() * da).abs()).fold(0.0, f64::max);
    let theta = theta_moments(&grid, &w.comps[2]);
    let e = (tau / 2.0).exp();
    let mut p1 = [0.0; 2];
    for &k in &center {
        p1[0] += e * theta[k][0] / center.len() as f64;
        p1[1] += e * theta[k][1] / center.len() as f64;
    }
    Record3D { tau, norm, d3_norm, divergence, max_slice_mean, theta_center: theta[n3 / 2], p1, projected }
}

/// Matrix of the fourth-order vertical derivative used by the stepper.
fn vertical_derivative_matrix(n3: usize, h3: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n3, n3);
    for col in 0..n3 {
        let mut e = Array3::zeros((n3, 1, 1));
        e[[col, 0, 0]] = 1.0;
        let d = d1_full(&e, 0, h3);
        for row in 0..n3 {
            m[(row, col)] = d[[row, 0, 0]];
        }
    }
    m
}

/// Removes the gradient part of `W`: horizontally spectral, vertically with
/// the same one-sided fourth-order derivative `D` the stepper uses. The
/// potential solves `(D^2 - |k'|^2) phi = div W` on interior slices with
/// `phi = 0` on the two end slices, so the result is discretely
/// divergence-free away from those slices.
pub fn leray_project(w: &VectorField3D) -> Result<VectorField3D> {
    let grid = w.grid;
    let (n3, n) = (grid.n3(), grid.n());
    let fft2 = Fft2::new(n);
    let mut k = wavenumbers(n, grid.horizontal().h());
    k[n / 2] = 0.0;
    let d = vertical_derivative_matrix(n3, grid.h3());
    let d2 = &d * &d;
    let hat: Vec<Vec<Complex64>> = w
        .comps
        .iter()
        .map(|c| {
            let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            for s in buf.chunks_mut(n * n) {
                fft2.forward(s);
            }
            buf
        })
        .collect();
    let mut out_hat = hat.clone();
    let mut solvers: std::collections::HashMap<u64, DMatrix<f64>> = std::collections::HashMap::new();
    for i in 0..n {
        for j in 0..n {
            let p = i * n + j;
            let kk = k[i] * k[i] + k[j] * k[j];
            if kk == 0.0 {
                // Only vertical gradients remain: keep the D-null (constant) part of W_3.
                let mean: Complex64 = (0..n3).map(|l| hat[2][l * n * n + p]).sum::<Complex64>() / n3 as f64;
                for l in 0..n3 {
                    out_hat[2][l * n * n + p] = mean;
                }
                continue;
            }
            let inv = match solvers.get(&kk.to_bits()) {
                Some(m) => m,
                None => {
                    let mut a = &d2 - DMatrix::identity(n3, n3) * kk;
                    for row in [0, n3 - 1] {
                        a.row_mut(row).fill(0.0);
                        a[(row, row)] = 1.0;
                    }
                    let inv = a
                        .try_inverse()
                        .ok_or_else(|| LabError::guard("leray", "singular vertical Helmholtz matrix"))?;
                    solvers.entry(kk.to_bits()).or_insert(inv)
                }
            };
            let mut rhs = DMatrix::<f64>::zeros(n3, 2);
            for l in 1..n3 - 1 {
                let dz: Complex64 = (0..n3).map(|m| hat[2][m * n * n + p] * d[(l, m)]).sum();
                let div = hat[0][l * n * n + p] * Complex64::new(0.0, k[i]) + hat[1][l * n * n + p] * Complex64::new(0.0, k[j]) + dz;
                rhs[(l, 0)] = div.re;
                rhs[(l, 1)] = div.im;
            }
            let phi = inv * rhs;
            let dphi = &d * &phi;
            for l in 0..n3 {
                let ph = Complex64::new(phi[(l, 0)], phi[(l, 1)]);
                out_hat[0][l * n * n + p] -= ph * Complex64::new(0.0, k[i]);
                out_hat[1][l * n * n + p] -= ph * Complex64::new(0.0, k[j]);
                out_hat[2][l * n * n + p] -= Complex64::new(dphi[(l, 0)], dphi[(l, 1)]);
            }
        }
    }
    let mut out = VectorField3D::zeros(grid);
    for (c, comp) in out_hat.iter_mut().enumerate() {
        for s in comp.chunks_mut(n * n) {
            fft2.inverse(s);
        }
        out.comps[c] = Array3::from_shape_fn(grid.shape(), |(l, i, j)| comp[l * n * n + i * n + j].re);
    }
    Ok(out)
}

/// Integrates the perturbation system from a divergence-free `W0` whose third
/// component has zero mean on every slice.
pub fn evolve3d(w0: &VectorField3D, params: &StrainParams, opts: &Evolve3dOptions, ctl: &StepControl) -> Result<EvolutionState3D> {
    ctl.validate()?;
    let grid = w0.grid;
    if w0.weighted_repr {
        return Err(LabError::param("W0", "evolution expects plain samples"));
    }
    let stepper = Stepper3D::new(grid, params, opts.nonlinear)?;
    let wt = WeightTable::new(&grid.horizontal(), ctl.weight);
    let mut w = w0.clone();
    let first = record3d(&stepper, &wt, &w, 0.0, false);
    let mean_tol = 1e-8 * (1.0 + first.norm);
    if first.max_slice_mean > mean_tol {
        return Err(LabError::ZeroMean { what: "third component of W0".into(), mean: first.max_slice_mean, tol: mean_tol });
    }
    let div_limit = (opts.divergence_growth * first.divergence).max(opts.divergence_floor);
    let n0 = first.norm.max(f64::MIN_POSITIVE);
    let mut history = vec![first];
    let mut projections = 0;
    let steps = ctl.steps();
    for s in 1..=steps {
        if (s - 1) % ctl.record_every == 0 {
            stepper.check_cfl(&w, ctl.dt)?;
        }
        w = stepper.step(&w, ctl.dt)?;
        let tau = s as f64 * ctl.dt;
        if s % ctl.record_every == 0 || s == steps {
            let mut rec = record3d(&stepper, &wt, &w, tau, false);
            if !rec.norm.is_finite() || rec.norm > ctl.blowup_factor * n0 {
                return Err(LabError::guard("blowup", format!("norm {:.3e} at tau = {tau:.3}", rec.norm)));
            }
            if rec.divergence > div_limit {
                if opts.leray {
                    warn!("divergence {:.3e} above {:.3e} at tau = {tau:.3}; projecting", rec.divergence, div_limit);
                    w = leray_project(&w)?;
                    projections += 1;
                    rec = record3d(&stepper, &wt, &w, tau, true);
                } else {
                    warn!("divergence {:.3e} above {:.3e} at tau = {tau:.3}", rec.divergence, div_limit);
                }
            }
            history.push(rec);
        }
    }
    Ok(EvolutionState3D { w, tau: steps as f64 * ctl.dt, history, projections })
}

// ---------------------------------------------------------------- fits

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRateFit {
    pub window: [f64; 2],
    pub exponent: f64,
    /// RMS deviation of `log ||.||` from the fitted line.
    pub residual: f64,
    pub samples: usize,
    pub target: Option<f64>,
}

/// Residual below which a fitted exponent supports a claim.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;

impl DecayRateFit {
    pub fn reliable(&self) -> bool {
        self.residual < FIT_RESIDUAL_LIMIT
    }

    /// `|exponent - target| <= tol`, only for reliable fits.
    pub fn matches(&self, tol: f64) -> bool {
        self.reliable() && self.target.is_some_and(|t| (self.exponent - t).abs() <= tol)
    }
}

/// Transient excluded from rate fits by default.
pub fn transient_start(dt: f64) -> f64 {
    2.0f64.max(4.0 * dt)
}

/// Least-squares slope of `log value` against `tau` on the window.
pub fn fit_decay(samples: &[(f64, f64)], window: [f64; 2], target: Option<f64>) -> Result<DecayRateFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, v)| *t >= window[0] - 1e-12 && *t <= window[1] + 1e-12 && *v > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(LabError::param("history", format!("{} samples in [{}, {}], need at least 10", pts.len(), window[0], window[1])));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayRateFit { window, exponent: slope, residual, samples: pts.len(), target })
}

// ---------------------------------------------------------------- profile

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalProfile {
    pub t: f64,
    pub beta: f64,
    /// `sqrt(beta) e^{-tau/2}`, equal to `sqrt(mu-1) (1-t)^{mu/2-1}` for `T* = 1`.
    pub amplitude: f64,
    /// Sup of the physical velocity correction `amplitude * |sum c_i d_i U^G|`.
    pub velocity_sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondaryProfile {
    pub tau: f64,
    /// Half-width of the central window in `xi_3`.
    pub window: f64,
    /// `lambda_i + d_i`.
    pub coefficients: [f64; 2],
    /// `sup` over window slices of `||e^{tau/2} W - sum c_i d_i G||`.
    pub residual: f64,
    /// Same for `e^{tau/2} V - sum c_i d_i U^G`, sup norm.
    pub velocity_residual: f64,
    pub physical: PhysicalProfile,
}

/// Projects `e^{tau/2} W` onto `span{d_1 G, d_2 G}` on the window
/// `|xi_3| <= min(e^{(chi - delta) tau}, Z)`, edge slices excluded.
pub fn extract_secondary_profile(
    state: &EvolutionState3D,
    params: &StrainParams,
    weight: WeightExponent,
    delta: f64,
) -> Result<SecondaryProfile> {
    let grid = state.w.grid;
    let tau = state.tau;
    let inner = grid.half_height() - 2.0 * grid.h3();
    let window = ((params.chi() - delta) * tau).exp().min(inner);
    let slices: Vec<usize> = (0..grid.n3()).filter(|&k| grid.coord3(k).abs() <= window + 1e-12).collect();
    if slices.len() < 2 {
        return Err(LabError::guard("window", format!("central window of half-width {window:.3} holds {} slices", slices.len())));
    }
    let e = (tau / 2.0).exp();
    let theta = theta_moments(&grid, &state.w.comps[2]);
    let mut c = [0.0; 2];
    for &k in &slices {
        c[0] += e * theta[k][0] / slices.len() as f64;
        c[1] += e * theta[k][1] / slices.len() as f64;
    }
    let hg = grid.horizontal();
    let wt = WeightTable::new(&hg, weight);
    let profile = hg.sample(|x, y| {
        let gg = grad_g(x, y);
        c[0] * gg[0] + c[1] * gg[1]
    });
    let mut residual: f64 = 0.0;
    for &k in &slices {
        let mut sq = 0.0;
        for comp in 0..3 {
            let s = state.w.comps[comp].index_axis(Axis(0), k).to_owned() * e;
            let d = if comp == 2 { s - &profile } else { s };
            sq += wt.norm2(&d.view());
        }
        residual = residual.max(sq.sqrt());
    }
    // d_i U^G is the velocity of d_i g.
    let bs = BiotSavart2D::new(hg, BsConfig::default())?;
    let uprof = bs.apply_fft(&profile);
    let v = BiotSavart3D::new(grid, BsConfig::default())?.apply_unchecked(&state.w);
    let mut velocity_residual: f64 = 0.0;
    for &k in &slices {
        for comp in 0..3 {
            let s = v.comps[comp].index_axis(Axis(0), k).to_owned() * e;
            let d = if comp < 2 { s - &uprof.comps[comp] } else { s };
            velocity_residual = velocity_residual.max(max_abs2(&d));
        }
    }
    let t = from_selfsim_time(tau, params)?;
    let beta = beta_at_tau(tau, params)?;
    let amplitude = beta.sqrt() / e;
    let vsup = uprof.max_norm();
    Ok(SecondaryProfile {
        tau,
        window,
        coefficients: c,
        residual,
        velocity_residual,
        physical: PhysicalProfile { t, beta, amplitude, velocity_sup: amplitude * vsup },
    })
}

/// `(0, 0, w)` repeated on every slice.
pub fn column_field(grid: Grid3D, w: &Array2<f64>) -> VectorField3D {
    let mut out = VectorField3D::zeros(grid);
    for mut s in out.comps[2].axis_iter_mut(Axis(0)) {
        s.assign(w);
    }
    out
}

/// `curl(0, g phi(xi_3), 0) = (-phi' g, 0, phi d_1 g)`, divergence-free with
/// zero slice means in the third component.
pub fn curl_potential_field(grid: Grid3D, phi: impl Fn(f64) -> (f64, f64)) -> VectorField3D {
    VectorField3D::from_fn(grid, |x, y, z| {
        let (p, dp) = phi(z);
        [-dp * eval_g(x, y), 0.0, p * grad_g(x, y)[0]]
    })
}

/// Vertical profile `sin(pi xi_3 / Z)` of the standard 3D perturbation, with
/// its derivative. Vanishes on the top and bottom of the box.
pub fn box_mode(half_height: f64) -> impl Fn(f64) -> (f64, f64) {
    let k = std::f64::consts::PI / half_height;
    move |s| ((k * s).sin(), k * (k * s).cos())
}

/// `d_1 g` column plus `curl(0, g phi, 0)` scaled to `X(m)`-norm `size`, with
/// `phi` the box mode.
pub fn modulated_column(grid: Grid3D, weight: WeightExponent, size: f64) -> Result<VectorField3D> {
    let d1 = grid.horizontal().sample(|x, y| grad_g(x, y)[0]);
    let mut w = column_field(grid, &d1);
    if size > 0.0 {
        let pert = curl_potential_field(grid, box_mode(grid.half_height()));
        let norm = norm_xbb_unchecked(&pert, weight)?;
        w.axpy(size / norm, &pert)?;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(alpha: f64) -> StrainParams {
        StrainParams::unit(2.0, alpha).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let grid = Grid2D::new(64, 10.0).unwrap();
        let ctl = StepControl::new(0.1, 1.0, WeightExponent::Polynomial(4.0)).unwrap();
        let st = evolve2d(&ScalarField2D::zeros(grid), &unit(1.0), Nonlinearity::Full, &ctl).unwrap();
        assert!(st.w.max_abs() == 0.0);
        let g3 = Grid3D::new(32, 10.0, 16, 8.0).unwrap();
        let st3 = evolve3d(&VectorField3D::zeros(g3), &unit(1.0), &Evolve3dOptions::default(), &ctl).unwrap();
        assert!(st3.w.max_abs() == 0.0);
    }

    #[test]
    fn synthetic_fits() {
        let pure: Vec<(f64, f64)> = (0..=80).map(|i| {
            let t = i as f64 * 0.1;
            (t, (-t / 2.0).exp())
        }).collect();
        let f = fit_decay(&pure, [2.0, 6.0], Some(-0.5)).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-12 && f.matches(1e-9));
        let mixed: Vec<(f64, f64)> = (0..=80).map(|i| {
            let t = i as f64 * 0.1;
            (t, (-t / 2.0).exp() * (1.0 + (-t).exp()))
        }).collect();
        let f = fit_decay(&mixed, [3.0, 8.0], None).unwrap();
        assert!(f.exponent > -0.55 && f.exponent < -0.45);
        assert!(fit_decay(&pure[..5], [0.0, 8.0], None).is_err());
    }

    #[test]
    fn translation_mode_decays_at_half_rate() {
        let grid = Grid2D::new(128, 12.0).unwrap();
        let w0 = ScalarField2D::from_fn(grid, |x, y| grad_g(x, y)[0]);
        let ctl = StepControl::new(0.1, 3.0, WeightExponent::Polynomial(4.0)).unwrap();
        let st = evolve2d(&w0, &unit(1.0), Nonlinearity::Off, &ctl).unwrap();
        let expect = w0.data.mapv(|v| v * (-1.5f64).exp());
        let err = (&st.w.data - &expect).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(err < 1e-8, "{err}");
        // first moments: e^{tau/2} theta stays put
        let last = st.history.last().unwrap();
        assert!((last.p1[0] - 1.0).abs() < 1e-9, "{:?}", last.p1);
    }

    #[test]
    fn first_moments_are_conserved_nonlinearly() {
        let grid = Grid2D::new(128, 12.0).unwrap();
        let w0 = ScalarField2D::from_fn(grid, |x, y| {
            let g = eval_g(x, y);
            grad_g(x, y)[0] + 0.5 * x * y * g + 0.3 * grad_g(x, y)[1]
        });
        let ctl = StepControl::new(0.1, 2.0, WeightExponent::Polynomial(4.0)).unwrap();
        let st = evolve2d(&w0, &unit(5.0), Nonlinearity::Full, &ctl).unwrap();
        let (a, b) = (st.history[0].p1, st.history.last().unwrap().p1);
        assert!((a[0] - b[0]).abs() < 1e-7 && (a[1] - b[1]).abs() < 1e-7, "{a:?} {b:?}");
        assert!(st.history.iter().all(|r| r.mass.abs() < 1e-10));
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let grid = Grid2D::new(96, 10.0).unwrap();
        let w0 = ScalarField2D::from_fn(grid, |x, y| {
            let g = eval_g(x, y);
            (x * x - y) * g * 0.8 + grad_g(x, y)[1]
        });
        let run = |dt: f64| evolve2d(&w0, &unit(3.0), Nonlinearity::Full, &StepControl::new(dt, 0.8, WeightExponent::Polynomial(4.0)).unwrap()).unwrap().w.data;
        let (a, b, c) = (run(0.2), run(0.1), run(0.05));
        let e1 = max_abs2(&(&a - &b));
        let e2 = max_abs2(&(&b - &c));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.5, "{ratio} ({e1:e}, {e2:e})");
    }

    #[test]
    fn linear_3d_preserves_constraints_and_matches_planar_run() {
        let grid = Grid3D::new(64, 12.0, 16, 8.0).unwrap();
        let hg = grid.horizontal();
        let w2 = hg.sample(|x, y| grad_g(x, y)[0] + 0.4 * x * y * eval_g(x, y));
        let ctl = StepControl::new(0.1, 1.0, WeightExponent::Polynomial(4.0)).unwrap();
        let p = unit(2.0);
        let st3 = evolve3d(&column_field(grid, &w2), &p, &Evolve3dOptions::default(), &ctl).unwrap();
        let st2 = evolve2d(&ScalarField2D::new(hg, w2).unwrap(), &p, Nonlinearity::Full, &ctl).unwrap();
        for k in [0, 7, 15] {
            let d = &st3.w.comps[2].index_axis(Axis(0), k) - &st2.w.data;
            assert!(max_abs2(&d) < 1e-9, "slice {k}: {}", max_abs2(&d));
        }
        assert!(st3.w.comps[0].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(st3.projections, 0);
    }

    #[test]
    fn vertical_derivative_follows_shifted_evolution() {
        let grid = Grid3D::new(64, 10.0, 48, 24.0).unwrap();
        let z = grid.half_height();
        let k = std::f64::consts::PI / z;
        let w0 = curl_potential_field(grid, |s| ((k * s).sin(), k * (k * s).cos()));
        let p = unit(1.0);
        let ctl = StepControl::new(0.05, 1.0, WeightExponent::Polynomial(4.0)).unwrap();
        let opts = Evolve3dOptions { nonlinear: Nonlinearity::Off, ..Default::default() };
        let st = evolve3d(&w0, &p, &opts, &ctl).unwrap();
        let stepper = Stepper3D::new(grid, &p, Nonlinearity::Off).unwrap();
        let dw0 = curl_potential_field(grid, |s| (k * (k * s).cos(), -k * k * (k * s).sin()));
        let std = evolve3d(&dw0, &p, &opts, &ctl).unwrap();
        let lhs = stepper.d3(&st.w);
        let rhs = std.w.scaled((-p.chi()).exp());
        let center = central_slices(&grid, 0.5);
        let mut err: f64 = 0.0;
        for &s in &center {
            for c in 0..3 {
                let d = &lhs.comps[c].index_axis(Axis(0), s) - &rhs.comps[c].index_axis(Axis(0), s);
                err = err.max(max_abs2(&d.to_owned()));
            }
        }
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn exact_translation_mode_profile() {
        let grid = Grid3D::new(64, 12.0, 16, 8.0).unwrap();
        let tau = 6.0;
        let w2 = grid.horizontal().sample(|x, y| grad_g(x, y)[0] * (-tau / 2.0f64).exp());
        let state = EvolutionState3D { w: column_field(grid, &w2), tau, history: vec![], projections: 0 };
        let prof = extract_secondary_profile(&state, &unit(1.0), WeightExponent::Polynomial(4.0), 0.5).unwrap();
        assert!((prof.coefficients[0] - 1.0).abs() < 1e-12 && prof.coefficients[1].abs() < 1e-12);
        assert!(prof.residual < 1e-12);
    }

    #[test]
    fn leray_projection_removes_gradients() {
        let grid = Grid3D::new(64, 10.0, 32, 8.0).unwrap();
        let stepper = Stepper3D::new(grid, &unit(1.0), Nonlinearity::Off).unwrap();
        let k = 0.3;
        // grad(d_1 g e^{-xi_3^2/4}) with the vertical derivative taken discretely
        let mut grad = VectorField3D::from_fn(grid, |x, y, z| {
            let g = eval_g(x, y) * (-z * z / 4.0).exp();
            [(x * x / 4.0 - 0.5) * g, x * y / 4.0 * g, 0.0]
        });
        let phi = VectorField3D::from_fn(grid, |x, y, z| [-x / 2.0 * eval_g(x, y) * (-z * z / 4.0).exp(), 0.0, 0.0]);
        grad.comps[2] = d1_full(&phi.comps[0], 0, grid.h3());
        let p = leray_project(&grad).unwrap();
        let interior = |f: &VectorField3D| {
            let d = stepper.divergence(f);
            d.slice(ndarray::s![1..grid.n3() - 1, .., ..]).iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let dmax = interior(&p);
        assert!(dmax < 1e-8, "{dmax}");
        assert!(p.max_abs() < 1e-3 * grad.max_abs(), "{} of {}", p.max_abs(), grad.max_abs());
        let curl = curl_potential_field(grid, |s| {
            let e = (-s * s / 4.0).exp();
            (e * (k * s).sin(), e * (k * (k * s).cos() - s / 2.0 * (k * s).sin()))
        });
        let q = leray_project(&curl).unwrap();
        // The curl field is divergence-free up to discretization error only.
        let change = q.sub(&curl).unwrap().max_abs() / curl.max_abs();
        assert!(change < 1e-2, "{change}");
        assert!(interior(&q) < 1e-8);
    }
}
