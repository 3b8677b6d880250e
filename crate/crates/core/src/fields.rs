//! Closed-form vortex fields: the Gaussian `g`, the Oseen velocity `U^G`,
//! the steady and singular Burgers vortices, the parasitic strain flow, and
//! finite-difference residuals of the Navier-Stokes equations for them.

use crate::error::Result;
use crate::fd::{d1, d2, interior, FdOrder};
use crate::grid::{Grid2D, Grid3D};
use crate::params::StrainParams;
use crate::quad::integrate_adaptive;
use ndarray::Array3;
use std::f64::consts::PI;

/// Below this radius `U^G` uses its Taylor series.
pub const UG_SERIES_RADIUS: f64 = 1e-3;
/// Upper limit standing in for infinity in the pressure integral.
pub const PRESSURE_CUTOFF: f64 = 200.0;

pub fn eval_g(x1: f64, x2: f64) -> f64 {
    (-(x1 * x1 + x2 * x2) / 4.0).exp() / (4.0 * PI)
}

pub fn grad_g(x1: f64, x2: f64) -> [f64; 2] {
    let g = eval_g(x1, x2);
    [-0.5 * x1 * g, -0.5 * x2 * g]
}

/// `G = (0, 0, g)`.
pub fn eval_gaussian_column(x1: f64, x2: f64) -> [f64; 3] {
    [0.0, 0.0, eval_g(x1, x2)]
}

/// Swirl profile `u(s) = (1 - exp(-s/4)) / (2 pi s)` so that `U^G = u(|x'|^2) x'^perp`.
pub fn swirl(s: f64) -> f64 {
    if s < UG_SERIES_RADIUS * UG_SERIES_RADIUS {
        (0.25 - s / 32.0 + s * s / 384.0) / (2.0 * PI)
    } else {
        -(-s / 4.0).exp_m1() / (2.0 * PI * s)
    }
}

/// `phi(x) = (1 - e^-x)/x` and its first two derivatives.
fn phi_derivs(x: f64) -> [f64; 3] {
    if x < 1.0 {
        let (mut p0, mut p1, mut p2) = (0.0, 0.0, 0.0);
        // term_n = (-x)^n / (n+1)!
        let mut fact = 1.0;
        for n in 0..30 {
            fact *= (n + 1) as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let nf = n as f64;
            p0 += sign * x.powi(n) / fact;
            if n >= 1 {
                p1 += sign * nf * x.powi(n - 1) / fact;
            }
            if n >= 2 {
                p2 += sign * nf * (nf - 1.0) * x.powi(n - 2) / fact;
            }
        }
        [p0, p1, p2]
    } else {
        let e = (-x).exp();
        let om = -(-x).exp_m1();
        [
            om / x,
            (e * (1.0 + x) - 1.0) / (x * x),
            (2.0 - e * (x * x + 2.0 * x + 2.0)) / (x * x * x),
        ]
    }
}

/// `[u(s), u'(s), u''(s)]` with derivatives in `s = |x'|^2`.
pub fn swirl_derivs(s: f64) -> [f64; 3] {
    let [p0, p1, p2] = phi_derivs(s / 4.0);
    [p0 / (8.0 * PI), p1 / (32.0 * PI), p2 / (128.0 * PI)]
}

/// Oseen vortex velocity `U^G`, third component zero.
pub fn eval_ug(x1: f64, x2: f64) -> [f64; 3] {
    let u = swirl(x1 * x1 + x2 * x2);
    [-x2 * u, x1 * u, 0.0]
}

/// Jacobian `J[i][j] = d_j U^G_i` of the horizontal components.
pub fn ug_jacobian(x1: f64, x2: f64) -> [[f64; 2]; 2] {
    let [u, du, _] = swirl_derivs(x1 * x1 + x2 * x2);
    let perp = [-x2, x1];
    let x = [x1, x2];
    let rot = [[0.0, -1.0], [1.0, 0.0]];
    let mut j = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            j[a][b] = 2.0 * x[b] * du * perp[a] + u * rot[a][b];
        }
    }
    j
}

pub fn ug_laplacian(x1: f64, x2: f64) -> [f64; 2] {
    let s = x1 * x1 + x2 * x2;
    let [_, du, ddu] = swirl_derivs(s);
    let c = 8.0 * du + 4.0 * s * ddu;
    [-x2 * c, x1 * c]
}

/// Vertical vorticity of `U^G`, analytically equal to `g`.
pub fn ug_curl(x1: f64, x2: f64) -> f64 {
    let j = ug_jacobian(x1, x2);
    j[1][0] - j[0][1]
}

/// `int_s^inf (1/r)(1 - e^{-r/4}) e^{-r/4} dr`, truncated at [`PRESSURE_CUTOFF`].
pub fn pressure_integral(s: f64) -> Result<f64> {
    if s >= PRESSURE_CUTOFF {
        return Ok(0.0);
    }
    let f = |r: f64| {
        if r == 0.0 {
            0.25
        } else {
            -(-r / 4.0).exp_m1() * (-r / 4.0).exp() / r
        }
    };
    integrate_adaptive(f, s, PRESSURE_CUTOFF, 1e-12, 1e-17)
}

/// Velocity, pressure and vorticity at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSample {
    pub velocity: [f64; 3],
    pub pressure: f64,
    pub vorticity: [f64; 3],
}

/// A closed-form Navier-Stokes solution that can be probed pointwise.
pub trait ExactFlow: Sync {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3];
    fn pressure(&self, x: [f64; 3], t: f64) -> Result<f64>;
    /// Probe step for the centered time derivative; `None` for steady flows.
    fn time_step(&self, t: f64) -> Option<f64>;
}

fn strain(rate: f64, x: [f64; 3]) -> [f64; 3] {
    [-rate * x[0], -rate * x[1], 2.0 * rate * x[2]]
}

fn norm2(v: [f64; 3]) -> f64 {
    v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
}

/// Steady Burgers vortex with strain rate `gamma` and circulation `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct SteadyBurgers {
    pub alpha: f64,
    pub gamma: f64,
}

impl SteadyBurgers {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(crate::error::LabError::param("gamma", format!("must be positive, got {gamma}")));
        }
        Ok(Self { alpha, gamma })
    }

    pub fn vorticity(&self, x: [f64; 3]) -> [f64; 3] {
        let sg = self.gamma.sqrt();
        [0.0, 0.0, self.alpha * self.gamma * eval_g(sg * x[0], sg * x[1])]
    }

    pub fn sample(&self, x: [f64; 3]) -> Result<FlowSample> {
        Ok(FlowSample {
            velocity: self.velocity(x, 0.0),
            pressure: self.pressure(x, 0.0)?,
            vorticity: self.vorticity(x),
        })
    }
}

impl ExactFlow for SteadyBurgers {
    fn velocity(&self, x: [f64; 3], _t: f64) -> [f64; 3] {
        let sg = self.gamma.sqrt();
        let ug = eval_ug(sg * x[0], sg * x[1]);
        let lin = strain(self.gamma / 2.0, x);
        [lin[0] + self.alpha * sg * ug[0], lin[1] + self.alpha * sg * ug[1], lin[2]]
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Result<f64> {
        let v = self.velocity(x, t);
        let s = self.gamma * (x[0] * x[0] + x[1] * x[1]);
        Ok(-0.5 * norm2(v) - self.alpha * self.alpha * self.gamma / (16.0 * PI * PI) * pressure_integral(s)?)
    }

    fn time_step(&self, _t: f64) -> Option<f64> {
        None
    }
}

/// Steady Burgers vortex evaluated at `x`: velocity, pressure, vorticity.
pub fn eval_burgers(x: [f64; 3], params: &StrainParams, gamma: f64) -> Result<FlowSample> {
    SteadyBurgers::new(params.alpha(), gamma)?.sample(x)
}

/// Backward self-similar blow-up family with strain strength `mu`.
#[derive(Debug, Clone, Copy)]
pub struct SingularBurgers {
    pub params: StrainParams,
}

impl SingularBurgers {
    pub fn new(params: StrainParams) -> Self {
        Self { params }
    }

    pub fn vorticity(&self, x: [f64; 3], t: f64) -> Result<[f64; 3]> {
        let b = self.params.beta(t)?;
        let sb = b.sqrt();
        Ok([0.0, 0.0, self.params.alpha() * b * eval_g(sb * x[0], sb * x[1])])
    }

    /// Velocity assembled as strain plus `alpha * U_mu` with `U_mu(x') = sqrt(beta) U^G(sqrt(beta) x')`.
    pub fn velocity_checked(&self, x: [f64; 3], t: f64) -> Result<[f64; 3]> {
        let rho = self.params.strain_rate(t)?;
        let sb = self.params.beta(t)?.sqrt();
        let ug = eval_ug(sb * x[0], sb * x[1]);
        let lin = strain(rho, x);
        let a = self.params.alpha();
        Ok([lin[0] + a * sb * ug[0], lin[1] + a * sb * ug[1], lin[2]])
    }

    pub fn sample(&self, x: [f64; 3], t: f64) -> Result<FlowSample> {
        Ok(FlowSample {
            velocity: self.velocity_checked(x, t)?,
            pressure: self.pressure(x, t)?,
            vorticity: self.vorticity(x, t)?,
        })
    }
}

impl ExactFlow for SingularBurgers {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        self.velocity_checked(x, t).expect("time checked by caller")
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Result<f64> {
        let p = &self.params;
        let b = p.beta(t)?;
        let drho = p.mu() / (2.0 * (p.t_star() - t).powi(2));
        let dlin_dot_x = drho * (-x[0] * x[0] - x[1] * x[1] + 2.0 * x[2] * x[2]);
        let v = self.velocity_checked(x, t)?;
        let s = b * (x[0] * x[0] + x[1] * x[1]);
        let a = p.alpha();
        Ok(-0.5 * dlin_dot_x - 0.5 * norm2(v) - a * a * b / (16.0 * PI * PI) * pressure_integral(s)?)
    }

    fn time_step(&self, t: f64) -> Option<f64> {
        Some(1e-4 * (self.params.t_star() - t))
    }
}

/// Singular Burgers vortex at `(x, t)`; rejects `t >= t_star`.
pub fn eval_singular_burgers(x: [f64; 3], t: f64, params: &StrainParams) -> Result<FlowSample> {
    SingularBurgers::new(*params).sample(x, t)
}

/// Pure linear strain with time-dependent rate `rho(t)`, supplied with its derivative.
pub struct ParasiticFlow<F: Fn(f64) -> (f64, f64) + Sync> {
    pub rate: F,
}

impl<F: Fn(f64) -> (f64, f64) + Sync> ExactFlow for ParasiticFlow<F> {
    fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        strain((self.rate)(t).0, x)
    }

    fn pressure(&self, x: [f64; 3], t: f64) -> Result<f64> {
        let (rho, drho) = (self.rate)(t);
        let v = strain(rho, x);
        Ok(-0.5 * norm2(v) - 0.5 * drho * (-x[0] * x[0] - x[1] * x[1] + 2.0 * x[2] * x[2]))
    }

    fn time_step(&self, _t: f64) -> Option<f64> {
        Some(1e-4)
    }
}

/// Velocity and pressure of the parasitic strain flow.
pub fn eval_parasitic(x: [f64; 3], t: f64, rate: impl Fn(f64) -> (f64, f64) + Sync) -> ([f64; 3], f64) {
    let flow = ParasiticFlow { rate };
    let p = flow.pressure(x, t).expect("closed form");
    (flow.velocity(x, t), p)
}

/// Residual of `d_t V + V.grad V - Laplace V + grad P` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Largest pointwise Euclidean residual over interior nodes.
    pub max: f64,
    /// Largest velocity magnitude on the same nodes, for scale.
    pub velocity_scale: f64,
    pub interior_points: usize,
}

/// Navier-Stokes residual of `flow` at time `t`, finite differences of the
/// given order in space; boundary bands of the stencil width are excluded.
pub fn navier_stokes_residual(flow: &dyn ExactFlow, grid: &Grid3D, t: f64, order: FdOrder) -> Result<ResidualReport> {
    let c = grid.horizontal().coords();
    let c3 = grid.coords3();
    let shape = grid.shape();
    let point = |k: usize, i: usize, j: usize| [c[i], c[j], c3[k]];
    let mut vel = [Array3::zeros(shape), Array3::zeros(shape), Array3::zeros(shape)];
    let mut pres = Array3::zeros(shape);
    for k in 0..shape.0 {
        for i in 0..shape.1 {
            for j in 0..shape.2 {
                let x = point(k, i, j);
                let v = flow.velocity(x, t);
                for a in 0..3 {
                    vel[a][[k, i, j]] = v[a];
                }
                pres[[k, i, j]] = flow.pressure(x, t)?;
            }
        }
    }
    let h = grid.horizontal().h();
    let spacing = [grid.h3(), h, h];
    // Velocity components are indexed by physical axis 0,1,2 = x1,x2,x3;
    // array axes are [x3, x1, x2].
    let array_axis = [1usize, 2, 0];
    let grad = |f: &Array3<f64>, ax: usize| d1(f, array_axis[ax], spacing[array_axis[ax]], order);
    let lap = |f: &Array3<f64>| {
        let mut l = d2(f, 0, spacing[0], order);
        l += &d2(f, 1, spacing[1], order);
        l += &d2(f, 2, spacing[2], order);
        l
    };
    let dv: Vec<Vec<Array3<f64>>> = (0..3).map(|a| (0..3).map(|b| grad(&vel[a], b)).collect()).collect();
    let lv: Vec<Array3<f64>> = (0..3).map(|a| lap(&vel[a])).collect();
    let dp: Vec<Array3<f64>> = (0..3).map(|b| grad(&pres, b)).collect();

    let band = order.band();
    let dt = flow.time_step(t);
    let mut max: f64 = 0.0;
    let mut vmax: f64 = 0.0;
    let mut count = 0;
    for [k, i, j] in interior(shape, band) {
        let x = point(k, i, j);
        let dvdt = match dt {
            Some(d) => {
                let vp = flow.velocity(x, t + d);
                let vm = flow.velocity(x, t - d);
                [(vp[0] - vm[0]) / (2.0 * d), (vp[1] - vm[1]) / (2.0 * d), (vp[2] - vm[2]) / (2.0 * d)]
            }
            None => [0.0; 3],
        };
        let v = [vel[0][[k, i, j]], vel[1][[k, i, j]], vel[2][[k, i, j]]];
        let mut r2 = 0.0;
        for a in 0..3 {
            let adv: f64 = (0..3).map(|b| v[b] * dv[a][b][[k, i, j]]).sum();
            let r = dvdt[a] + adv - lv[a][[k, i, j]] + dp[a][[k, i, j]];
            r2 += r * r;
        }
        max = max.max(r2.sqrt());
        vmax = vmax.max(norm2(v).sqrt());
        count += 1;
    }
    Ok(ResidualReport { max, velocity_scale: vmax, interior_points: count })
}

/// Box of `n` horizontal points and `n3` vertical points with equal spacing,
/// half-width `half_width`, centred on the origin.
pub fn residual_grid(n: usize, n3: usize, half_width: f64) -> Result<Grid3D> {
    let h = 2.0 * half_width / n as f64;
    Grid3D::new(n, half_width, n3, 0.5 * n3 as f64 * h)
}

/// Residual of the singular Burgers vortex on a box scaled to its core
/// radius `core / sqrt(beta(t))`.
pub fn singular_burgers_residual(params: &StrainParams, t: f64, n: usize, core: f64, order: FdOrder) -> Result<ResidualReport> {
    let b = params.beta(t)?;
    let grid = residual_grid(n, 8, core / b.sqrt())?;
    navier_stokes_residual(&SingularBurgers::new(*params), &grid, t, order)
}

/// Residual of the steady Burgers vortex with strain `gamma` on a core-scaled box.
pub fn steady_burgers_residual(alpha: f64, gamma: f64, n: usize, core: f64, order: FdOrder) -> Result<ResidualReport> {
    let grid = residual_grid(n, 8, core / gamma.sqrt())?;
    navier_stokes_residual(&SteadyBurgers::new(alpha, gamma)?, &grid, 0.0, order)
}

/// `Laplace U^G + (1/2) xi.grad U^G + (1/2) U^G` from analytic derivatives.
pub fn oseen_operator_analytic(x1: f64, x2: f64) -> [f64; 2] {
    let u = eval_ug(x1, x2);
    let j = ug_jacobian(x1, x2);
    let l = ug_laplacian(x1, x2);
    let mut out = [0.0; 2];
    for a in 0..2 {
        out[a] = l[a] + 0.5 * (x1 * j[a][0] + x2 * j[a][1]) + 0.5 * u[a];
    }
    out
}

/// Largest residual of the Oseen identity over the grid, analytic derivatives.
pub fn oseen_identity_residual(grid: &Grid2D) -> f64 {
    let c = grid.coords();
    let mut m: f64 = 0.0;
    for &x1 in &c {
        for &x2 in &c {
            let r = oseen_operator_analytic(x1, x2);
            m = m.max(r[0].abs().max(r[1].abs()));
        }
    }
    m
}

/// Same residual with finite-difference derivatives of sampled `U^G`,
/// maximum over interior nodes.
pub fn oseen_identity_residual_fd(grid: &Grid2D, order: FdOrder) -> f64 {
    let n = grid.n();
    let h = grid.h();
    let c = grid.coords();
    let comp = |a: usize| Array3::from_shape_fn((1, n, n), |(_, i, j)| eval_ug(c[i], c[j])[a]);
    let mut m: f64 = 0.0;
    for a in 0..2 {
        let f = comp(a);
        let fx = d1(&f, 1, h, order);
        let fy = d1(&f, 2, h, order);
        let lap = d2(&f, 1, h, order) + d2(&f, 2, h, order);
        let b = order.band();
        for i in b..n - b {
            for j in b..n - b {
                let r = lap[[0, i, j]] + 0.5 * (c[i] * fx[[0, i, j]] + c[j] * fy[[0, i, j]]) + 0.5 * f[[0, i, j]];
                m = m.max(r.abs());
            }
        }
    }
    m
}

/// Pointwise check that `U^G x curl U^G` is the gradient `-(1/16 pi^2) grad I(|xi|^2)`
/// of the pressure integral. Returns (largest mismatch, largest literal magnitude).
pub fn ug_cross_curl_check(grid: &Grid2D) -> (f64, f64) {
    let c = grid.coords();
    let (mut mismatch, mut magnitude): (f64, f64) = (0.0, 0.0);
    for &x1 in &c {
        for &x2 in &c {
            let u = eval_ug(x1, x2);
            let w = ug_curl(x1, x2);
            let cross = [u[1] * w, -u[0] * w];
            let s = x1 * x1 + x2 * x2;
            // d/ds I(s) = -(1/s)(1 - e^{-s/4}) e^{-s/4}
            let di = if s == 0.0 { -0.25 } else { (-s / 4.0).exp_m1() * (-s / 4.0).exp() / s };
            let grad = [2.0 * x1 * di, 2.0 * x2 * di];
            let scale = -1.0 / (16.0 * PI * PI);
            mismatch = mismatch.max((cross[0] - scale * grad[0]).abs().max((cross[1] - scale * grad[1]).abs()));
            magnitude = magnitude.max(cross[0].hypot(cross[1]));
        }
    }
    (mismatch, magnitude)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exponential integral E1 by series (x < 1) or continued fraction.
    fn e1(x: f64) -> f64 {
        if x < 1.0 {
            let mut sum = -0.577_215_664_901_532_9 - x.ln();
            let mut term = 1.0;
            for k in 1..60 {
                term *= -x / k as f64;
                sum -= term / k as f64;
            }
            sum
        } else {
            // Lentz continued fraction
            let mut b = x + 1.0;
            let mut c = 1e300;
            let mut d = 1.0 / b;
            let mut h = d;
            for i in 1..200 {
                let a = -((i * i) as f64);
                b += 2.0;
                d = 1.0 / (a * d + b);
                c = b + a / c;
                let del = c * d;
                h *= del;
                if (del - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            h * (-x).exp()
        }
    }

    #[test]
    fn g_values() {
        assert!((eval_g(0.0, 0.0) - 0.079_577_471_545_947_67).abs() < 1e-15);
        assert!((eval_g(2.0, 0.0) - 0.029_274_915_762_159_5).abs() < 1e-15);
    }

    #[test]
    fn g_has_unit_mass() {
        let grid = Grid2D::new(256, 12.0).unwrap();
        let a = grid.sample(eval_g);
        assert!((grid.integrate(&a.view()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ug_values() {
        assert_eq!(eval_ug(0.0, 0.0), [0.0, 0.0, 0.0]);
        let v = eval_ug(2.0, 0.0);
        let expect = (1.0 - (-1f64).exp()) / (4.0 * PI);
        assert!(v[0].abs() < 1e-18 && (v[1] - expect).abs() < 1e-16);
        assert!((v[1] - 0.050_302_3).abs() < 1e-6);
    }

    #[test]
    fn ug_series_matches_closed_form_at_switch() {
        let r = UG_SERIES_RADIUS;
        let below = swirl(r * r * (1.0 - 1e-12));
        let closed = -(-r * r / 4.0).exp_m1() / (2.0 * PI * r * r);
        assert!((below - closed).abs() / closed < 1e-12);
    }

    #[test]
    fn swirl_derivatives_match_differences() {
        for &s in &[1e-3, 0.3, 3.9, 4.1, 20.0] {
            let [_, du, ddu] = swirl_derivs(s);
            let e = 1e-4 * s.max(1e-2);
            let fd1 = (swirl(s + e) - swirl(s - e)) / (2.0 * e);
            let fd2 = (swirl_derivs(s + e)[1] - swirl_derivs(s - e)[1]) / (2.0 * e);
            assert!((du - fd1).abs() < 1e-8 * du.abs().max(1e-6), "s = {s}");
            assert!((ddu - fd2).abs() < 1e-7 * ddu.abs().max(1e-6), "s = {s}");
        }
    }

    #[test]
    fn curl_of_ug_is_g() {
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.1), (2.0, 1.0), (-4.0, 5.0)] {
            assert!((ug_curl(x, y) - eval_g(x, y)).abs() < 1e-15);
        }
    }

    #[test]
    fn pressure_integral_matches_exponential_integrals() {
        // I(s) = E1(s/4) - E1(s/2), an independent closed form.
        for &s in &[1e-6, 0.1, 1.0, 4.0, 10.0, 40.0, 120.0] {
            let q = pressure_integral(s).unwrap();
            let exact = e1(s / 4.0) - e1(s / 2.0);
            // The cutoff at r = 200 drops a tail below 1e-23.
            assert!((q - exact).abs() <= 1e-10 * exact.abs() + 1e-22, "s = {s}: {q} vs {exact}");
        }
        assert!((pressure_integral(0.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn burgers_at_origin() {
        let p = StrainParams::unit(2.0, 3.0).unwrap();
        let s = eval_burgers([0.0; 3], &p, 2.0).unwrap();
        assert_eq!(s.velocity, [0.0; 3]);
        assert!((s.vorticity[2] - 3.0 * 2.0 / (4.0 * PI)).abs() < 1e-15);
        let p0 = -9.0 * 2.0 * std::f64::consts::LN_2 / (16.0 * PI * PI);
        assert!((s.pressure - p0).abs() < 1e-13);
    }

    #[test]
    fn singular_burgers_rejects_blowup_time() {
        let p = StrainParams::unit(2.0, 1.0).unwrap();
        assert!(eval_singular_burgers([0.0; 3], 1.0, &p).is_err());
        assert!(eval_singular_burgers([0.0; 3], 2.0, &p).is_err());
    }

    #[test]
    fn singular_burgers_at_time_zero_is_alpha_g() {
        let p = StrainParams::unit(2.0, 4.0 * PI).unwrap();
        for &(x, y) in &[(0.0, 0.0), (1.0, -0.5), (3.0, 2.0)] {
            let s = eval_singular_burgers([x, y, 0.7], 0.0, &p).unwrap();
            assert_eq!(s.vorticity[2], 4.0 * PI * eval_g(x, y));
        }
    }

    #[test]
    fn strain_rate_equals_half_peak_vorticity_in_matched_case() {
        let mu = 2.0;
        let alpha = 4.0 * PI * mu / (mu - 1.0);
        let p = StrainParams::unit(mu, alpha).unwrap();
        for &t in &[0.0, 0.5, 0.9] {
            let peak = eval_singular_burgers([0.0; 3], t, &p).unwrap().vorticity[2];
            assert!((peak - alpha * p.beta(t).unwrap() / (4.0 * PI)).abs() < 1e-12 * peak);
            assert!((p.strain_rate(t).unwrap() - 0.5 * peak).abs() < 1e-12 * peak);
        }
    }

    #[test]
    fn parasitic_examples() {
        let (v, pr) = eval_parasitic([1.0, 2.0, 3.0], 0.3, |_| (0.0, 0.0));
        assert_eq!((v, pr), ([0.0; 3], 0.0));
        let (v, _) = eval_parasitic([1.0, 0.0, 0.0], 0.0, |t| (1.0 / (1.0 - t), 1.0 / (1.0 - t).powi(2)));
        assert_eq!(v, [-1.0, 0.0, 0.0]);
    }

    #[test]
    fn parasitic_residual_vanishes() {
        let flow = ParasiticFlow { rate: |t: f64| (t.sin(), t.cos()) };
        let grid = residual_grid(16, 8, 1.0).unwrap();
        let r = navier_stokes_residual(&flow, &grid, 0.7, FdOrder::Fourth).unwrap();
        assert!(r.max < 1e-8, "{r:?}");
    }

    #[test]
    fn oseen_identity_analytic() {
        let grid = Grid2D::new(128, 12.0).unwrap();
        assert!(oseen_identity_residual(&grid) < 1e-12);
        assert_eq!(oseen_operator_analytic(0.0, 0.0), [0.0, 0.0]);
    }

    #[test]
    fn oseen_identity_fd_is_second_order() {
        let coarse = oseen_identity_residual_fd(&Grid2D::new(240, 6.0).unwrap(), FdOrder::Second);
        let fine = oseen_identity_residual_fd(&Grid2D::new(480, 6.0).unwrap(), FdOrder::Second);
        let ratio = coarse / fine;
        assert!(coarse < 5e-3 && (ratio - 4.0).abs() < 0.5, "{coarse} {fine} {ratio}");
    }

    #[test]
    fn cross_term_is_pressure_gradient() {
        let grid = Grid2D::new(64, 8.0).unwrap();
        let (mismatch, magnitude) = ug_cross_curl_check(&grid);
        assert!(mismatch < 1e-15, "{mismatch}");
        assert!(magnitude > 1e-3);
    }

    #[test]
    fn two_velocity_paths_agree() {
        let p = StrainParams::unit(2.0, 2.5).unwrap();
        let sb = SingularBurgers::new(p);
        let t = 0.5;
        let b = p.beta(t).unwrap();
        let rho = p.strain_rate(t).unwrap();
        for &x in &[[0.3, -0.2, 0.1], [1.5, 2.0, -1.0]] {
            let v = sb.velocity(x, t);
            let direct = p.alpha() * (1.0 - (-b * (x[0] * x[0] + x[1] * x[1]) / 4.0).exp())
                / (2.0 * PI * (x[0] * x[0] + x[1] * x[1]));
            assert!((v[0] - (-rho * x[0] - direct * x[1])).abs() < 1e-14);
            assert!((v[1] - (-rho * x[1] + direct * x[0])).abs() < 1e-14);
        }
    }
}
