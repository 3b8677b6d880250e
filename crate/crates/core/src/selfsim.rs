//! Change of variables between physical `(x, t)` and self-similar
//! `(xi, tau)` frames: `tau = -(mu-1) ln((T*-t)/T*)`, `xi = sqrt(beta) x`,
//! `u = sqrt(beta) V`, `omega = beta W`.

use crate::error::{LabError, Result};
use crate::grid::{Grid3D, VectorField3D};
use crate::interp::{eval_2d, Axis1, Edge};
use crate::params::StrainParams;
use ndarray::Axis;
use serde::{Deserialize, Serialize};

pub fn to_selfsim_time(t: f64, params: &StrainParams) -> Result<f64> {
    params.check_time(t)?;
    if t < 0.0 {
        return Err(LabError::param("t", format!("must be nonnegative, got {t}")));
    }
    Ok(-(params.mu() - 1.0) * (-t / params.t_star()).ln_1p())
}

pub fn from_selfsim_time(tau: f64, params: &StrainParams) -> Result<f64> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(LabError::param("tau", format!("must be nonnegative and finite, got {tau}")));
    }
    Ok(-params.t_star() * (-tau / (params.mu() - 1.0)).exp_m1())
}

/// `beta(t)` at the physical time matching `tau`.
pub fn beta_at_tau(tau: f64, params: &StrainParams) -> Result<f64> {
    params.beta(from_selfsim_time(tau, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Physical,
    SelfSimilar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramePoint {
    frame: Frame,
    coords: [f64; 3],
    time: f64,
}

impl FramePoint {
    pub fn physical(x: [f64; 3], t: f64, params: &StrainParams) -> Result<Self> {
        to_selfsim_time(t, params)?;
        Ok(Self { frame: Frame::Physical, coords: x, time: t })
    }

    pub fn selfsim(xi: [f64; 3], tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(LabError::param("tau", format!("must be nonnegative, got {tau}")));
        }
        Ok(Self { frame: Frame::SelfSimilar, coords: xi, time: tau })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn coords(&self) -> [f64; 3] {
        self.coords
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn to_selfsim(&self, params: &StrainParams) -> Result<Self> {
        match self.frame {
            Frame::SelfSimilar => Ok(*self),
            Frame::Physical => {
                let sb = params.beta(self.time)?.sqrt();
                Self::selfsim(self.coords.map(|c| c * sb), to_selfsim_time(self.time, params)?)
            }
        }
    }

    pub fn to_physical(&self, params: &StrainParams) -> Result<Self> {
        match self.frame {
            Frame::Physical => Ok(*self),
            Frame::SelfSimilar => {
                let t = from_selfsim_time(self.time, params)?;
                let sb = params.beta(t)?.sqrt();
                Self::physical(self.coords.map(|c| c / sb), t, params)
            }
        }
    }
}

/// Samples a 3D field at one point: interpolation of order `points` in
/// `xi'` (out-of-grid is an error), linear in `xi3` with constant extension.
pub fn sample_field(f: &VectorField3D, p: [f64; 3], points: usize) -> Result<[f64; 3]> {
    let g = f.grid;
    let axis = Axis1::new(-g.horizontal().radius(), g.horizontal().h(), g.n());
    let u = ((p[2] + g.half_height()) / g.h3()).clamp(0.0, (g.n3() - 1) as f64);
    let k0 = (u.floor() as usize).min(g.n3().saturating_sub(2));
    let t = u - k0 as f64;
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let lo = eval_2d(&axis, &f.comps[c].index_axis(Axis(0), k0), p[0], p[1], points, Edge::Strict)?;
        let hi = eval_2d(&axis, &f.comps[c].index_axis(Axis(0), k0 + 1), p[0], p[1], points, Edge::Strict)?;
        *o = (1.0 - t) * lo + t * hi;
    }
    Ok(out)
}

/// Resamples `out(x) = scale * f(stretch * x)` onto `target`. `points` is
/// the horizontal stencil width; [`BICUBIC`](crate::interp::BICUBIC) is the default choice.
fn rescale_field(f: &VectorField3D, target: Grid3D, stretch: f64, scale: f64, points: usize) -> Result<VectorField3D> {
    let c = target.horizontal().coords();
    let c3 = target.coords3();
    let mut out = VectorField3D::zeros(target);
    for k in 0..target.n3() {
        for i in 0..target.n() {
            for j in 0..target.n() {
                let v = sample_field(f, [stretch * c[i], stretch * c[j], stretch * c3[k]], points)?;
                for (a, comp) in out.comps.iter_mut().enumerate() {
                    comp[[k, i, j]] = scale * v[a];
                }
            }
        }
    }
    Ok(out)
}

/// `omega(x, t) = beta W(sqrt(beta) x, tau)` on the physical grid `target`.
pub fn pullback_vorticity(w: &VectorField3D, tau: f64, params: &StrainParams, target: Grid3D, points: usize) -> Result<VectorField3D> {
    let b = beta_at_tau(tau, params)?;
    rescale_field(w, target, b.sqrt(), b, points)
}

/// Inverse of [`pullback_vorticity`]: `W(xi, tau) = omega(xi/sqrt(beta), t)/beta`.
pub fn pushforward_vorticity(omega: &VectorField3D, t: f64, params: &StrainParams, target: Grid3D, points: usize) -> Result<VectorField3D> {
    let b = params.beta(t)?;
    rescale_field(omega, target, 1.0 / b.sqrt(), 1.0 / b, points)
}

/// `u(x, t) = sqrt(beta) V(sqrt(beta) x, tau)`.
pub fn pullback_velocity(v: &VectorField3D, tau: f64, params: &StrainParams, target: Grid3D, points: usize) -> Result<VectorField3D> {
    let sb = beta_at_tau(tau, params)?.sqrt();
    rescale_field(v, target, sb, sb, points)
}

pub fn pushforward_velocity(u: &VectorField3D, t: f64, params: &StrainParams, target: Grid3D, points: usize) -> Result<VectorField3D> {
    let sb = params.beta(t)?.sqrt();
    rescale_field(u, target, 1.0 / sb, 1.0 / sb, points)
}

/// Largest pointwise Euclidean magnitude of a vector field.
pub fn sup_norm(f: &VectorField3D) -> f64 {
    let mut m: f64 = 0.0;
    for ((a, b), c) in f.comps[0].iter().zip(f.comps[1].iter()).zip(f.comps[2].iter()) {
        m = m.max((a * a + b * b + c * c).sqrt());
    }
    m
}
