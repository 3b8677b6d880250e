//! Lagrange interpolation on uniform grids. Four points per axis is the
//! bicubic case.

use crate::error::{LabError, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};

pub const BICUBIC: usize = 4;

/// What to do with samples requested beyond the last node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Values beyond the grid are zero (decayed fields).
    Zero,
    /// Values beyond the grid repeat the edge value.
    Constant,
    /// Points outside `[x_0, x_{n-1}]` are an error; stencils are shifted inside.
    Strict,
}

/// A uniform 1D node set `x0 + i h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis1 {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl Axis1 {
    pub fn new(x0: f64, h: f64, n: usize) -> Self {
        Self { x0, h, n }
    }

    pub fn last(&self) -> f64 {
        self.x0 + (self.n - 1) as f64 * self.h
    }

    /// Stencil start index and weights for position `x`.
    pub fn stencil(&self, x: f64, points: usize, edge: Edge) -> Result<(isize, Vec<f64>)> {
        let u = (x - self.x0) / self.h;
        let mut start = u.floor() as isize - (points as isize / 2 - 1);
        if edge == Edge::Strict {
            if !(x >= self.x0 - 1e-12 * self.h && x <= self.last() + 1e-12 * self.h) {
                return Err(LabError::OutOfGrid { x, y: f64::NAN });
            }
            start = start.clamp(0, self.n as isize - points as isize);
        }
        Ok((start, lagrange_weights(u - start as f64, points)))
    }

    fn fetch(&self, v: &ArrayView1<f64>, i: isize, edge: Edge) -> f64 {
        if i >= 0 && (i as usize) < self.n {
            v[i as usize]
        } else if edge == Edge::Constant {
            v[i.clamp(0, self.n as isize - 1) as usize]
        } else {
            0.0
        }
    }

    pub fn eval(&self, v: &ArrayView1<f64>, x: f64, points: usize, edge: Edge) -> Result<f64> {
        if edge == Edge::Constant {
            if x <= self.x0 {
                return Ok(v[0]);
            }
            if x >= self.last() {
                return Ok(v[self.n - 1]);
            }
        }
        let (start, w) = self.stencil(x, points, edge)?;
        Ok(w.iter().enumerate().map(|(k, wk)| wk * self.fetch(v, start + k as isize, edge)).sum())
    }
}

/// Weights of the Lagrange polynomial through nodes `0..points` at `t`.
pub fn lagrange_weights(t: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            (0..points)
                .filter(|&j| j != k)
                .map(|j| (t - j as f64) / (k as f64 - j as f64))
                .product()
        })
        .collect()
}

/// Interpolates a 2D array (axes share `axis`) at one point.
pub fn eval_2d(axis: &Axis1, a: &ArrayView2<f64>, x: f64, y: f64, points: usize, edge: Edge) -> Result<f64> {
    let strict_err = |e: LabError| match e {
        LabError::OutOfGrid { .. } => LabError::OutOfGrid { x, y },
        other => other,
    };
    let (si, wi) = axis.stencil(x, points, edge).map_err(strict_err)?;
    let (sj, wj) = axis.stencil(y, points, edge).map_err(strict_err)?;
    let n = axis.n as isize;
    let mut acc = 0.0;
    for (a_i, wa) in wi.iter().enumerate() {
        let i = si + a_i as isize;
        if !(0..n).contains(&i) {
            continue;
        }
        for (b_j, wb) in wj.iter().enumerate() {
            let j = sj + b_j as isize;
            if (0..n).contains(&j) {
                acc += wa * wb * a[[i as usize, j as usize]];
            }
        }
    }
    Ok(acc)
}

/// Samples `f(s x_i, s x_j)` on the same grid with zero extension, one
/// axis at a time.
pub fn dilate_2d(axis: &Axis1, a: &Array2<f64>, s: f64, points: usize) -> Array2<f64> {
    let n = axis.n;
    let stencils: Vec<(isize, Vec<f64>)> = (0..n)
        .map(|i| axis.stencil(s * (axis.x0 + i as f64 * axis.h), points, Edge::Zero).expect("zero edge never fails"))
        .collect();
    let apply = |src: &Array2<f64>| {
        let mut out = Array2::zeros((n, n));
        for (i, (start, w)) in stencils.iter().enumerate() {
            for (k, wk) in w.iter().enumerate() {
                let r = start + k as isize;
                if r >= 0 && (r as usize) < n {
                    let row = src.row(r as usize);
                    out.row_mut(i).scaled_add(*wk, &row);
                }
            }
        }
        out
    };
    let rows = apply(a);
    apply(&rows.t().to_owned()).t().to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_cubics_exactly() {
        let ax = Axis1::new(-2.0, 0.25, 17);
        let v: Vec<f64> = (0..17).map(|i| {
            let x = -2.0 + 0.25 * i as f64;
            x * x * x - 2.0 * x + 1.0
        }).collect();
        let view = ArrayView1::from(&v);
        for x in [-1.9, -0.3, 0.01, 1.62] {
            let got = ax.eval(&view, x, BICUBIC, Edge::Strict).unwrap();
            assert!((got - (x * x * x - 2.0 * x + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn strict_edge_rejects_outside() {
        let ax = Axis1::new(0.0, 1.0, 8);
        let v = vec![0.0; 8];
        assert!(ax.eval(&ArrayView1::from(&v), 7.5, BICUBIC, Edge::Strict).is_err());
        assert!(ax.eval(&ArrayView1::from(&v), 7.0, BICUBIC, Edge::Strict).is_ok());
    }

    #[test]
    fn constant_edge_extends() {
        let ax = Axis1::new(0.0, 1.0, 8);
        let v: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(ax.eval(&ArrayView1::from(&v), 20.0, BICUBIC, Edge::Constant).unwrap(), 7.0);
        assert_eq!(ax.eval(&ArrayView1::from(&v), -3.0, BICUBIC, Edge::Constant).unwrap(), 0.0);
    }

    #[test]
    fn dilation_matches_pointwise() {
        let n = 64;
        let ax = Axis1::new(-8.0, 0.25, n);
        let f = |x: f64, y: f64| (-(x * x + 2.0 * y * y) / 4.0).exp();
        let a = Array2::from_shape_fn((n, n), |(i, j)| f(-8.0 + 0.25 * i as f64, -8.0 + 0.25 * j as f64));
        let d = dilate_2d(&ax, &a, 1.3, 8);
        for (i, j) in [(10, 20), (32, 32), (40, 5)] {
            let (x, y) = (-8.0 + 0.25 * i as f64, -8.0 + 0.25 * j as f64);
            assert!((d[[i, j]] - f(1.3 * x, 1.3 * y)).abs() < 1e-6);
            let e = eval_2d(&ax, &a.view(), 1.3 * x, 1.3 * y, 8, Edge::Zero).unwrap();
            assert!((d[[i, j]] - e).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn weights_partition_unity(t in 0.0f64..1.0, half in 1usize..5) {
            let s: f64 = lagrange_weights(t + (half - 1) as f64, 2 * half).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
