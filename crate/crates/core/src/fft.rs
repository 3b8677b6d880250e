//! Square 2D FFTs and frequency bookkeeping on top of `rustfft`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Forward/inverse FFT of an `n x n` row-major complex array (unnormalized).
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({})", self.n)
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform including the `1/n^2` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
        let s = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.n * self.n);
        plan.process(data);
        transpose_square(data, self.n);
        plan.process(data);
        transpose_square(data, self.n);
    }
}

fn transpose_square(a: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    a.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Angular frequencies in FFT order for `n` samples with spacing `h`.
pub fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
            m * dk
        })
        .collect()
}

/// Signed integer offset represented by FFT index `j` of an `n`-periodic array.
pub fn signed_index(j: usize, n: usize) -> isize {
    if j < n.div_ceil(2) {
        j as isize
    } else {
        j as isize - n as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let n = 12;
        let f = Fft2::new(n);
        let orig: Vec<Complex64> = (0..n * n).map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos())).collect();
        let mut a = orig.clone();
        f.forward(&mut a);
        f.inverse(&mut a);
        for (x, y) in a.iter().zip(&orig) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn single_mode() {
        let n = 8;
        let f = Fft2::new(n);
        let mut a: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                Complex64::from_polar(1.0, 2.0 * PI * (i as f64 + 3.0 * j as f64) / n as f64)
            })
            .collect();
        f.forward(&mut a);
        for (k, v) in a.iter().enumerate() {
            let e = if k == 1 * n + 3 { (n * n) as f64 } else { 0.0 };
            assert!((v.re - e).abs() < 1e-10 && v.im.abs() < 1e-10);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let k = wavenumbers(4, 0.5);
        assert_eq!(k.len(), 4);
        assert!((k[1] - PI).abs() < 1e-15 && (k[3] + PI).abs() < 1e-15);
        assert_eq!(signed_index(3, 4), -1);
    }
}
