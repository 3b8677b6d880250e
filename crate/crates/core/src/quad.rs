//! Quadrature rules: adaptive Gauss-Kronrod on finite intervals and
//! Gauss-Hermite for the weight `exp(-x^2/4)`.

use crate::error::{LabError, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel: (integral, error estimate).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    for j in 0..7 {
        let dx = hw * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * hw, ((rk - rg) * hw).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let p = heap.pop().expect("heap never empties");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // Recompute sums from scratch to shed accumulated rounding before judging.
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    if err <= abs_tol.max(rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(LabError::Quadrature(format!("error estimate {err:.3e} on [{a}, {b}]")))
    }
}

/// Gauss-Hermite rule for `int exp(-x^2/4) f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let b = (2.0 * k as f64).sqrt();
            jac[(k, k - 1)] = b;
            jac[(k - 1, k)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut nodes: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let p = hermite_values(*x, n + 1);
                let dp = (n as f64 / 2.0).sqrt() * p[n - 1];
                *x -= p[n] / dp;
            }
        }
        let weights = nodes
            .iter()
            .map(|&x| 1.0 / hermite_values(x, n).iter().map(|p| p * p).sum::<f64>())
            .collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Orthonormal polynomials `p_0..p_{count-1}` for the weight `exp(-x^2/4)`,
/// i.e. `He_k(x/sqrt 2) / sqrt(2 sqrt(pi) k!)`.
pub fn hermite_values(x: f64, count: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(count);
    if count == 0 {
        return p;
    }
    p.push(1.0 / (2.0 * std::f64::consts::PI.sqrt()).sqrt());
    if count > 1 {
        p.push(x / 2f64.sqrt() * p[0]);
    }
    for k in 1..count.saturating_sub(1) {
        let next = (x / 2f64.sqrt() * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_on_smooth_integrand() {
        let v = integrate_adaptive(|x| x.exp(), 0.0, 1.0, 1e-13, 0.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn kronrod_on_peaked_integrand() {
        let v = integrate_adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 0.0).unwrap();
        let exact = 2.0 * (1.0 / 1e-2f64).atan() / 1e-2;
        assert!(((v - exact) / exact).abs() < 1e-11);
    }

    #[test]
    fn hermite_rule_integrates_moments() {
        let gh = GaussHermite::new(30);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        // int exp(-x^2/4) x^(2k) dx = 2 sqrt(pi) * 2^k (2k-1)!!
        let mut dfact = 1.0;
        for k in 0..20 {
            if k > 0 {
                dfact *= (2 * k - 1) as f64;
            }
            let exact = 2.0 * sqrt_pi * 2f64.powi(k) * dfact;
            let q: f64 = gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x.powi(2 * k)).sum();
            assert!(((q - exact) / exact).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn hermite_polynomials_are_orthonormal() {
        let gh = GaussHermite::new(60);
        for j in 0..40 {
            for k in 0..40 {
                let s: f64 = gh
                    .nodes
                    .iter()
                    .zip(&gh.weights)
                    .map(|(&x, w)| {
                        let p = hermite_values(x, 40);
                        w * p[j] * p[k]
                    })
                    .sum();
                let e = if j == k { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-11, "({j},{k}) -> {s}");
            }
        }
    }
}
