//! Tensor Hermite basis `phi_k(xi) = h_{k1}(xi1) h_{k2}(xi2)` with
//! `h_k = exp(-x^2/4) p_k`, orthonormal for the Gaussian-weighted product
//! `<a, b> = int exp(|xi|^2/4) a b`. `L_h` is diagonal here with
//! eigenvalue `-(k1+k2)/2`.

use crate::error::{LabError, Result};
use crate::fields::{eval_ug, ug_jacobian};
use crate::grid::Grid2D;
use crate::quad::{hermite_values, GaussHermite};
use ndarray::{s, Array1, Array2};

/// Coefficients `c[k1, k2]` of a scalar function, degree below `K` per axis.
pub type Coeffs = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermiteBasis {
    k: usize,
}

impl HermiteBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(LabError::param("K", format!("basis needs at least 2 modes per axis, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.k * self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, k1: usize, k2: usize) -> usize {
        k1 * self.k + k2
    }

    pub fn degrees(&self, idx: usize) -> (usize, usize) {
        (idx / self.k, idx % self.k)
    }

    /// Diagonal of `L_h`.
    pub fn lh_diagonal(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.len(), |i| {
            let (a, b) = self.degrees(i);
            -((a + b) as f64) / 2.0
        })
    }

    /// Evaluates `sum c_k phi_k` on a grid.
    pub fn synthesize(&self, c: &Coeffs, grid: &Grid2D) -> Array2<f64> {
        let h = hermite_function_table(&grid.coords(), c.nrows().max(c.ncols()));
        let rows = h.slice(s![..c.nrows(), ..]);
        let cols = h.slice(s![..c.ncols(), ..]);
        rows.t().dot(c).dot(&cols)
    }
}

/// `h_k(x_i)` for `k < count`, shape `(count, xs.len())`.
pub fn hermite_function_table(xs: &[f64], count: usize) -> Array2<f64> {
    let mut t = Array2::zeros((count, xs.len()));
    for (i, &x) in xs.iter().enumerate() {
        let e = (-x * x / 4.0).exp();
        for (k, p) in hermite_values(x, count).into_iter().enumerate() {
            t[[k, i]] = e * p;
        }
    }
    t
}

/// Coefficients of `g = exp(-|xi|^2/4)/(4 pi)`.
pub fn g_coeffs(k: usize) -> Coeffs {
    let mut c = Array2::zeros((k, k));
    c[[0, 0]] = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
    c
}

/// Coefficients of `d_i g`.
pub fn grad_g_coeffs(k: usize, axis: usize) -> Coeffs {
    deriv(&g_coeffs(k), axis)
}

// Exact one-dimensional ladder relations, applied along axis 0 or 1.
// x h_k = sqrt2 (sqrt(k+1) h_{k+1} + sqrt(k) h_{k-1})
// d h_k = -sqrt((k+1)/2) h_{k+1}
// (d + x/2) h_k = sqrt(k/2) h_{k-1}
fn ladder(c: &Coeffs, axis: usize, up: impl Fn(usize) -> f64, down: impl Fn(usize) -> f64) -> Coeffs {
    let mut out = Array2::zeros(c.dim());
    let len = c.len_of(ndarray::Axis(axis));
    for k in 0..len {
        let src = c.index_axis(ndarray::Axis(axis), k).to_owned();
        if k + 1 < len {
            out.index_axis_mut(ndarray::Axis(axis), k + 1).scaled_add(up(k), &src);
        }
        if k >= 1 {
            out.index_axis_mut(ndarray::Axis(axis), k - 1).scaled_add(down(k), &src);
        }
    }
    out
}

/// Multiplication by `xi_{axis+1}`; exact while the top degree stays below `K`.
pub fn mul_x(c: &Coeffs, axis: usize) -> Coeffs {
    let r2 = 2f64.sqrt();
    ladder(c, axis, |k| r2 * ((k + 1) as f64).sqrt(), |k| r2 * (k as f64).sqrt())
}

pub fn deriv(c: &Coeffs, axis: usize) -> Coeffs {
    ladder(c, axis, |k| -(((k + 1) as f64) / 2.0).sqrt(), |_| 0.0)
}

/// `d + xi/2`, minus the adjoint of `d` in the weighted product.
pub fn lower(c: &Coeffs, axis: usize) -> Coeffs {
    ladder(c, axis, |_| 0.0, |k| (k as f64 / 2.0).sqrt())
}

pub fn apply_lh(c: &Coeffs) -> Coeffs {
    Array2::from_shape_fn(c.dim(), |(a, b)| -((a + b) as f64) / 2.0 * c[[a, b]])
}

pub fn inner(a: &Coeffs, b: &Coeffs) -> f64 {
    (a * b).sum()
}

/// Gauss-Hermite tables for Galerkin entries: `p_k` at the nodes, weighted.
#[derive(Debug, Clone)]
pub struct GalerkinQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `p_k(x_a)` for `k <= K` (one extra row for derivatives).
    pub p: Array2<f64>,
}

impl GalerkinQuadrature {
    pub fn new(k: usize, nodes: usize) -> Self {
        let gh = GaussHermite::new(nodes);
        let mut p = Array2::zeros((k + 1, nodes));
        for (a, &x) in gh.nodes.iter().enumerate() {
            for (j, v) in hermite_values(x, k + 1).into_iter().enumerate() {
                p[[j, a]] = v;
            }
        }
        Self { nodes: gh.nodes, weights: gh.weights, p }
    }

    /// Default rule: enough nodes that the non-polynomial factors of the
    /// Oseen field are integrated to roundoff.
    pub fn for_modes(k: usize) -> Self {
        Self::new(k, 2 * k + 48)
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Rows `q_k(x_a)` for the factor along one axis: `p_k` or the
    /// polynomial part of `d h_k`, i.e. `-sqrt((k+1)/2) p_{k+1}`.
    fn factor(&self, k: usize, derivative: bool) -> Array2<f64> {
        if derivative {
            Array2::from_shape_fn((k, self.len()), |(j, a)| -(((j + 1) as f64) / 2.0).sqrt() * self.p[[j + 1, a]])
        } else {
            self.p.slice(s![..k, ..]).to_owned()
        }
    }

    /// `E[(j1,j2),(k1,k2)] = int exp(-r^2/4) p_j1 p_j2 F q1_k1 q2_k2`,
    /// the Galerkin matrix of `F` times (`d1`, `d2` or identity).
    pub fn contract(&self, k: usize, f: impl Fn(f64, f64) -> f64, d1: bool, d2: bool) -> Array2<f64> {
        let nq = self.len();
        let p = self.p.slice(s![..k, ..]);
        let q1 = self.factor(k, d1);
        let q2 = self.factor(k, d2);
        let fw = Array2::from_shape_fn((nq, nq), |(a, b)| {
            self.weights[a] * self.weights[b] * f(self.nodes[a], self.nodes[b])
        });
        // t[(j1,k1), a] = p_j1(x_a) q1_k1(x_a)
        let t = Array2::from_shape_fn((k * k, nq), |(r, a)| p[[r / k, a]] * q1[[r % k, a]]);
        let m = t.dot(&fw);
        let sq = Array2::from_shape_fn((k * k, nq), |(r, b)| p[[r / k, b]] * q2[[r % k, b]]);
        let e4 = m.dot(&sq.t());
        // e4[(j1,k1),(j2,k2)] -> out[(j1,j2),(k1,k2)]
        Array2::from_shape_fn((k * k, k * k), |(row, col)| {
            let (j1, j2) = (row / k, row % k);
            let (k1, k2) = (col / k, col % k);
            e4[[j1 * k + k1, j2 * k + k2]]
        })
    }
}

/// Galerkin matrices of the Oseen-dependent pieces, assembled once per `K`
/// and restricted to smaller bases by slicing (the basis is nested).
#[derive(Debug, Clone)]
pub struct OseenMatrices {
    k: usize,
    /// `Lambda_1 = U^G . grad` on scalars.
    pub transport: Array2<f64>,
    /// `jac[i][l]`: multiplication by `d_l U^G_i`.
    pub jac: [[Array2<f64>; 2]; 2],
}

impl OseenMatrices {
    pub fn assemble(k: usize) -> Self {
        Self::assemble_with(k, &GalerkinQuadrature::for_modes(k))
    }

    pub fn assemble_with(k: usize, q: &GalerkinQuadrature) -> Self {
        let t1 = q.contract(k, |x, y| eval_ug(x, y)[0], true, false);
        let t2 = q.contract(k, |x, y| eval_ug(x, y)[1], false, true);
        let jac = [0, 1].map(|i| [0, 1].map(|l| q.contract(k, |x, y| ug_jacobian(x, y)[i][l], false, false)));
        Self { k, transport: t1 + t2, jac }
    }

    pub fn modes(&self) -> usize {
        self.k
    }

    /// Block indices of the basis of `k` modes inside this one.
    pub fn sub_indices(&self, k: usize) -> Vec<usize> {
        (0..k).flat_map(|a| (0..k).map(move |b| a * self.k + b)).collect()
    }

    fn restrict(&self, m: &Array2<f64>, k: usize) -> Array2<f64> {
        let idx = self.sub_indices(k);
        Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| m[[idx[r], idx[c]]])
    }

    /// `B = Lambda_1 - tilde Lambda_2` on two-component fields, components
    /// stacked `[w1 modes, w2 modes]`.
    pub fn horizontal_coupling(&self, k: usize) -> Array2<f64> {
        let n = k * k;
        let t = self.restrict(&self.transport, k);
        let mut b = Array2::zeros((2 * n, 2 * n));
        for i in 0..2 {
            for l in 0..2 {
                let mut blk = b.slice_mut(s![i * n..(i + 1) * n, l * n..(l + 1) * n]);
                blk -= &self.restrict(&self.jac[i][l], k);
                if i == l {
                    blk += &t;
                }
            }
        }
        b
    }

    pub fn transport_restricted(&self, k: usize) -> Array2<f64> {
        self.restrict(&self.transport, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{eval_g, grad_g, swirl_derivs};
    use rand::{Rng, SeedableRng};

    fn grid() -> Grid2D {
        Grid2D::new(128, 14.0).unwrap()
    }

    fn max_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn gaussian_and_gradient_coefficients() {
        let b = HermiteBasis::new(6).unwrap();
        let g = grid();
        assert!(max_diff(&b.synthesize(&g_coeffs(6), &g), &g.sample(eval_g)) < 1e-15);
        let d1 = b.synthesize(&grad_g_coeffs(6, 0), &g);
        assert!(max_diff(&d1, &g.sample(|x, y| grad_g(x, y)[0])) < 1e-15);
        let d2 = b.synthesize(&grad_g_coeffs(6, 1), &g);
        assert!(max_diff(&d2, &g.sample(|x, y| grad_g(x, y)[1])) < 1e-15);
    }

    #[test]
    fn ladder_relations_match_grid() {
        let b = HermiteBasis::new(10).unwrap();
        let g = grid();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut c = Array2::zeros((10, 10));
        for a in 0..6 {
            for bb in 0..6 {
                c[[a, bb]] = rng.gen_range(-1.0..1.0);
            }
        }
        let f = b.synthesize(&c, &g);
        let xs = g.coords();
        let xf = Array2::from_shape_fn(f.dim(), |(i, j)| xs[i] * f[[i, j]]);
        assert!(max_diff(&b.synthesize(&mul_x(&c, 0), &g), &xf) < 1e-12);
        // lower = d + x/2, so lower - mul_x/2 = d.
        let d_from_lower = lower(&c, 1) - mul_x(&c, 1) * 0.5;
        assert!(max_diff(&d_from_lower, &deriv(&c, 1)) < 1e-13);
    }

    #[test]
    fn lh_eigenvalues_from_grid_operator() {
        // L_h phi = Lap phi + xi/2 . grad phi + phi via ladder algebra.
        let mut c = Array2::zeros((8, 8));
        c[[2, 3]] = 1.0;
        let lap = deriv(&deriv(&c, 0), 0) + deriv(&deriv(&c, 1), 1);
        let drift = (mul_x(&deriv(&c, 0), 0) + mul_x(&deriv(&c, 1), 1)) * 0.5;
        let lh = lap + drift + &c;
        assert!(max_diff(&lh, &apply_lh(&c)) < 1e-13);
        assert_eq!(apply_lh(&c)[[2, 3]], -2.5);
    }

    #[test]
    fn transport_is_skew_symmetric() {
        let m = OseenMatrices::assemble(12);
        let t = &m.transport;
        assert!(max_diff(&(t + &t.t()), &Array2::zeros(t.dim())) < 1e-10);
        assert!(t.iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn transport_annihilates_radial_gaussian() {
        let m = OseenMatrices::assemble(12);
        let col = m.transport.column(0);
        assert!(col.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn quadrature_is_converged() {
        let k = 16;
        let a = OseenMatrices::assemble_with(k, &GalerkinQuadrature::new(k, 2 * k + 48));
        let b = OseenMatrices::assemble_with(k, &GalerkinQuadrature::new(k, 2 * k + 96));
        assert!(max_diff(&a.transport, &b.transport) < 1e-13);
        assert!(max_diff(&a.jac[0][1], &b.jac[0][1]) < 1e-13);
    }

    #[test]
    fn nested_restriction_matches_direct_assembly() {
        let big = OseenMatrices::assemble(12);
        let q = GalerkinQuadrature::for_modes(12);
        let small = OseenMatrices::assemble_with(8, &q);
        assert!(max_diff(&big.transport_restricted(8), &small.transport) < 1e-15);
    }

    #[test]
    fn strain_quadratic_form_by_pointwise_quadrature() {
        // <tilde Lambda_2 w, w> = 2 int e^{r^2/4} u'(s) (xi.w)(xi^perp.w).
        let k = 10;
        let m = OseenMatrices::assemble(k);
        let b = m.horizontal_coupling(k);
        let n = k * k;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let w = Array1::from_shape_fn(2 * n, |_| rng.gen_range(-1.0..1.0));
        let lhs = -w.dot(&b.dot(&w));
        let q = GalerkinQuadrature::new(k, 80);
        let (mut rhs, nq) = (0.0, q.nodes.len());
        for a in 0..nq {
            for c in 0..nq {
                let (x, y) = (q.nodes[a], q.nodes[c]);
                let mut wv = [0.0; 2];
                for comp in 0..2 {
                    for i in 0..n {
                        let (k1, k2) = (i / k, i % k);
                        wv[comp] += w[comp * n + i] * q.p[[k1, a]] * q.p[[k2, c]];
                    }
                }
                let du = swirl_derivs(x * x + y * y)[1];
                // weight e^{-r^2/4} absorbs one Gaussian factor of each w; the
                // other cancels against e^{r^2/4}.
                rhs += q.weights[a] * q.weights[c] * 2.0 * du * (x * wv[0] + y * wv[1]) * (-y * wv[0] + x * wv[1]);
            }
        }
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()), "{lhs} {rhs}");
    }
}
