//! Pointwise appliers of the three-dimensional linearization
//! `L_mu - alpha Lambda` around the self-similar Burgers profile, its
//! `mu -> infinity` limit, the vertical-derivative commutator and the
//! projection onto the slowest modes `d_1 G`, `d_2 G`.

use crate::biot_savart::{BiotSavart3D, BsConfig};
use crate::error::{LabError, Result};
use crate::fields::{eval_g, eval_ug, grad_g, ug_jacobian};
use crate::grid::{Grid3D, VectorField3D};
use crate::params::StrainParams;
use crate::spectral::SpectralOps3D;
use ndarray::{Array2, Array3, Axis, Zip};

/// Drift coefficient and per-component constants of the linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPart {
    /// Coefficient of `-xi_3 d_3`.
    pub chi: f64,
    /// Diagonal of the constant matrix block.
    pub diag: [f64; 3],
}

impl LinearPart {
    /// `(mu M - I)/(mu - 1)` with `M = diag(-1/2, -1/2, 1)`.
    pub fn strained(p: &StrainParams) -> Self {
        let s = p.horizontal_shift();
        Self { chi: p.chi(), diag: [-s, -s, 1.0] }
    }

    /// The limit operator `L`: `chi = 1`, block `M`.
    pub fn limit() -> Self {
        Self { chi: 1.0, diag: [-0.5, -0.5, 1.0] }
    }
}

/// Profile quantities sampled once on the horizontal grid.
#[derive(Debug, Clone)]
pub struct Profile {
    pub g: Array2<f64>,
    pub grad_g: [Array2<f64>; 2],
    pub ug: [Array2<f64>; 2],
    /// `jac[i][l] = d_l U^G_i`.
    pub jac: [[Array2<f64>; 2]; 2],
}

impl Profile {
    pub fn sample(grid: &Grid3D) -> Self {
        let hg = grid.horizontal();
        let comp = |f: &dyn Fn(f64, f64) -> f64| hg.sample(f);
        Self {
            g: comp(&eval_g),
            grad_g: [comp(&|x, y| grad_g(x, y)[0]), comp(&|x, y| grad_g(x, y)[1])],
            ug: [comp(&|x, y| eval_ug(x, y)[0]), comp(&|x, y| eval_ug(x, y)[1])],
            jac: [
                [comp(&|x, y| ug_jacobian(x, y)[0][0]), comp(&|x, y| ug_jacobian(x, y)[0][1])],
                [comp(&|x, y| ug_jacobian(x, y)[1][0]), comp(&|x, y| ug_jacobian(x, y)[1][1])],
            ],
        }
    }
}

/// Multiplies every slice of `a` pointwise by the 2D array `m`.
pub fn mul_slices(a: &Array3<f64>, m: &Array2<f64>) -> Array3<f64> {
    let mut out = a.clone();
    for mut s in out.axis_iter_mut(Axis(0)) {
        s *= m;
    }
    out
}

/// Applies `L_mu - alpha Lambda` (or `L - alpha Lambda`) on a 3D grid with
/// spectral derivatives and `V = bs3d(W)`.
pub struct LinearizedOperator3D {
    grid: Grid3D,
    alpha: f64,
    linear: LinearPart,
    ops: SpectralOps3D,
    bs: BiotSavart3D,
    profile: Profile,
    xs: Vec<f64>,
    zs: Vec<f64>,
}

impl std::fmt::Debug for LinearizedOperator3D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LinearizedOperator3D(alpha = {}, {:?})", self.alpha, self.linear)
    }
}

impl LinearizedOperator3D {
    pub fn new(grid: Grid3D, params: &StrainParams) -> Result<Self> {
        Self::with_linear_part(grid, params.alpha(), LinearPart::strained(params))
    }

    pub fn with_linear_part(grid: Grid3D, alpha: f64, linear: LinearPart) -> Result<Self> {
        Ok(Self {
            grid,
            alpha,
            linear,
            ops: SpectralOps3D::new(&grid),
            bs: BiotSavart3D::new(grid, BsConfig::default())?,
            profile: Profile::sample(&grid),
            xs: grid.horizontal().coords(),
            zs: grid.coords3(),
        })
    }

    pub fn grid(&self) -> Grid3D {
        self.grid
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn ops(&self) -> &SpectralOps3D {
        &self.ops
    }

    pub fn biot_savart(&self) -> &BiotSavart3D {
        &self.bs
    }

    fn check(&self, w: &VectorField3D) -> Result<()> {
        if !w.grid.same_as(&self.grid) {
            return Err(LabError::GridMismatch("operator built for another grid".into()));
        }
        if w.weighted_repr {
            return Err(LabError::param("W", "operator expects plain samples"));
        }
        Ok(())
    }

    /// Linear part alone, no circulation terms.
    pub fn apply_linear(&self, w: &VectorField3D) -> Result<VectorField3D> {
        self.check(w)?;
        let mut out = VectorField3D::zeros(self.grid);
        for c in 0..3 {
            out.comps[c] = self.linear_component(&w.comps[c], self.linear.diag[c]);
        }
        Ok(out)
    }

    fn linear_component(&self, a: &Array3<f64>, constant: f64) -> Array3<f64> {
        let [d1, d2, lap] = self.ops.horizontal_derivs(a);
        let [dz, dzz] = self.ops.vertical_derivs(a);
        let chi = self.linear.chi;
        let mut out = lap + dzz + a * constant;
        Zip::indexed(&mut out).and(&d1).and(&d2).and(&dz).for_each(|(k, i, j), o, &a1, &a2, &a3| {
            *o += 0.5 * (self.xs[i] * a1 + self.xs[j] * a2) - chi * self.zs[k] * a3;
        });
        out
    }

    /// `Lambda W` given `W` and its velocity `V`.
    pub fn lambda_with_velocity(&self, w: &VectorField3D, v: &VectorField3D) -> VectorField3D {
        let grads = [0, 1, 2].map(|c| self.ops.horizontal_gradient(&w.comps[c]));
        let dzv = [0, 1, 2].map(|c| self.ops.vertical_derivative(&v.comps[c]));
        lambda_from_parts(&self.profile, w, &grads, v, &dzv)
    }

    pub fn apply_lambda(&self, w: &VectorField3D) -> Result<VectorField3D> {
        self.check(w)?;
        let v = self.bs.apply(w)?;
        Ok(self.lambda_with_velocity(w, &v))
    }

    /// `(L_mu - alpha Lambda) W`.
    pub fn apply(&self, w: &VectorField3D) -> Result<VectorField3D> {
        let mut out = self.apply_linear(w)?;
        if self.alpha != 0.0 {
            out.axpy(-self.alpha, &self.apply_lambda(w)?)?;
        }
        Ok(out)
    }
}

/// `U^G . grad W + V . grad G - W . grad U^G - G . grad V` from the
/// horizontal gradients of `W` and the vertical derivatives of `V`.
pub fn lambda_from_parts(
    pr: &Profile,
    w: &VectorField3D,
    grads: &[[Array3<f64>; 2]; 3],
    v: &VectorField3D,
    dzv: &[Array3<f64>; 3],
) -> VectorField3D {
    let mut out = VectorField3D::zeros(w.grid);
    for c in 0..3 {
        out.comps[c] = mul_slices(&grads[c][0], &pr.ug[0]) + mul_slices(&grads[c][1], &pr.ug[1]);
        out.comps[c] = &out.comps[c] - &mul_slices(&dzv[c], &pr.g);
    }
    out.comps[2] = &out.comps[2] + &mul_slices(&v.comps[0], &pr.grad_g[0]) + &mul_slices(&v.comps[1], &pr.grad_g[1]);
    for i in 0..2 {
        for l in 0..2 {
            out.comps[i] = &out.comps[i] - &mul_slices(&w.comps[l], &pr.jac[i][l]);
        }
    }
    out
}

/// Euclidean norm over all samples and components.
pub fn l2_samples(w: &VectorField3D) -> f64 {
    w.comps.iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>().sqrt()
}

fn d3_field(ops: &SpectralOps3D, w: &VectorField3D) -> VectorField3D {
    let mut out = VectorField3D::zeros(w.grid);
    for c in 0..3 {
        out.comps[c] = ops.vertical_derivative(&w.comps[c]);
    }
    out
}

/// `||d_3(A f) - A(d_3 f) + chi d_3 f|| / ||d_3 f||`, or the absolute
/// residual when `d_3 f` vanishes.
pub fn commutator_residual(op: &LinearizedOperator3D, f: &VectorField3D) -> Result<f64> {
    let ops = op.ops();
    let df = d3_field(ops, f);
    let mut r = d3_field(ops, &op.apply(f)?);
    r.axpy(-1.0, &op.apply(&df)?)?;
    r.axpy(op.linear.chi, &df)?;
    let scale = l2_samples(&df);
    let num = l2_samples(&r);
    Ok(if scale > 0.0 { num / scale } else { num })
}

#[derive(Debug, Clone)]
pub struct CommutatorReport {
    pub residuals: Vec<(String, f64)>,
}

impl CommutatorReport {
    pub fn worst(&self) -> f64 {
        self.residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }
}

/// Vertical envelope keeping `xi_3 d_3` periodic-smooth on `[-Z, Z)`.
pub fn vertical_envelope(z: f64, half_height: f64) -> f64 {
    (-z * z * 36.0 / (half_height * half_height)).exp()
}

/// Divergence-free test fields: a `xi_3`-independent column, a modulated
/// Gaussian column and the curl of a modulated horizontal potential.
pub fn commutator_test_fields(grid: Grid3D) -> Vec<(String, VectorField3D)> {
    let zh = grid.half_height();
    let env = move |z: f64| vertical_envelope(z, zh);
    let column = VectorField3D::from_fn(grid, |x, y, _| {
        let gg = grad_g(x, y);
        [gg[1], -gg[0], eval_g(x, y)]
    });
    let modulated = VectorField3D::from_fn(grid, move |x, y, z| {
        let _ = (x, y);
        [0.0, 0.0, eval_g(x, y) * z.sin() * env(z)]
    });
    // curl of (0, g phi(z), 0) = (-g phi', 0, phi d_1 g)
    let curl = VectorField3D::from_fn(grid, move |x, y, z| {
        let phi = z.cos() * env(z);
        let dphi = -z.sin() * env(z) - 72.0 * z / (zh * zh) * z.cos() * env(z);
        [-eval_g(x, y) * dphi, 0.0, phi * grad_g(x, y)[0]]
    });
    vec![("column".into(), column), ("modulated-column".into(), modulated), ("curl-potential".into(), curl)]
}

/// The modulated column has nonzero slice mean in its third component;
/// it tests the operator identity, not the evolution constraint.
pub fn verify_commutator(params: &StrainParams, grid: Grid3D) -> Result<CommutatorReport> {
    let op = LinearizedOperator3D::new(grid, params)?;
    let residuals = commutator_test_fields(grid)
        .into_iter()
        .map(|(name, f)| Ok((name, commutator_residual(&op, &f)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CommutatorReport { residuals })
}

/// `theta_i(xi_3) = -int xi_i f_3 dxi'` per slice.
pub fn theta_moments(grid: &Grid3D, f3: &Array3<f64>) -> Vec<[f64; 2]> {
    let hg = grid.horizontal();
    let xs = hg.coords();
    let da = hg.cell_area();
    f3.axis_iter(Axis(0))
        .map(|s| {
            let mut t = [0.0; 2];
            for ((i, j), &v) in s.indexed_iter() {
                t[0] -= xs[i] * v;
                t[1] -= xs[j] * v;
            }
            [t[0] * da, t[1] * da]
        })
        .collect()
}

/// `P_1 f = (0, 0, sum_i theta_i[f_3] d_i g)`.
pub fn apply_p1(f: &VectorField3D) -> VectorField3D {
    let grid = f.grid;
    let theta = theta_moments(&grid, &f.comps[2]);
    let hg = grid.horizontal();
    let gx = hg.sample(|x, y| grad_g(x, y)[0]);
    let gy = hg.sample(|x, y| grad_g(x, y)[1]);
    let mut out = VectorField3D::zeros(grid);
    for (k, mut s) in out.comps[2].axis_iter_mut(Axis(0)).enumerate() {
        s.assign(&(&gx * theta[k][0] + &gy * theta[k][1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{HermiteBasis, OseenMatrices};
    use crate::spectrum::{assemble_lambda3, VelocityGrid};
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};

    fn params() -> StrainParams {
        StrainParams::unit(2.0, 4.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn burgers_profile_is_steady() {
        let grid = Grid3D::new(128, 12.0, 8, 4.0).unwrap();
        let op = LinearizedOperator3D::new(grid, &params()).unwrap();
        let g = VectorField3D::from_fn(grid, |x, y, _| [0.0, 0.0, eval_g(x, y)]);
        let r = op.apply(&g).unwrap();
        assert!(r.max_abs() < 1e-6, "{}", r.max_abs());
    }

    #[test]
    fn commutator_on_three_fields() {
        let grid = Grid3D::new(64, 10.0, 64, 24.0).unwrap();
        let report = verify_commutator(&params(), grid).unwrap();
        for (name, r) in &report.residuals {
            assert!(*r < 1e-5, "{name}: {r}");
        }
    }

    #[test]
    fn limit_operator_is_first_order_in_inverse_mu() {
        let grid = Grid3D::new(48, 10.0, 48, 24.0).unwrap();
        let f = commutator_test_fields(grid).remove(2).1;
        let lim = LinearizedOperator3D::with_linear_part(grid, 0.0, LinearPart::limit()).unwrap();
        let base = lim.apply(&f).unwrap();
        let mut pts = Vec::new();
        for mu in [10.0, 100.0, 1000.0] {
            let op = LinearizedOperator3D::new(grid, &StrainParams::unit(mu, 0.0).unwrap()).unwrap();
            let d = op.apply(&f).unwrap().sub(&base).unwrap();
            pts.push(((mu as f64).ln(), (l2_samples(&d) / l2_samples(&f)).ln()));
        }
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!((slope + 1.0).abs() < 0.05, "{slope}");
    }

    #[test]
    fn vertical_independence_reduces_to_planar_operators() {
        let k = 24;
        let (mu, alpha) = (2.0, 3.0);
        let p = StrainParams::unit(mu, alpha).unwrap();
        let grid = Grid3D::new(128, 14.0, 8, 4.0).unwrap();
        let hg = grid.horizontal();
        let basis = HermiteBasis::new(k).unwrap();
        let n = k * k;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let low = |i: usize| {
            let (a, b) = (i / k, i % k);
            a + b <= 4
        };
        let w = Array1::from_shape_fn(3 * n, |i| if low(i % n) { rng.gen_range(-1.0..1.0) } else { 0.0 });

        let oseen = OseenMatrices::assemble(k);
        let d = basis.lh_diagonal();
        let mut ah = oseen.horizontal_coupling(k) * (-alpha);
        for c in 0..2 {
            for i in 0..n {
                ah[[c * n + i, c * n + i]] += d[i] - 1.0 - p.horizontal_shift();
            }
        }
        let mut a3 = (oseen.transport_restricted(k) + assemble_lambda3(k, VelocityGrid::default()).unwrap()) * (-alpha);
        for i in 0..n {
            a3[[i, i]] += d[i];
        }
        let wh = w.slice(ndarray::s![..2 * n]).to_owned();
        let w3 = w.slice(ndarray::s![2 * n..]).to_owned();
        let coeffs = |v: Array1<f64>| v.into_shape_with_order((k, k)).unwrap();
        let out_h = ah.dot(&wh);
        let out_3 = a3.dot(&w3);
        let input = [
            basis.synthesize(&coeffs(wh.slice(ndarray::s![..n]).to_owned()), &hg),
            basis.synthesize(&coeffs(wh.slice(ndarray::s![n..]).to_owned()), &hg),
            basis.synthesize(&coeffs(w3), &hg),
        ];
        let expect = [out_h.slice(ndarray::s![..n]).to_owned(), out_h.slice(ndarray::s![n..]).to_owned(), out_3];
        let mut field = VectorField3D::zeros(grid);
        for c in 0..3 {
            for mut s in field.comps[c].axis_iter_mut(Axis(0)) {
                s.assign(&input[c]);
            }
        }
        let op = LinearizedOperator3D::new(grid, &p).unwrap();
        let got = op.apply(&field).unwrap();
        // Hermite coefficients of the grid result, int f p_j1 p_j2; the
        // matrix side is the exact Galerkin projection of the same output.
        let xs = hg.coords();
        let htab = crate::hermite::hermite_function_table(&xs, k);
        let lift = hg.sample(|x, y| ((x * x + y * y) / 4.0).exp());
        for c in 0..3 {
            let s = &got.comps[c].index_axis(Axis(0), 3) * &lift;
            let proj = htab.dot(&s).dot(&htab.t()) * hg.cell_area();
            // Low modes only: high-degree weights amplify roundoff in the far field.
            let err = proj
                .indexed_iter()
                .filter(|((a, b), _)| a + b <= 10)
                .fold(0.0f64, |m, ((a, b), v)| m.max((v - expect[c][a * k + b]).abs()));
            assert!(err < 1e-8, "component {c}: {err}");
        }
    }

    #[test]
    fn projection_moments() {
        let grid = Grid3D::new(96, 12.0, 8, 4.0).unwrap();
        let d1g = VectorField3D::from_fn(grid, |x, y, _| [0.0, 0.0, grad_g(x, y)[0]]);
        let th = theta_moments(&grid, &d1g.comps[2]);
        assert!(th.iter().all(|t| (t[0] - 1.0).abs() < 1e-12 && t[1].abs() < 1e-12));
        let p = apply_p1(&d1g);
        assert!(p.sub(&d1g).unwrap().max_abs() < 1e-12);
        let g = VectorField3D::from_fn(grid, |x, y, _| [0.0, 0.0, eval_g(x, y)]);
        assert!(apply_p1(&g).max_abs() < 1e-14);
    }

    #[test]
    fn projection_is_idempotent() {
        let grid = Grid3D::new(64, 12.0, 8, 4.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = VectorField3D::from_fn(grid, |x, y, z| {
                let e = (-(x * x + y * y) / 4.0).exp();
                [c[0] * e, c[1] * x * e, e * (c[2] * x + c[3] * y * y + c[4] * x * y + c[5] * z)]
            });
            let p = apply_p1(&f);
            let pp = apply_p1(&p);
            assert!(pp.sub(&p).unwrap().max_abs() < 1e-10);
        }
    }
}
