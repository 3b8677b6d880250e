//! Weights `rho_m`, weighted norms `L^2(m)`, the slice-uniform norms
//! `X(m)` and the product norm with zero-mean third component.

use crate::error::{LabError, Result};
use crate::fields::eval_g;
use crate::grid::{Grid2D, ScalarField2D, ScalarField3D, VectorField3D};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

/// Fraction of the squared norm tolerated in the outermost grid frame.
pub const TAIL_FRACTION_LIMIT: f64 = 1e-8;
/// Width in cells of the frame used by the tail check.
const TAIL_FRAME: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightExponent {
    /// Polynomial weight `(1 + r/(4m))^m`; `m = 0` is the unweighted case.
    Polynomial(f64),
    /// Gaussian weight `exp(r/4)`.
    Gaussian,
}

impl WeightExponent {
    pub const UNWEIGHTED: WeightExponent = WeightExponent::Polynomial(0.0);

    /// Exponent admissible for the zero-mean spaces: `m > 1` or infinity.
    pub fn finite(m: f64) -> Result<Self> {
        if !(m.is_finite() && m > 1.0) {
            return Err(LabError::param("m", format!("finite weight exponent must exceed 1, got {m}")));
        }
        Ok(WeightExponent::Polynomial(m))
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, WeightExponent::Gaussian)
    }

    pub fn label(&self) -> String {
        match self {
            WeightExponent::Polynomial(m) => format!("{m}"),
            WeightExponent::Gaussian => "inf".into(),
        }
    }
}

/// `rho_m(r)`, where `r` stands for `|xi'|^2`.
pub fn rho_m(r: f64, m: WeightExponent) -> f64 {
    match m {
        WeightExponent::Polynomial(m) if m == 0.0 => 1.0,
        WeightExponent::Polynomial(m) => (1.0 + r / (4.0 * m)).powf(m),
        WeightExponent::Gaussian => (r / 4.0).exp(),
    }
}

/// Zeroth and first horizontal moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub zeroth: f64,
    pub first: [f64; 2],
}

pub fn moments_of(grid: &Grid2D, plain: &ArrayView2<f64>) -> MomentVector {
    let c = grid.coords();
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for ((i, j), &v) in plain.indexed_iter() {
        m0 += v;
        m1 += c[i] * v;
        m2 += c[j] * v;
    }
    let da = grid.cell_area();
    MomentVector { zeroth: m0 * da, first: [m1 * da, m2 * da] }
}

pub fn moments(w: &ScalarField2D) -> MomentVector {
    moments_of(&w.grid, &w.plain().view())
}

/// Squared weighted density `|w|^2 rho_m` at every node.
fn weighted_density(w: &ScalarField2D, m: WeightExponent) -> Result<Array2<f64>> {
    let c = w.grid.coords();
    match m {
        WeightExponent::Gaussian => {
            if !w.weighted_repr {
                return Err(LabError::WeightedReprRequired);
            }
            Ok(w.data.mapv(|v| v * v))
        }
        WeightExponent::Polynomial(_) => {
            let plain = w.plain();
            Ok(Array2::from_shape_fn(plain.dim(), |(i, j)| {
                plain[[i, j]].powi(2) * rho_m(c[i] * c[i] + c[j] * c[j], m)
            }))
        }
    }
}

fn frame_fraction(density: &Array2<f64>, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let n = density.nrows();
    let outer: f64 = density
        .indexed_iter()
        .filter(|((i, j), _)| {
            let d = (*i).min(*j).min(n - 1 - i).min(n - 1 - j);
            d < TAIL_FRAME
        })
        .map(|(_, v)| v)
        .sum();
    outer / total
}

/// `||w||_{L^2(m)}` by the trapezoid rule, with the tail-mass check.
pub fn norm_l2m(w: &ScalarField2D, m: WeightExponent) -> Result<f64> {
    let dens = weighted_density(w, m)?;
    let total = dens.sum();
    let frac = frame_fraction(&dens, total);
    if frac > TAIL_FRACTION_LIMIT {
        return Err(LabError::TailMass { fraction: frac, limit: TAIL_FRACTION_LIMIT });
    }
    Ok((total * w.grid.cell_area()).sqrt())
}

/// Same norm without the tail check, for diagnostics on fields already vetted.
pub fn norm_l2m_unchecked(w: &ScalarField2D, m: WeightExponent) -> Result<f64> {
    Ok((weighted_density(w, m)?.sum() * w.grid.cell_area()).sqrt())
}

/// Weighted inner product `int a b rho_m` of two fields in the same representation.
pub fn inner_l2m(a: &ScalarField2D, b: &ScalarField2D, m: WeightExponent) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(LabError::GridMismatch("inner product of fields on different grids".into()));
    }
    let c = a.grid.coords();
    let s: f64 = match m {
        WeightExponent::Gaussian => {
            if !(a.weighted_repr && b.weighted_repr) {
                return Err(LabError::WeightedReprRequired);
            }
            a.data.iter().zip(b.data.iter()).map(|(x, y)| x * y).sum()
        }
        WeightExponent::Polynomial(_) => {
            let (pa, pb) = (a.plain(), b.plain());
            pa.indexed_iter()
                .map(|((i, j), x)| x * pb[[i, j]] * rho_m(c[i] * c[i] + c[j] * c[j], m))
                .sum()
        }
    };
    Ok(s * a.grid.cell_area())
}

/// `sup` over vertical slices of the slice `L^2(m)` norm.
pub fn norm_x(w: &ScalarField3D, m: WeightExponent) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..w.grid.n3() {
        best = best.max(norm_l2m(&w.slice(k), m)?);
    }
    Ok(best)
}

/// Tolerance for the zero-mean property of a slice with the given norm.
pub fn moment_tolerance(norm: f64) -> f64 {
    1e-10 * (1.0 + norm)
}

/// Norm of a vector field in the product space whose third component has
/// zero mean on every slice; the membership is checked.
pub fn norm_xbb(w: &VectorField3D, m: WeightExponent) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..w.grid.n3() {
        let mut sq = 0.0;
        for c in 0..3 {
            let slice = w.component_slice(c, k);
            let nrm = norm_l2m(&slice, m)?;
            sq += nrm * nrm;
            if c == 2 {
                let mean = slice.integral();
                let tol = moment_tolerance(nrm);
                if mean.abs() > tol {
                    return Err(LabError::ZeroMean { what: format!("third component, slice {k}"), mean, tol });
                }
            }
        }
        best = best.max(sq.sqrt());
    }
    Ok(best)
}

/// Product norm without the membership check.
pub fn norm_xbb_unchecked(w: &VectorField3D, m: WeightExponent) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..w.grid.n3() {
        let mut sq = 0.0;
        for c in 0..3 {
            let n = norm_l2m_unchecked(&w.component_slice(c, k), m)?;
            sq += n * n;
        }
        best = best.max(sq.sqrt());
    }
    Ok(best)
}

/// Remove the mean by subtracting `(int w) g`.
pub fn project_zero_mean(w: &ScalarField2D) -> ScalarField2D {
    let c = w.integral();
    let g = if w.weighted_repr {
        ScalarField2D::from_fn_weighted(w.grid, eval_g)
    } else {
        ScalarField2D::from_fn(w.grid, eval_g)
    };
    let mut out = w.clone();
    out.data.zip_mut_with(&g.data, |a, b| *a -= c * b);
    out
}

/// Slice-wise zero-mean projection of a 3D scalar array `[i3, i1, i2]`.
pub fn project_zero_mean_slices(grid: &Grid2D, data: &mut ndarray::Array3<f64>) {
    let g = grid.sample(eval_g);
    for mut slice in data.axis_iter_mut(Axis(0)) {
        let c = slice.sum() * grid.cell_area();
        slice.zip_mut_with(&g, |a, b| *a -= c * b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{eval_ug, grad_g};
    use crate::grid::Grid3D;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::new(128, 12.0).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_m(0.0, WeightExponent::Polynomial(3.0)), 1.0);
        assert_eq!(rho_m(0.0, WeightExponent::Gaussian), 1.0);
        assert_eq!(rho_m(4.0, WeightExponent::Polynomial(1.0)), 2.0);
        assert!((rho_m(4.0, WeightExponent::Gaussian) - std::f64::consts::E).abs() < 1e-15);
        let seq: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&m| rho_m(4.0, WeightExponent::Polynomial(m))).collect();
        assert!(seq[0] < seq[1] && seq[1] < seq[2] && seq[2] < std::f64::consts::E);
        assert!(std::f64::consts::E - seq[2] < 2e-3);
    }

    #[test]
    fn exponent_validation() {
        assert!(WeightExponent::finite(1.0).is_err());
        assert!(WeightExponent::finite(4.0).is_ok());
    }

    #[test]
    fn gaussian_norms() {
        let g = ScalarField2D::from_fn(grid(), eval_g);
        let n0 = norm_l2m(&g, WeightExponent::UNWEIGHTED).unwrap();
        assert!((n0 - (1.0 / (8.0 * PI)).sqrt()).abs() < 1e-12);
        assert!(matches!(norm_l2m(&g, WeightExponent::Gaussian), Err(LabError::WeightedReprRequired)));
        let gw = ScalarField2D::from_fn_weighted(grid(), eval_g);
        let ninf = norm_l2m(&gw, WeightExponent::Gaussian).unwrap();
        assert!((ninf - (1.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);
        let zero = ScalarField2D { weighted_repr: true, ..ScalarField2D::zeros(grid()) };
        assert_eq!(norm_l2m(&zero, WeightExponent::Gaussian).unwrap(), 0.0);
    }

    #[test]
    fn tail_check_rejects_undecayed_field() {
        let w = ScalarField2D::from_fn(grid(), |x, y| 1.0 / (1.0 + x * x + y * y));
        assert!(matches!(norm_l2m(&w, WeightExponent::Polynomial(2.0)), Err(LabError::TailMass { .. })));
    }

    #[test]
    fn quadrature_converges_under_refinement() {
        let fields: Vec<Box<dyn Fn(f64, f64) -> f64>> = vec![
            Box::new(eval_g),
            Box::new(|x, y| grad_g(x, y)[0]),
            Box::new(|x, y| grad_g(x, y)[1]),
            Box::new(|x, y| eval_ug(x, y)[0] * eval_g(x, y)),
        ];
        for f in &fields {
            for m in [WeightExponent::UNWEIGHTED, WeightExponent::Polynomial(4.0), WeightExponent::Polynomial(10.0)] {
                let a = norm_l2m(&ScalarField2D::from_fn(Grid2D::new(96, 12.0).unwrap(), f), m).unwrap();
                let b = norm_l2m(&ScalarField2D::from_fn(Grid2D::new(192, 12.0).unwrap(), f), m).unwrap();
                assert!((a - b).abs() < 1e-12 * b.max(1e-300), "{a} {b}");
            }
        }
    }

    #[test]
    fn x_norm_of_column_equals_slice_norm() {
        let g3 = Grid3D::new(64, 12.0, 8, 4.0).unwrap();
        let w = ScalarField3D::from_fn(g3, |x, y, _| eval_g(x, y));
        let m = WeightExponent::Polynomial(4.0);
        let slice = norm_l2m(&ScalarField2D::from_fn(g3.horizontal(), eval_g), m).unwrap();
        assert!((norm_x(&w, m).unwrap() - slice).abs() < 1e-15);
    }

    #[test]
    fn xbb_membership() {
        let g3 = Grid3D::new(64, 12.0, 8, 4.0).unwrap();
        let m = WeightExponent::Polynomial(4.0);
        let d1g = VectorField3D::from_fn(g3, |x, y, _| [0.0, 0.0, grad_g(x, y)[0]]);
        assert!(norm_xbb(&d1g, m).is_ok());
        let col = VectorField3D::from_fn(g3, |x, y, _| [0.0, 0.0, eval_g(x, y)]);
        assert!(matches!(norm_xbb(&col, m), Err(LabError::ZeroMean { .. })));
    }

    #[test]
    fn zero_mean_projection_examples() {
        let g = ScalarField2D::from_fn(grid(), eval_g);
        assert!(project_zero_mean(&g).max_abs() < 1e-14);
        let d1 = ScalarField2D::from_fn(grid(), |x, y| grad_g(x, y)[0]);
        let p = project_zero_mean(&d1);
        assert!((&p.data - &d1.data).iter().all(|v| v.abs() < 1e-16));
        let sum = ScalarField2D::from_fn(grid(), |x, y| eval_g(x, y) + grad_g(x, y)[0]);
        assert!((&project_zero_mean(&sum).data - &d1.data).iter().all(|v| v.abs() < 1e-14));
    }

    proptest! {
        #[test]
        fn norms_increase_with_exponent(a in -2.0f64..2.0, b in -2.0f64..2.0, s in 0.5f64..1.5, m1 in 1.1f64..8.0, dm in 0.0f64..8.0) {
            let grid = Grid2D::new(64, 12.0).unwrap();
            let w = ScalarField2D::from_fn(grid, |x, y| (a + b * x * y) * (-(x * x + y * y) / (4.0 * s)).exp());
            let lo = norm_l2m_unchecked(&w, WeightExponent::Polynomial(m1)).unwrap();
            let hi = norm_l2m_unchecked(&w, WeightExponent::Polynomial(m1 + dm)).unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-14));
        }

        #[test]
        fn zero_mean_projection_is_idempotent(a in -2.0f64..2.0, b in -2.0f64..2.0, cx in -1.0f64..1.0) {
            let grid = Grid2D::new(64, 12.0).unwrap();
            let w = ScalarField2D::from_fn(grid, |x, y| (a + b * x) * (-((x - cx).powi(2) + y * y) / 3.0).exp());
            let p = project_zero_mean(&w);
            prop_assert!(p.integral().abs() < 1e-12);
            let pp = project_zero_mean(&p);
            let diff = (&pp.data - &p.data).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(diff < 1e-14);
        }
    }
}
