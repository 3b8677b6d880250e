//! Centered finite differences on uniform grids. Points within the stencil
//! half-width of an edge are left at zero and excluded by callers.

use ndarray::{Array3, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn band(self) -> usize {
        match self {
            FdOrder::Second => 1,
            FdOrder::Fourth => 2,
        }
    }
}

/// First derivative along `axis` of a 3D array with spacing `h`.
pub fn d1(f: &Array3<f64>, axis: usize, h: f64, order: FdOrder) -> Array3<f64> {
    let mut out = Array3::zeros(f.dim());
    let n = f.len_of(Axis(axis));
    let b = order.band();
    for i in b..n - b {
        let mut o = out.index_axis_mut(Axis(axis), i);
        let at = |k: usize| f.index_axis(Axis(axis), k);
        match order {
            FdOrder::Second => {
                o.assign(&((&at(i + 1) - &at(i - 1)) / (2.0 * h)));
            }
            FdOrder::Fourth => {
                let v = (&at(i - 2) - &at(i + 2) + (&at(i + 1) - &at(i - 1)) * 8.0) / (12.0 * h);
                o.assign(&v);
            }
        }
    }
    out
}

/// Second derivative along `axis`.
pub fn d2(f: &Array3<f64>, axis: usize, h: f64, order: FdOrder) -> Array3<f64> {
    let mut out = Array3::zeros(f.dim());
    let n = f.len_of(Axis(axis));
    let b = order.band();
    for i in b..n - b {
        let mut o = out.index_axis_mut(Axis(axis), i);
        let at = |k: usize| f.index_axis(Axis(axis), k);
        match order {
            FdOrder::Second => {
                o.assign(&((&at(i + 1) + &at(i - 1) - &at(i) * 2.0) / (h * h)));
            }
            FdOrder::Fourth => {
                let v = ((&at(i + 1) + &at(i - 1)) * 16.0 - (&at(i + 2) + &at(i - 2)) - &at(i) * 30.0)
                    / (12.0 * h * h);
                o.assign(&v);
            }
        }
    }
    out
}

/// Fourth-order first derivative along `axis` at every node, one-sided
/// near the edges.
pub fn d1_full(f: &Array3<f64>, axis: usize, h: f64) -> Array3<f64> {
    let n = f.len_of(Axis(axis));
    assert!(n >= 5, "one-sided stencils need five nodes");
    let mut out = d1(f, axis, h, FdOrder::Fourth);
    let at = |k: usize| f.index_axis(Axis(axis), k);
    let edge = [[-25.0, 48.0, -36.0, 16.0, -3.0], [-3.0, -10.0, 18.0, -6.0, 1.0]];
    for (row, coef) in edge.iter().enumerate() {
        let mut lo = at(0).to_owned() * 0.0;
        let mut hi = lo.clone();
        for (k, &c) in coef.iter().enumerate() {
            lo.scaled_add(c, &at(k));
            hi.scaled_add(-c, &at(n - 1 - k));
        }
        out.index_axis_mut(Axis(axis), row).assign(&(lo / (12.0 * h)));
        out.index_axis_mut(Axis(axis), n - 1 - row).assign(&(hi / (12.0 * h)));
    }
    out
}

/// Iterator over interior `[k, i, j]` indices at distance `band` from every edge.
pub fn interior(dim: (usize, usize, usize), band: usize) -> impl Iterator<Item = [usize; 3]> {
    let (a, b, c) = dim;
    (band..a - band).flat_map(move |k| (band..b - band).flat_map(move |i| (band..c - band).map(move |j| [k, i, j])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_edges_are_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 / (n - 1) as f64;
            let f = Array3::from_shape_fn((n, 1, 1), |(i, _, _)| (1.3 * (-1.0 + i as f64 * h)).sin());
            let d = d1_full(&f, 0, h);
            (0..n).map(|i| (d[[i, 0, 0]] - 1.3 * (1.3 * (-1.0 + i as f64 * h)).cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 14.0 && ratio < 40.0, "{ratio}");
    }

    fn cubic_field(h: f64) -> Array3<f64> {
        Array3::from_shape_fn((8, 9, 10), |(k, i, j)| {
            let (z, x, y) = (k as f64 * h, i as f64 * h, j as f64 * h);
            x * x * x + 2.0 * y * y - z + x * y * z
        })
    }

    #[test]
    fn fourth_order_exact_on_cubics() {
        let h = 0.3;
        let f = cubic_field(h);
        let fx = d1(&f, 1, h, FdOrder::Fourth);
        let fyy = d2(&f, 2, h, FdOrder::Fourth);
        for [k, i, j] in interior(f.dim(), 2) {
            let (z, x, y) = (k as f64 * h, i as f64 * h, j as f64 * h);
            assert!((fx[[k, i, j]] - (3.0 * x * x + y * z)).abs() < 1e-11);
            assert!((fyy[[k, i, j]] - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn second_order_exact_on_quadratics() {
        let h = 0.25;
        let f = Array3::from_shape_fn((5, 6, 7), |(k, i, j)| {
            let (z, x, y) = (k as f64 * h, i as f64 * h, j as f64 * h);
            x * x - 3.0 * y * z
        });
        let fx = d1(&f, 1, h, FdOrder::Second);
        let fxx = d2(&f, 1, h, FdOrder::Second);
        for [k, i, _] in interior(f.dim(), 1) {
            let x = i as f64 * h;
            let _ = k;
            assert!((fx[[k, i, 3]] - 2.0 * x).abs() < 1e-12);
            assert!((fxx[[k, i, 3]] - 2.0).abs() < 1e-11);
        }
    }
}
