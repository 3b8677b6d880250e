//! Bessel functions needed by the truncated free-space kernels.

/// `J0` and `J1` come from `libm`.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Modified Bessel function `K_nu(x)` for `x > 0` from
/// `int_0^inf exp(-x cosh t) cosh(nu t) dt`; the trapezoid rule is
/// exponentially accurate for this integrand.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k needs x > 0");
    let dt: f64 = 0.05;
    let mut sum = 0.5 * (-x).exp();
    let mut t = dt;
    loop {
        let e = x * t.cosh();
        if e > 745.0 {
            break;
        }
        sum += (-e).exp() * (nu * t).cosh();
        t += dt;
    }
    sum * dt
}
