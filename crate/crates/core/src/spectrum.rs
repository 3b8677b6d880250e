//! Galerkin matrices of the two-dimensional linearized operators
//! `L_{mu,alpha,h} = (L_h - 1 - s_mu) - alpha (Lambda_1 - tilde Lambda_2)` and
//! `L_{mu,alpha,3} = L_h - alpha (Lambda_1 + tilde Lambda_3)` on the Hermite
//! basis, their spectra and the refinement test that labels eigenvalues
//! as converged.
//!
//! Both operators commute with rotation by a quarter turn, a signed
//! permutation of the basis, so the eigenproblem splits into three real
//! invariant subspaces (`R = 1`, `R = -1`, `R^2 = -1`).
//!
//! In `L^2(m)` with finite `m` the essential spectrum of `e^{tau L_{mu,alpha,h}}`
//! has radius `exp(-(1/2 + s_mu + m/2) tau)`; with `m = 4`, `mu = 2` the
//! exponent is `-9/2`. Eigenvalues computed below that line are flagged: they
//! belong to the Gaussian-weighted problem only.

use crate::biot_savart::{BiotSavart2D, BsConfig};
use crate::error::{LabError, Result};
use crate::grid::Grid2D;
use crate::hermite::{
    apply_lh, deriv, hermite_function_table, inner, lower, mul_x, Coeffs, HermiteBasis, OseenMatrices,
};
use crate::io::fmt_f64;
use crate::params::StrainParams;
use crate::quad::GaussHermite;
use crate::weighted::WeightExponent;
use nalgebra::{DMatrix, Schur};
use ndarray::{s, Array1, Array2};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Extra modes per axis used to decide convergence.
pub const REFINEMENT: usize = 8;
/// Relative drift under refinement accepted as converged.
pub const DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Basis {
    /// Tensor Hermite functions, `K` modes per axis, per component.
    Hermite2D { modes: usize, components: usize, zero_mean: bool },
}

/// Dense operator matrix on a declared basis and inner product.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: Array2<f64>,
    pub basis: Basis,
    pub weight: WeightExponent,
}

/// `R e_i = sign[i] e_{target[i]}`.
#[derive(Debug, Clone)]
pub struct SignedPerm {
    pub target: Vec<usize>,
    pub sign: Vec<f64>,
}

impl SignedPerm {
    /// Quarter turn on scalars: `R phi_(k1,k2) = (-1)^k2 phi_(k2,k1)`.
    pub fn rotation_scalar(k: usize) -> Self {
        let n = k * k;
        let mut target = vec![0; n];
        let mut sign = vec![0.0; n];
        for k1 in 0..k {
            for k2 in 0..k {
                target[k1 * k + k2] = k2 * k + k1;
                sign[k1 * k + k2] = if k2 % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        Self { target, sign }
    }

    /// Quarter turn on two-component fields, `(Rw)(xi) = Q w(Q^T xi)`.
    pub fn rotation_vector(k: usize) -> Self {
        let sc = Self::rotation_scalar(k);
        let n = k * k;
        let mut target = vec![0; 2 * n];
        let mut sign = vec![0.0; 2 * n];
        for i in 0..n {
            target[i] = n + sc.target[i];
            sign[i] = sc.sign[i];
            target[n + i] = sc.target[i];
            sign[n + i] = -sc.sign[i];
        }
        Self { target, sign }
    }

    pub fn apply(&self, v: &Array1<f64>) -> Array1<f64> {
        let mut out = Array1::zeros(v.len());
        for (i, &x) in v.iter().enumerate() {
            out[self.target[i]] += self.sign[i] * x;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SectorKind {
    Symmetric,
    Antisymmetric,
    Quarter,
}

/// Orthonormal sparse basis of one invariant subspace.
#[derive(Debug, Clone)]
pub struct Sector {
    pub kind: SectorKind,
    pub cols: Vec<Vec<(usize, f64)>>,
}

impl Sector {
    /// `V^T A V` for a dense `A`.
    pub fn project(&self, a: &Array2<f64>) -> Array2<f64> {
        let n = a.nrows();
        let d = self.cols.len();
        let mut av = Array2::zeros((n, d));
        for (c, col) in self.cols.iter().enumerate() {
            let mut dst = av.column_mut(c);
            for &(i, w) in col {
                dst.scaled_add(w, &a.column(i));
            }
        }
        let mut out = Array2::zeros((d, d));
        for (r, col) in self.cols.iter().enumerate() {
            let mut dst = out.row_mut(r);
            for &(i, w) in col {
                dst.scaled_add(w, &av.row(i));
            }
        }
        out
    }
}

/// Splits index space (minus `exclude`) into the three real invariant
/// subspaces of a signed permutation of order four.
pub fn c4_sectors(perm: &SignedPerm, exclude: &[usize]) -> Result<[Sector; 3]> {
    let n = perm.target.len();
    let mut seen = vec![false; n];
    for &e in exclude {
        seen[e] = true;
    }
    let mut sym = Vec::new();
    let mut anti = Vec::new();
    let mut quarter = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // orbit b_j = R^j e_start = s_j e_{idx_j}
        let mut orbit = vec![(start, 1.0)];
        let closing_sign = loop {
            let (idx, s) = *orbit.last().expect("nonempty");
            let (next, sn) = (perm.target[idx], s * perm.sign[idx]);
            if next == start {
                break sn;
            }
            if orbit.len() == 4 || seen[next] {
                return Err(LabError::guard("c4_sectors", "permutation is not of order four"));
            }
            orbit.push((next, sn));
        };
        for &(i, _) in &orbit {
            seen[i] = true;
        }
        let len = orbit.len();
        let combo = |coef: &dyn Fn(usize) -> f64| -> Vec<(usize, f64)> {
            let norm = (0..len).map(|j| coef(j).powi(2)).sum::<f64>().sqrt();
            (0..len)
                .filter(|&j| coef(j) != 0.0)
                .map(|j| (orbit[j].0, orbit[j].1 * coef(j) / norm))
                .collect()
        };
        match (len, closing_sign > 0.0) {
            (1, true) => sym.push(combo(&|_| 1.0)),
            (1, false) => anti.push(combo(&|_| 1.0)),
            (2, true) => {
                sym.push(combo(&|_| 1.0));
                anti.push(combo(&|j| if j == 0 { 1.0 } else { -1.0 }));
            }
            (2, false) => {
                quarter.push(combo(&|j| if j == 0 { 1.0 } else { 0.0 }));
                quarter.push(combo(&|j| if j == 1 { 1.0 } else { 0.0 }));
            }
            (4, true) => {
                sym.push(combo(&|_| 1.0));
                anti.push(combo(&|j| if j % 2 == 0 { 1.0 } else { -1.0 }));
                quarter.push(combo(&|j| [1.0, 0.0, -1.0, 0.0][j]));
                quarter.push(combo(&|j| [0.0, 1.0, 0.0, -1.0][j]));
            }
            _ => return Err(LabError::guard("c4_sectors", format!("orbit of length {len} closes with sign {closing_sign}"))),
        }
    }
    Ok([
        Sector { kind: SectorKind::Symmetric, cols: sym },
        Sector { kind: SectorKind::Antisymmetric, cols: anti },
        Sector { kind: SectorKind::Quarter, cols: quarter },
    ])
}

/// Eigenvalues of a real dense matrix via the real Schur form.
pub fn real_eigenvalues(a: &Array2<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_row_slice(n, n, a.as_standard_layout().as_slice().expect("standard layout"));
    let schur = Schur::try_new(m, f64::EPSILON, 200 * n)
        .ok_or_else(|| LabError::guard("eigensolver", format!("Schur iteration did not converge for n = {n}")))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Eigenvalues of `a`, which must commute with `perm`, solved per sector.
pub fn symmetric_eigenvalues(a: &Array2<f64>, perm: &SignedPerm, exclude: &[usize]) -> Result<Vec<Complex64>> {
    let sectors = c4_sectors(perm, exclude)?;
    let mut all = Vec::with_capacity(a.nrows());
    for sector in &sectors {
        all.extend(real_eigenvalues(&sector.project(a))?);
    }
    if all.len() + exclude.len() != a.nrows() {
        return Err(LabError::guard("eigensolver", format!("sector sizes sum to {} of {}", all.len(), a.nrows())));
    }
    Ok(all)
}

/// Gaussian-weighted essential threshold for `L_{mu,alpha,h}` in `L^2(m)`.
pub fn essential_threshold_horizontal(m: WeightExponent, mu: f64) -> Option<f64> {
    match m {
        WeightExponent::Gaussian => None,
        WeightExponent::Polynomial(m) => Some(-(0.5 + (mu + 2.0) / (2.0 * (mu - 1.0)) + m / 2.0)),
    }
}

/// Essential threshold `(1-m)/2` of `L_{mu,alpha,3}` in `L^2(m)`.
pub fn essential_threshold_vertical(m: WeightExponent) -> Option<f64> {
    match m {
        WeightExponent::Gaussian => None,
        WeightExponent::Polynomial(m) => Some((1.0 - m) / 2.0),
    }
}

/// `-1 - (mu+2)/(2(mu-1))`, the eigenvalue bound of `L_{mu,alpha,h}`.
pub fn horizontal_bound(mu: f64) -> f64 {
    -1.0 - (mu + 2.0) / (2.0 * (mu - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorKind {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenEntry {
    pub re: f64,
    pub im: f64,
    pub converged: bool,
    pub below_essential: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub operator: OperatorKind,
    pub mu: f64,
    pub alpha: f64,
    pub m: WeightExponent,
    pub modes: usize,
    /// Sorted by decreasing real part.
    pub eigenvalues: Vec<EigenEntry>,
}

impl SpectrumReport {
    pub fn converged(&self) -> impl Iterator<Item = &EigenEntry> {
        self.eigenvalues.iter().filter(|e| e.converged)
    }

    /// Largest real part among converged eigenvalues.
    pub fn converged_abscissa(&self) -> Option<f64> {
        self.converged().map(|e| e.re).reduce(f64::max)
    }

    /// CSV rows `mu,alpha,m,K,re,im,converged`.
    pub fn csv_rows(&self) -> Vec<[String; 7]> {
        self.eigenvalues
            .iter()
            .map(|e| {
                [
                    fmt_f64(self.mu),
                    fmt_f64(self.alpha),
                    self.m.label(),
                    self.modes.to_string(),
                    fmt_f64(e.re),
                    fmt_f64(e.im),
                    e.converged.to_string(),
                ]
            })
            .collect()
    }
}

/// Labels eigenvalues of the coarse list by nearest-neighbour matching
/// into the refined list.
pub fn label_converged(coarse: &[Complex64], fine: &[Complex64]) -> Vec<bool> {
    coarse
        .iter()
        .map(|z| {
            let d = fine.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            d <= DRIFT_TOLERANCE * z.norm().max(1.0)
        })
        .collect()
}

fn sort_desc(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// Grid on which basis functions are pushed through the Biot-Savart law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityGrid {
    pub n: usize,
    pub radius: f64,
}

impl Default for VelocityGrid {
    fn default() -> Self {
        Self { n: 256, radius: 20.0 }
    }
}

/// Matrix of `tilde Lambda_3 w = (K_2d * w) . grad g`:
/// entry `(j, k) = -1/(8 pi) int p_j1 p_j2 exp(-r^2/4) xi . v_k`.
pub fn assemble_lambda3(k: usize, vgrid: VelocityGrid) -> Result<Array2<f64>> {
    let grid = Grid2D::new(vgrid.n, vgrid.radius)?;
    let bs = BiotSavart2D::new(grid, BsConfig::default())?;
    let xs = grid.coords();
    let n = grid.n();
    let htab = hermite_function_table(&xs, k);
    let basis = HermiteBasis::new(k)?;
    let scale = -grid.cell_area() / (8.0 * PI);
    let mut out = Array2::zeros((k * k, k * k));
    for col in 0..k * k {
        let (k1, k2) = basis.degrees(col);
        let f = Array2::from_shape_fn((n, n), |(i, j)| htab[[k1, i]] * htab[[k2, j]]);
        let v = bs.apply_fft(&f);
        let xv = Array2::from_shape_fn((n, n), |(i, j)| xs[i] * v.comps[0][[i, j]] + xs[j] * v.comps[1][[i, j]]);
        let proj = htab.dot(&xv).dot(&htab.t());
        for (r, val) in proj.iter().enumerate() {
            out[[r, col]] = scale * val;
        }
    }
    Ok(out)
}

/// Matrices for both operators up to `K + REFINEMENT` modes, built once.
pub struct SpectrumSolver {
    modes: usize,
    oseen: OseenMatrices,
    vgrid: VelocityGrid,
    lambda3: OnceLock<Array2<f64>>,
}

impl std::fmt::Debug for SpectrumSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpectrumSolver(K = {})", self.modes)
    }
}

impl SpectrumSolver {
    pub fn new(modes: usize) -> Result<Self> {
        Self::with_velocity_grid(modes, VelocityGrid::default())
    }

    pub fn with_velocity_grid(modes: usize, vgrid: VelocityGrid) -> Result<Self> {
        if modes < 8 {
            return Err(LabError::param("K", format!("needs at least 8 modes per axis, got {modes}")));
        }
        let oseen = OseenMatrices::assemble(modes + REFINEMENT);
        Ok(Self { modes, oseen, vgrid, lambda3: OnceLock::new() })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn oseen(&self) -> &OseenMatrices {
        &self.oseen
    }

    fn lambda3_full(&self) -> Result<&Array2<f64>> {
        if let Some(m) = self.lambda3.get() {
            return Ok(m);
        }
        let m = assemble_lambda3(self.modes + REFINEMENT, self.vgrid)?;
        Ok(self.lambda3.get_or_init(|| m))
    }

    /// `Lambda_1 + tilde Lambda_3` restricted to `k` modes.
    pub fn vertical_coupling(&self, k: usize) -> Result<Array2<f64>> {
        let idx = self.oseen.sub_indices(k);
        let l3 = self.lambda3_full()?;
        let t = self.oseen.transport_restricted(k);
        Ok(Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| t[[r, c]] + l3[[idx[r], idx[c]]]))
    }

    fn check_modes(&self, k: usize) -> Result<()> {
        if k < 8 || k > self.modes + REFINEMENT {
            return Err(LabError::param("K", format!("{k} outside the assembled range 8..={}", self.modes + REFINEMENT)));
        }
        Ok(())
    }

    /// `L_h - alpha B` without the constant shift, `2K^2` square.
    fn horizontal_core(&self, k: usize, alpha: f64) -> Array2<f64> {
        let n = k * k;
        let d = HermiteBasis::new(k).expect("k >= 8").lh_diagonal();
        let mut a = self.oseen.horizontal_coupling(k) * (-alpha);
        for c in 0..2 {
            for i in 0..n {
                a[[c * n + i, c * n + i]] += d[i];
            }
        }
        a
    }

    pub fn horizontal_matrix(&self, k: usize, params: &StrainParams, m: WeightExponent) -> Result<OperatorMatrix> {
        self.check_modes(k)?;
        let mut a = self.horizontal_core(k, params.alpha());
        let shift = 1.0 + params.horizontal_shift();
        a.diag_mut().mapv_inplace(|v| v - shift);
        Ok(OperatorMatrix { matrix: a, basis: Basis::Hermite2D { modes: k, components: 2, zero_mean: false }, weight: m })
    }

    /// Full scalar matrix; the zero-mean sector is the block without `phi_0`.
    pub fn vertical_matrix(&self, k: usize, alpha: f64, m: WeightExponent) -> Result<OperatorMatrix> {
        self.check_modes(k)?;
        let mut a = self.vertical_coupling(k)? * (-alpha);
        let d = HermiteBasis::new(k)?.lh_diagonal();
        for i in 0..k * k {
            a[[i, i]] += d[i];
        }
        Ok(OperatorMatrix { matrix: a, basis: Basis::Hermite2D { modes: k, components: 1, zero_mean: false }, weight: m })
    }

    fn horizontal_core_spectrum(&self, k: usize, alpha: f64) -> Result<Vec<Complex64>> {
        symmetric_eigenvalues(&self.horizontal_core(k, alpha), &SignedPerm::rotation_vector(k), &[])
    }

    /// Spectra of `L_{mu,alpha,h}` for several `mu` at one `alpha`. The
    /// matrices for different `mu` differ by a multiple of the identity, so
    /// one eigensolve per basis size serves all of them.
    pub fn horizontal_reports(&self, mus: &[f64], alpha: f64, m: WeightExponent) -> Result<Vec<SpectrumReport>> {
        let mut coarse = self.horizontal_core_spectrum(self.modes, alpha)?;
        let fine = self.horizontal_core_spectrum(self.modes + REFINEMENT, alpha)?;
        sort_desc(&mut coarse);
        mus.iter()
            .map(|&mu| {
                let p = StrainParams::unit(mu, alpha)?;
                let shift = 1.0 + p.horizontal_shift();
                let shifted: Vec<Complex64> = coarse.iter().map(|z| z - shift).collect();
                let fine_shifted: Vec<Complex64> = fine.iter().map(|z| z - shift).collect();
                let flags = label_converged(&shifted, &fine_shifted);
                let ess = essential_threshold_horizontal(m, mu);
                Ok(SpectrumReport {
                    operator: OperatorKind::Horizontal,
                    mu,
                    alpha,
                    m,
                    modes: self.modes,
                    eigenvalues: entries(&shifted, &flags, ess),
                })
            })
            .collect()
    }

    fn vertical_zero_mean_spectrum(&self, k: usize, alpha: f64) -> Result<Vec<Complex64>> {
        let a = self.vertical_matrix(k, alpha, WeightExponent::Gaussian)?.matrix;
        symmetric_eigenvalues(&a, &SignedPerm::rotation_scalar(k), &[0])
    }

    /// Spectrum of `L_{mu,alpha,3}` on the zero-mean sector (independent of `mu`).
    pub fn vertical_report(&self, mu: f64, alpha: f64, m: WeightExponent) -> Result<SpectrumReport> {
        let mut coarse = self.vertical_zero_mean_spectrum(self.modes, alpha)?;
        let fine = self.vertical_zero_mean_spectrum(self.modes + REFINEMENT, alpha)?;
        sort_desc(&mut coarse);
        let flags = label_converged(&coarse, &fine);
        Ok(SpectrumReport {
            operator: OperatorKind::Vertical,
            mu,
            alpha,
            m,
            modes: self.modes,
            eigenvalues: entries(&coarse, &flags, essential_threshold_vertical(m)),
        })
    }

    /// `||(A + I/2) d_i g|| / ||d_i g||` on the full scalar basis.
    pub fn translation_mode_residual(&self, alpha: f64) -> Result<f64> {
        let k = self.modes;
        let a = self.vertical_matrix(k, alpha, WeightExponent::Gaussian)?.matrix;
        let mut worst: f64 = 0.0;
        for axis in 0..2 {
            let v = Array1::from_iter(crate::hermite::grad_g_coeffs(k, axis).iter().copied());
            let r = a.dot(&v) + &v * 0.5;
            worst = worst.max(r.dot(&r).sqrt() / v.dot(&v).sqrt());
        }
        Ok(worst)
    }
}

fn entries(values: &[Complex64], flags: &[bool], essential: Option<f64>) -> Vec<EigenEntry> {
    values
        .iter()
        .zip(flags)
        .map(|(z, &c)| {
            let below = essential.is_some_and(|t| z.re < t);
            EigenEntry { re: z.re, im: z.im, converged: c && !below, below_essential: below }
        })
        .collect()
}

pub fn assemble_script_l_h(params: &StrainParams, m: WeightExponent, k: usize) -> Result<OperatorMatrix> {
    SpectrumSolver::new(k)?.horizontal_matrix(k, params, m)
}

pub fn assemble_script_l_3(params: &StrainParams, m: WeightExponent, k: usize, zero_mean: bool) -> Result<OperatorMatrix> {
    let full = SpectrumSolver::new(k)?.vertical_matrix(k, params.alpha(), m)?;
    if !zero_mean {
        return Ok(full);
    }
    let n = k * k;
    Ok(OperatorMatrix {
        matrix: full.matrix.slice(s![1..n, 1..n]).to_owned(),
        basis: Basis::Hermite2D { modes: k, components: 1, zero_mean: true },
        weight: m,
    })
}

/// Both sides of the three quadratic-form identities obtained by testing
/// `A w` against `w`, `xi . w` and `div w`, for a two-component coefficient
/// vector `w` whose degree stays at least three below `K`.
pub fn quadratic_form_identities(a: &Array2<f64>, k: usize, mu: f64, alpha: f64, w: &Array1<f64>) -> [(f64, f64); 3] {
    let n = k * k;
    let shift = (mu + 2.0) / (2.0 * (mu - 1.0));
    let split = |v: &Array1<f64>| -> [Coeffs; 2] {
        [0, 1].map(|c| v.slice(s![c * n..(c + 1) * n]).to_owned().into_shape_with_order((k, k)).expect("square"))
    };
    let aw = split(&a.dot(w));
    let wc = split(w);
    let norm2 = |c: &Coeffs| inner(c, c);

    let lhs1 = aw.iter().zip(&wc).map(|(x, y)| inner(x, y)).sum::<f64>();
    let lh1 = wc.iter().map(|c| inner(&apply_lh(c), c)).sum::<f64>();
    let rhs1 = lh1 - (1.0 + shift) * wc.iter().map(norm2).sum::<f64>() + 2.0 * alpha * strain_form(&wc, k);

    let xw = mul_x(&wc[0], 0) + mul_x(&wc[1], 1);
    let divw = deriv(&wc[0], 0) + deriv(&wc[1], 1);
    let lhs2 = (0..2).map(|i| inner(&aw[i], &mul_x(&xw, i))).sum::<f64>();
    let rhs2 = inner(&apply_lh(&xw), &xw) - (1.5 + shift) * norm2(&xw) - 2.0 * inner(&divw, &xw);

    let lhs3 = -(0..2).map(|i| inner(&aw[i], &lower(&divw, i))).sum::<f64>();
    let rhs3 = inner(&apply_lh(&divw), &divw) - (0.5 + shift) * norm2(&divw);
    [(lhs1, rhs1), (lhs2, rhs2), (lhs3, rhs3)]
}

/// `int e^{r^2/4} (xi.w)(xi^perp.w) u'(|xi|^2)` by pointwise Gauss-Hermite quadrature.
fn strain_form(w: &[Coeffs; 2], k: usize) -> f64 {
    let gh = GaussHermite::new(2 * k + 48);
    let p: Vec<Vec<f64>> = gh.nodes.iter().map(|&x| crate::quad::hermite_values(x, k)).collect();
    let mut acc = 0.0;
    for (a, &x) in gh.nodes.iter().enumerate() {
        for (b, &y) in gh.nodes.iter().enumerate() {
            let mut wv = [0.0; 2];
            for c in 0..2 {
                for k1 in 0..k {
                    let row: f64 = (0..k).map(|k2| w[c][[k1, k2]] * p[b][k2]).sum();
                    wv[c] += p[a][k1] * row;
                }
            }
            let du = crate::fields::swirl_derivs(x * x + y * y)[1];
            acc += gh.weights[a] * gh.weights[b] * du * (x * wv[0] + y * wv[1]) * (-y * wv[0] + x * wv[1]);
        }
    }
    acc
}
