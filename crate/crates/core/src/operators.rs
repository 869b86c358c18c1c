//! Assembly of the dense operator matrices on truncated Fourier coordinates:
//! the tangential Dirac-type operator D, the reflection N, multiplication
//! operators, the perturbed generators `D0 = D B0 + sigma N` and
//! `D0~ = B0 D - sigma N`, the Hodge splittings they induce, resolvents and
//! spectra.
//!
//! Stacked coefficient vectors use the global index `(k + K) * 2m + c`,
//! matching [`crate::fourier::BoundarySection`].

use crate::error::{Error, Result};
use crate::fourier::{BoundarySection, CoefficientField};
use crate::linalg::{self, CMat, ONE, ZERO};
use num_complex::Complex64;

/// What a dense operator matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorTag {
    D,
    N,
    Mult,
    D0,
    D0Tilde,
    Projection,
    FunctionOfD0,
}

/// A dense complex matrix acting on stacked Fourier coefficients.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub m: usize,
    pub k_max: usize,
    pub tag: OperatorTag,
    pub sigma: Option<f64>,
    pub entries: CMat,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        2 * self.m * (2 * self.k_max + 1)
    }

    pub fn apply(&self, f: &BoundarySection) -> Result<BoundarySection> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs section dim {}",
                self.dim(),
                f.dim()
            )));
        }
        Ok(BoundarySection::from_vector(
            self.m,
            self.k_max,
            &self.entries * f.as_vector(),
        ))
    }
}

pub fn global_index(m: usize, k_max: usize, c: usize, k: i64) -> usize {
    (k + k_max as i64) as usize * 2 * m + c
}

/// The operator `[[0, -d/dtheta], [d/dtheta, 0]]` on sections; block diagonal
/// over modes with mode-k block `[[0, -ik], [ik, 0]] (x) I_m`.
pub fn assemble_d(m: usize, k_max: usize) -> OperatorMatrix {
    let dim = 2 * m * (2 * k_max + 1);
    let mut a = CMat::zeros(dim, dim);
    for k in -(k_max as i64)..=(k_max as i64) {
        let ik = Complex64::new(0.0, k as f64);
        for alpha in 0..m {
            let row_n = global_index(m, k_max, alpha, k);
            let row_t = global_index(m, k_max, m + alpha, k);
            a[(row_n, row_t)] = -ik;
            a[(row_t, row_n)] = ik;
        }
    }
    OperatorMatrix {
        m,
        k_max,
        tag: OperatorTag::D,
        sigma: None,
        entries: a,
    }
}

/// The reflection `N = diag(-I_m, I_m)` in the normal/tangential splitting.
pub fn assemble_n(m: usize, k_max: usize) -> OperatorMatrix {
    let dim = 2 * m * (2 * k_max + 1);
    let mut a = CMat::zeros(dim, dim);
    for k in -(k_max as i64)..=(k_max as i64) {
        for c in 0..2 * m {
            let i = global_index(m, k_max, c, k);
            a[(i, i)] = if c < m {
                Complex64::new(-1.0, 0.0)
            } else {
                ONE
            };
        }
    }
    OperatorMatrix {
        m,
        k_max,
        tag: OperatorTag::N,
        sigma: None,
        entries: a,
    }
}

/// Multiplication by a matrix field as a block-Toeplitz matrix truncated to
/// modes |k| <= K: coupling from input mode k' to output mode k through the
/// field mode k - k'.
pub fn assemble_mult(b: &CoefficientField, k_max: usize) -> OperatorMatrix {
    let m = b.m();
    let dim = 2 * m * (2 * k_max + 1);
    let mut a = CMat::zeros(dim, dim);
    let kb = b.k_max() as i64;
    for k_out in -(k_max as i64)..=(k_max as i64) {
        for k_in in -(k_max as i64)..=(k_max as i64) {
            let diff = k_out - k_in;
            if diff.abs() > kb {
                continue;
            }
            for r in 0..2 * m {
                for c in 0..2 * m {
                    let v = b.entry(r, c, diff);
                    if v != ZERO {
                        a[(
                            global_index(m, k_max, r, k_out),
                            global_index(m, k_max, c, k_in),
                        )] = v;
                    }
                }
            }
        }
    }
    OperatorMatrix {
        m,
        k_max,
        tag: OperatorTag::Mult,
        sigma: None,
        entries: a,
    }
}

/// The generators `D0 = D M_B0 + sigma N` and `D0~ = M_B0 D - sigma N`.
pub fn assemble_d0(b0: &CoefficientField, k_max: usize, sigma: f64) -> (OperatorMatrix, OperatorMatrix) {
    let m = b0.m();
    let d = assemble_d(m, k_max);
    let n = assemble_n(m, k_max);
    let mb = assemble_mult(b0, k_max);
    let sn = &n.entries * Complex64::new(sigma, 0.0);
    let d0 = &d.entries * &mb.entries + &sn;
    let d0t = &mb.entries * &d.entries - &sn;
    (
        OperatorMatrix {
            m,
            k_max,
            tag: OperatorTag::D0,
            sigma: Some(sigma),
            entries: d0,
        },
        OperatorMatrix {
            m,
            k_max,
            tag: OperatorTag::D0Tilde,
            sigma: Some(sigma),
            entries: d0t,
        },
    )
}

/// Orthogonal projection onto mean-zero sections (kills k = 0 coordinates).
pub fn assemble_p_meanzero(m: usize, k_max: usize) -> OperatorMatrix {
    let dim = 2 * m * (2 * k_max + 1);
    let mut a = CMat::identity(dim, dim);
    for c in 0..2 * m {
        let i = global_index(m, k_max, c, 0);
        a[(i, i)] = ZERO;
    }
    OperatorMatrix {
        m,
        k_max,
        tag: OperatorTag::Projection,
        sigma: None,
        entries: a,
    }
}

/// Indices of the mean-zero coordinate subspace (modes k != 0).
pub fn meanzero_indices(m: usize, k_max: usize) -> Vec<usize> {
    let mut idx = Vec::new();
    for k in -(k_max as i64)..=(k_max as i64) {
        if k == 0 {
            continue;
        }
        for c in 0..2 * m {
            idx.push(global_index(m, k_max, c, k));
        }
    }
    idx
}

/// Restrict a dense matrix to a coordinate subspace.
pub fn restrict(a: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Embed a matrix on a coordinate subspace back into the full space (zero
/// elsewhere).
pub fn embed(a: &CMat, idx: &[usize], dim: usize) -> CMat {
    let mut out = CMat::zeros(dim, dim);
    for (i, &gi) in idx.iter().enumerate() {
        for (j, &gj) in idx.iter().enumerate() {
            out[(gi, gj)] = a[(i, j)];
        }
    }
    out
}

/// The two topological Hodge splittings induced by accretive coefficients:
/// mean-zero + B0^{-1}(constants), and B0(mean-zero) + constants.
pub struct HodgeProjections {
    /// projection onto the mean-zero subspace along B0^{-1}(constants)
    pub p1: OperatorMatrix,
    /// projection onto B0^{-1}(constants) along the mean-zero subspace
    pub p0: OperatorMatrix,
    /// projection onto B0(mean-zero) along constants
    pub p1_tilde: OperatorMatrix,
    /// projection onto constants along B0(mean-zero)
    pub p0_tilde: OperatorMatrix,
}

/// Assemble the Hodge projections for accretive `b0` by solving the
/// splitting on the truncated coordinate space: a section g is written as
/// `M_B0 h + c` with h mean-zero and c constant, which makes every returned
/// matrix an exact projection with the stated range. The closed
/// harmonic-mean formula is kept separately as an oracle, see
/// [`harmonic_mean_projection`].
pub fn hodge_projections(b0: &CoefficientField, k_max: usize) -> Result<HodgeProjections> {
    let m = b0.m();
    let dim = 2 * m * (2 * k_max + 1);
    let mb = assemble_mult(b0, k_max).entries;
    let idx_h = meanzero_indices(m, k_max);
    // compression of the multiplication operator to the mean-zero subspace
    let r = restrict(&mb, &idx_h);
    let cond = linalg::condition_number_2(&r);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::IllConditioned { cond, limit: 1e12 });
    }
    let r_inv = linalg::solve(&r, &CMat::identity(idx_h.len(), idx_h.len()))?;

    // p0_tilde g = the constant part c of g = M h + c:
    // h = R^{-1} g_{k!=0}, c = g_{k=0} - (M h)_{k=0}
    let mut p0t = CMat::zeros(dim, dim);
    for c0 in 0..2 * m {
        let row_out = global_index(m, k_max, c0, 0);
        p0t[(row_out, row_out)] = ONE;
    }
    // subtract (M iota_H R^{-1} restrict_H)_{k=0 rows}
    for (jh, &gj) in idx_h.iter().enumerate() {
        for c0 in 0..2 * m {
            let row_out = global_index(m, k_max, c0, 0);
            let mut acc = ZERO;
            for (ih, &gi) in idx_h.iter().enumerate() {
                acc += mb[(row_out, gi)] * r_inv[(ih, jh)];
            }
            p0t[(row_out, gj)] -= acc;
        }
    }
    let id = CMat::identity(dim, dim);
    let p1t = &id - &p0t;
    // p0 = M^{-1} p0_tilde M
    let mb_inv = linalg::solve(&mb, &id)?;
    let p0 = &mb_inv * &p0t * &mb;
    let p1 = &id - &p0;
    let mk = |entries: CMat| OperatorMatrix {
        m,
        k_max,
        tag: OperatorTag::Projection,
        sigma: None,
        entries,
    };
    Ok(HodgeProjections {
        p1: mk(p1),
        p0: mk(p0),
        p1_tilde: mk(p1t),
        p0_tilde: mk(p0t),
    })
}

/// Closed-form projection onto constants along the image of mean-zero
/// sections: `g -> (mean of B0^{-1})^{-1} mean(B0^{-1} g)`. Exact for the
/// untruncated operator; used as an independent oracle for
/// [`hodge_projections`].
pub fn harmonic_mean_projection(b0: &CoefficientField, k_max: usize) -> Result<CMat> {
    let m = b0.m();
    let dim = 2 * m * (2 * k_max + 1);
    // modes of B0^{-1} from a dealiased grid, enough to pair against any
    // input mode |k| <= K
    let ng = 8 * (2 * (b0.k_max() + k_max) + 1);
    let vals = b0.eval_grid(ng)?;
    let mut invs = Vec::with_capacity(ng);
    for (j, v) in vals.iter().enumerate() {
        invs.push(v.clone().lu().try_inverse().ok_or_else(|| Error::DegenerateCoefficient {
            what: "coefficient matrix not invertible".into(),
            theta: 2.0 * std::f64::consts::PI * j as f64 / ng as f64,
        })?);
    }
    let inv_field = CoefficientField::from_grid(m, k_max + b0.k_max(), &invs)?;
    let mut mean_inv = CMat::zeros(2 * m, 2 * m);
    for r in 0..2 * m {
        for c in 0..2 * m {
            mean_inv[(r, c)] = inv_field.entry(r, c, 0);
        }
    }
    let hm = mean_inv.lu().try_inverse().ok_or_else(|| {
        Error::NearSingular("harmonic mean of coefficients is singular".into())
    })?;
    // mean(B0^{-1} g)_r = sum_k (B0^{-1})^{(-k)}_{rc} g_c(k)
    let mut p0t = CMat::zeros(dim, dim);
    for r in 0..2 * m {
        let row_out = global_index(m, k_max, r, 0);
        for c in 0..2 * m {
            for k in -(k_max as i64)..=(k_max as i64) {
                let col = global_index(m, k_max, c, k);
                let mut acc = ZERO;
                for rr in 0..2 * m {
                    acc += hm[(r, rr)] * inv_field.entry(rr, c, -k);
                }
                p0t[(row_out, col)] += acc;
            }
        }
    }
    Ok(p0t)
}

/// Report from a resolvent solve at one point.
pub struct ResolventReport {
    pub solution: CMat,
    pub norm: f64,
    /// the bound `1 / (sqrt(y^2 + sigma^2) / tan(omega) - |x|)` at the fitted
    /// opening angle, infinite when the point is inside the fitted region
    pub hyperbolic_bound: f64,
}

/// Solve (lambda - D0) X = I and report the resolvent norm together with the
/// hyperbolic-region bound at the fitted opening angle.
pub fn resolvent(d0: &OperatorMatrix, lambda: Complex64) -> Result<ResolventReport> {
    let dim = d0.entries.nrows();
    let a = CMat::identity(dim, dim) * lambda - &d0.entries;
    let sv = a.clone().svd(false, false).singular_values;
    let smin = sv.min();
    if smin < 1e-12 * sv.max() {
        return Err(Error::NearSingular(format!(
            "lambda = {lambda} is within tolerance of the spectrum"
        )));
    }
    let solution = linalg::solve(&a, &CMat::identity(dim, dim))?;
    let norm = linalg::spectral_norm(&solution);
    let sigma = d0.sigma.unwrap_or(0.0);
    let spec = spectrum(d0)?;
    let bound = if spec.omega > 0.0 {
        let t = spec.omega.tan();
        let denom = (lambda.im * lambda.im + sigma * sigma).sqrt() / t - lambda.re.abs();
        if denom > 0.0 {
            1.0 / denom
        } else {
            f64::INFINITY
        }
    } else {
        f64::INFINITY
    };
    Ok(ResolventReport {
        solution,
        norm,
        hyperbolic_bound: bound,
    })
}

/// Dense spectrum of an operator matrix with the fitted double-hyperbola
/// opening angle.
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    /// smallest omega with (tan^2 omega) x^2 >= y^2 + sigma^2 over the
    /// spectrum restricted to the mean-zero subspace
    pub omega: f64,
    /// eigenvalues (restricted to mean-zero) whose real part vanishes, so no
    /// hyperbolic region can contain them
    pub violations: usize,
    /// smallest |lambda| on the mean-zero subspace
    pub gap: f64,
}

pub fn spectrum(op: &OperatorMatrix) -> Result<SpectrumReport> {
    let sigma = op.sigma.unwrap_or(0.0);
    let all = eigenvalues_of(&op.entries)?;
    // the invariant mean-zero part carries the bisectorial spectrum; the
    // k = 0 block contributes the +-sigma eigenvalues
    let idx = meanzero_indices(op.m, op.k_max);
    let restricted = restrict(&op.entries, &idx);
    let h_eigs = eigenvalues_of(&restricted)?;
    let axis_tol = 1e-10 * linalg::spectral_norm(&op.entries).max(1.0);
    let mut omega: f64 = 0.0;
    let mut violations = 0usize;
    let mut gap = f64::INFINITY;
    for z in &h_eigs {
        gap = gap.min(z.norm());
        if z.re.abs() <= axis_tol {
            violations += 1;
        } else {
            let t = (z.im * z.im + sigma * sigma).sqrt() / z.re.abs();
            omega = omega.max(t.atan());
        }
    }
    Ok(SpectrumReport {
        eigenvalues: all,
        omega,
        violations,
        gap,
    })
}

pub fn eigenvalues_of(a: &CMat) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = linalg::complex_schur(a)?;
    let mut v: Vec<Complex64> = (0..a.nrows()).map(|i| t[(i, i)]).collect();
    v.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(v)
}

/// The mean-zero representative of the class `h~` solving `D0 h = D h~`:
/// `h~ = P(B0 h) + sigma D^{-1} N h`, with `D^{-1}` the inverse of D on the
/// mean-zero subspace extended by zero on constants.
pub fn h_to_tilde(
    h: &BoundarySection,
    b0: &CoefficientField,
    k_max: usize,
    sigma: f64,
) -> Result<BoundarySection> {
    let m = b0.m();
    let b0h = assemble_mult(b0, k_max).apply(h)?;
    let mut out = b0h.project_mean_zero();
    if sigma != 0.0 {
        // D^{-1} N h mode by mode: invert [[0, -ik], [ik, 0]] for k != 0
        for k in -(k_max as i64)..=(k_max as i64) {
            if k == 0 {
                continue;
            }
            let ik = Complex64::new(0.0, k as f64);
            for alpha in 0..m {
                // N h = (-h_perp, h_par)
                let hn = -h.coeff(alpha, k);
                let ht = h.coeff(m + alpha, k);
                // solve [[0,-ik],[ik,0]] (x, y) = (hn, ht)
                let x = ht / ik;
                let y = -hn / ik;
                let s = Complex64::new(sigma, 0.0);
                let cur_n = out.coeff(alpha, k);
                let cur_t = out.coeff(m + alpha, k);
                out.set_coeff(alpha, k, cur_n + s * x);
                out.set_coeff(m + alpha, k, cur_t + s * y);
            }
        }
    }
    Ok(out)
}
