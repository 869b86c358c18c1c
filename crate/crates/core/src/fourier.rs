//! Boundary sections and coefficient fields on the unit circle, stored as
//! truncated Fourier series, together with synthesis/analysis, inner
//! products and the splitting into normal and tangential parts.
//!
//! A section takes values in C^{2m}: components `0..m` hold the normal part
//! and components `m..2m` the tangential part in the moving frame along the
//! circle, the tangential part being identified with its scalar component
//! along the counter-clockwise unit tangent.

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, ZERO};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Fourier synthesis: `values[j] = sum_k coeffs[k] e^{i k theta_j}` on the
/// uniform grid `theta_j = 2 pi j / n`. `coeffs` is in mode order -K..K.
pub fn synthesize_modes(coeffs: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    let nm = coeffs.len();
    if n < nm {
        return Err(Error::GridTooSmall { got: n, need: nm });
    }
    let k_max = (nm - 1) / 2;
    let mut buf = vec![ZERO; n];
    for (idx, &c) in coeffs.iter().enumerate() {
        let k = idx as i64 - k_max as i64;
        let pos = k.rem_euclid(n as i64) as usize;
        buf[pos] += c;
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf)
}

/// Fourier analysis: recover modes -K..K from `n >= 2K+1` uniform samples.
pub fn analyze_modes(values: &[Complex64], k_max: usize) -> Result<Vec<Complex64>> {
    let n = values.len();
    if n < 2 * k_max + 1 {
        return Err(Error::GridTooSmall {
            got: n,
            need: 2 * k_max + 1,
        });
    }
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let mut out = vec![ZERO; 2 * k_max + 1];
    for (idx, slot) in out.iter_mut().enumerate() {
        let k = idx as i64 - k_max as i64;
        let pos = k.rem_euclid(n as i64) as usize;
        *slot = buf[pos] * scale;
    }
    Ok(out)
}

/// A C^{2m}-valued function on the circle held as truncated Fourier
/// coefficients, components `0..m` normal and `m..2m` tangential.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySection {
    m: usize,
    k_max: usize,
    /// flat coefficient vector, global index `(k + K) * 2m + c`
    coeffs: CVec,
}

impl BoundarySection {
    pub fn zero(m: usize, k_max: usize) -> Self {
        assert!(m >= 1);
        BoundarySection {
            m,
            k_max,
            coeffs: CVec::zeros(2 * m * (2 * k_max + 1)),
        }
    }

    pub fn from_vector(m: usize, k_max: usize, coeffs: CVec) -> Self {
        assert_eq!(coeffs.len(), 2 * m * (2 * k_max + 1));
        BoundarySection { m, k_max, coeffs }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn as_vector(&self) -> &CVec {
        &self.coeffs
    }

    pub fn into_vector(self) -> CVec {
        self.coeffs
    }

    fn index(&self, c: usize, k: i64) -> usize {
        debug_assert!(c < 2 * self.m);
        debug_assert!(k.unsigned_abs() as usize <= self.k_max);
        (k + self.k_max as i64) as usize * 2 * self.m + c
    }

    pub fn coeff(&self, c: usize, k: i64) -> Complex64 {
        self.coeffs[self.index(c, k)]
    }

    pub fn set_coeff(&mut self, c: usize, k: i64, z: Complex64) {
        let i = self.index(c, k);
        self.coeffs[i] = z;
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate symmetry coeff(c,-k) = conj(coeff(c,k)) of real-valued fields.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        (0..2 * self.m).all(|c| {
            (0..=self.k_max as i64).all(|k| {
                (self.coeff(c, -k) - self.coeff(c, k).conj()).norm() <= tol
            })
        })
    }

    /// Exact trigonometric evaluation at `gridsize` uniform angles;
    /// result indexed `[component][gridpoint]`.
    pub fn synthesize(&self, gridsize: usize) -> Result<Vec<Vec<Complex64>>> {
        let nm = 2 * self.k_max + 1;
        (0..2 * self.m)
            .map(|c| {
                let modes: Vec<Complex64> =
                    (0..nm).map(|i| self.coeffs[i * 2 * self.m + c]).collect();
                synthesize_modes(&modes, gridsize)
            })
            .collect()
    }

    /// Recover a section from uniform grid samples `[component][gridpoint]`.
    pub fn analyze(m: usize, k_max: usize, values: &[Vec<Complex64>]) -> Result<Self> {
        if values.len() != 2 * m {
            return Err(Error::DimensionMismatch(format!(
                "expected {} components, got {}",
                2 * m,
                values.len()
            )));
        }
        let mut out = BoundarySection::zero(m, k_max);
        for (c, comp) in values.iter().enumerate() {
            let modes = analyze_modes(comp, k_max)?;
            for (idx, &z) in modes.iter().enumerate() {
                out.coeffs[idx * 2 * m + c] = z;
            }
        }
        Ok(out)
    }

    /// L2(S^1) pairing with the non-normalized arc length measure:
    /// (f, g) = 2 pi sum_{c,k} f(c,k) conj(g(c,k)).
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        if self.m != other.m || self.k_max != other.k_max {
            return Err(Error::DimensionMismatch(
                "sections must share m and K".into(),
            ));
        }
        // dotc conjugates its receiver, so pair from the other side
        Ok(other.coeffs.dotc(&self.coeffs) * Complex64::new(2.0 * PI, 0.0))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm() * (2.0 * PI).sqrt()
    }

    /// Orthogonal projection onto mean-zero sections (kills the k = 0 modes).
    pub fn project_mean_zero(&self) -> Self {
        let mut out = self.clone();
        for c in 0..2 * self.m {
            out.set_coeff(c, 0, ZERO);
        }
        out
    }

    /// (f_perp, 0): annihilates the tangential components.
    pub fn normal_half(&self) -> Self {
        let mut out = self.clone();
        for k in -(self.k_max as i64)..=(self.k_max as i64) {
            for c in self.m..2 * self.m {
                out.set_coeff(c, k, ZERO);
            }
        }
        out
    }

    /// (0, f_par): annihilates the normal components.
    pub fn tangential_half(&self) -> Self {
        let mut out = self.clone();
        for k in -(self.k_max as i64)..=(self.k_max as i64) {
            for c in 0..self.m {
                out.set_coeff(c, k, ZERO);
            }
        }
        out
    }

    /// Re-embed into a (possibly larger) truncation order.
    pub fn resize_modes(&self, k_new: usize) -> Self {
        let mut out = BoundarySection::zero(self.m, k_new);
        let kk = self.k_max.min(k_new) as i64;
        for k in -kk..=kk {
            for c in 0..2 * self.m {
                out.set_coeff(c, k, self.coeff(c, k));
            }
        }
        out
    }
}

/// A 2m x 2m matrix-valued function on the circle with each entry a
/// truncated Fourier series, plus cached accretivity constants.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    m: usize,
    k_max: usize,
    /// entries[row][col] in mode order -K..K
    entries: Vec<Vec<Vec<Complex64>>>,
    pub kappa_garding: Option<f64>,
    pub kappa_pointwise: Option<f64>,
    /// residual reported when the field was produced by re-analyzing grid
    /// values of a non band-limited function
    pub truncation_residual: f64,
}

impl CoefficientField {
    pub fn zero(m: usize, k_max: usize) -> Self {
        CoefficientField {
            m,
            k_max,
            entries: vec![vec![vec![ZERO; 2 * k_max + 1]; 2 * m]; 2 * m],
            kappa_garding: None,
            kappa_pointwise: None,
            truncation_residual: 0.0,
        }
    }

    pub fn identity(m: usize, k_max: usize) -> Self {
        let mut f = Self::zero(m, k_max);
        for c in 0..2 * m {
            f.set_entry(c, c, 0, Complex64::new(1.0, 0.0));
        }
        f
    }

    /// Constant-in-angle field from a 2m x 2m matrix.
    pub fn constant(m: usize, k_max: usize, mat: &CMat) -> Self {
        assert_eq!(mat.nrows(), 2 * m);
        assert_eq!(mat.ncols(), 2 * m);
        let mut f = Self::zero(m, k_max);
        for r in 0..2 * m {
            for c in 0..2 * m {
                f.set_entry(r, c, 0, mat[(r, c)]);
            }
        }
        f
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn entry(&self, row: usize, col: usize, k: i64) -> Complex64 {
        self.entries[row][col][(k + self.k_max as i64) as usize]
    }

    pub fn set_entry(&mut self, row: usize, col: usize, k: i64, z: Complex64) {
        self.entries[row][col][(k + self.k_max as i64) as usize] = z;
    }

    pub fn entry_modes(&self, row: usize, col: usize) -> &[Complex64] {
        &self.entries[row][col]
    }

    /// Largest |k| carrying a nonzero mode in any entry.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for r in 0..2 * self.m {
            for c in 0..2 * self.m {
                for k in -(self.k_max as i64)..=(self.k_max as i64) {
                    if self.entry(r, c, k).norm() > 0.0 {
                        bw = bw.max(k.unsigned_abs() as usize);
                    }
                }
            }
        }
        bw
    }

    /// Matrix values at `gridsize` uniform angles.
    pub fn eval_grid(&self, gridsize: usize) -> Result<Vec<CMat>> {
        let d = 2 * self.m;
        let mut grids = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                grids.push(synthesize_modes(&self.entries[r][c], gridsize)?);
            }
        }
        Ok((0..gridsize)
            .map(|j| CMat::from_fn(d, d, |r, c| grids[r * d + c][j]))
            .collect())
    }

    /// Re-analyze matrix grid samples into a field of order `k_max`,
    /// recording the discarded tail as `truncation_residual`.
    pub fn from_grid(m: usize, k_max: usize, samples: &[CMat]) -> Result<Self> {
        let d = 2 * m;
        let n = samples.len();
        let mut f = Self::zero(m, k_max);
        let mut resid: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let vals: Vec<Complex64> = samples.iter().map(|s| s[(r, c)]).collect();
                let full_k = (n - 1) / 2;
                let full = analyze_modes(&vals, full_k)?;
                for (idx, &z) in full.iter().enumerate() {
                    let k = idx as i64 - full_k as i64;
                    if k.unsigned_abs() as usize <= k_max {
                        f.set_entry(r, c, k, z);
                    } else {
                        resid = resid.max(z.norm());
                    }
                }
            }
        }
        f.truncation_residual = resid;
        Ok(f)
    }

    /// Sup over a dense grid of the pointwise operator 2-norm.
    pub fn sup_norm(&self, gridsize: usize) -> Result<f64> {
        let vals = self.eval_grid(gridsize.max(4 * (2 * self.k_max + 1)))?;
        Ok(vals
            .iter()
            .map(crate::linalg::spectral_norm)
            .fold(0.0, f64::max))
    }

    /// Pointwise adjoint field A(theta)^*.
    pub fn adjoint(&self) -> Self {
        let d = 2 * self.m;
        let mut out = Self::zero(self.m, self.k_max);
        for r in 0..d {
            for c in 0..d {
                for k in -(self.k_max as i64)..=(self.k_max as i64) {
                    out.set_entry(r, c, k, self.entry(c, r, -k).conj());
                }
            }
        }
        out
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = self.adjoint();
        self.distance_to(&adj) <= tol
    }

    /// Block (no normal/tangential coupling) test.
    pub fn is_block(&self, tol: f64) -> bool {
        let m = self.m;
        for r in 0..2 * m {
            for c in 0..2 * m {
                if (r < m) != (c < m) {
                    for k in -(self.k_max as i64)..=(self.k_max as i64) {
                        if self.entry(r, c, k).norm() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Max-abs coefficient distance between two fields (common truncation).
    pub fn distance_to(&self, other: &Self) -> f64 {
        let kk = self.k_max.max(other.k_max) as i64;
        let mut d: f64 = 0.0;
        for r in 0..2 * self.m {
            for c in 0..2 * self.m {
                for k in -kk..=kk {
                    let a = if k.unsigned_abs() as usize <= self.k_max {
                        self.entry(r, c, k)
                    } else {
                        ZERO
                    };
                    let b = if k.unsigned_abs() as usize <= other.k_max {
                        other.entry(r, c, k)
                    } else {
                        ZERO
                    };
                    d = d.max((a - b).norm());
                }
            }
        }
        d
    }

    /// Sup over a common dense grid of the pointwise max-abs entry difference.
    pub fn grid_distance_to(&self, other: &Self, gridsize: usize) -> Result<f64> {
        let n = gridsize
            .max(4 * (2 * self.k_max + 1))
            .max(4 * (2 * other.k_max + 1));
        let a = self.eval_grid(n)?;
        let b = other.eval_grid(n)?;
        let mut d: f64 = 0.0;
        for (ma, mb) in a.iter().zip(&b) {
            for (x, y) in ma.iter().zip(mb.iter()) {
                d = d.max((x - y).norm());
            }
        }
        Ok(d)
    }

    /// Pointwise product field (A B)(theta), computed on a dealiased grid
    /// and re-truncated.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let k = self.k_max.max(other.k_max);
        let n = 4 * (2 * k + 1);
        let a = self.eval_grid(n)?;
        let b = other.eval_grid(n)?;
        let prod: Vec<CMat> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_grid(self.m, k, &prod)
    }

    /// Apply the field pointwise to a section, on a dealiased grid.
    pub fn apply_section(&self, f: &BoundarySection) -> Result<BoundarySection> {
        let k = self.k_max.max(f.k_max());
        let n = 4 * (2 * k + 1);
        let mats = self.eval_grid(n)?;
        let vals = f.synthesize(n)?;
        let d = 2 * self.m;
        let mut out = vec![vec![ZERO; n]; d];
        for j in 0..n {
            for r in 0..d {
                let mut s = ZERO;
                for c in 0..d {
                    s += mats[j][(r, c)] * vals[c][j];
                }
                out[r][j] = s;
            }
        }
        BoundarySection::analyze(self.m, f.k_max(), &out)
    }

    /// Re-embed into a (possibly larger) truncation order.
    pub fn resize_modes(&self, k_new: usize) -> Self {
        let mut out = Self::zero(self.m, k_new);
        let kk = self.k_max.min(k_new) as i64;
        for r in 0..2 * self.m {
            for c in 0..2 * self.m {
                for k in -kk..=kk {
                    out.set_entry(r, c, k, self.entry(r, c, k));
                }
            }
        }
        out.kappa_garding = self.kappa_garding;
        out.kappa_pointwise = self.kappa_pointwise;
        out.truncation_residual = self.truncation_residual;
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for r in 0..2 * self.m {
            for c in 0..2 * self.m {
                for v in out.entries[r][c].iter_mut() {
                    *v *= s;
                }
            }
        }
        out.kappa_garding = None;
        out.kappa_pointwise = None;
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.m != other.m || self.k_max != other.k_max {
            return Err(Error::DimensionMismatch("field add".into()));
        }
        let mut out = self.clone();
        for r in 0..2 * self.m {
            for c in 0..2 * self.m {
                for (v, w) in out.entries[r][c].iter_mut().zip(&other.entries[r][c]) {
                    *v += w;
                }
            }
        }
        out.kappa_garding = None;
        out.kappa_pointwise = None;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }
}

/// Samples of a scalar-tuple field on a polar grid (r_j, theta_i), the
/// output carrier for solutions, gradients and conjugates.
#[derive(Debug, Clone)]
pub struct PolarGridFunction {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    /// `values[component][radius][angle]`
    pub values: Vec<Vec<Vec<Complex64>>>,
}

impl PolarGridFunction {
    pub fn new(radii: Vec<f64>, n_theta: usize, ncomp: usize) -> Result<Self> {
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DimensionMismatch(
                "polar radii must be strictly increasing".into(),
            ));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::DimensionMismatch(
                "polar radii must lie in (0, 1]".into(),
            ));
        }
        let angles = (0..n_theta)
            .map(|i| 2.0 * PI * i as f64 / n_theta as f64)
            .collect();
        let nr = radii.len();
        Ok(PolarGridFunction {
            radii,
            angles,
            values: vec![vec![vec![ZERO; n_theta]; nr]; ncomp],
        })
    }

    pub fn ncomp(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max absolute difference against another grid function on the same grid.
    pub fn max_distance_to(&self, other: &Self) -> Result<f64> {
        if self.radii.len() != other.radii.len()
            || self.angles.len() != other.angles.len()
            || self.ncomp() != other.ncomp()
        {
            return Err(Error::DimensionMismatch("polar grids differ".into()));
        }
        let mut d: f64 = 0.0;
        for (a, b) in self.values.iter().zip(&other.values) {
            for (ra, rb) in a.iter().zip(b) {
                for (x, y) in ra.iter().zip(rb) {
                    d = d.max((x - y).norm());
                }
            }
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub fn random_section(m: usize, k_max: usize, rng: &mut ChaCha8Rng) -> BoundarySection {
        let dim = 2 * m * (2 * k_max + 1);
        BoundarySection::from_vector(
            m,
            k_max,
            CVec::from_fn(dim, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            }),
        )
    }

    #[test]
    fn constant_mode_synthesizes_to_constant_grid() {
        let mut f = BoundarySection::zero(1, 2);
        f.set_coeff(0, 0, Complex64::new(1.0, 0.0));
        let vals = f.synthesize(8).unwrap();
        for v in &vals[0] {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
        for v in &vals[1] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_sampled_at_quarter_points() {
        // f = cos(theta) in component 0, K = 1, gridsize 4 -> (1, 0, -1, 0)
        let mut f = BoundarySection::zero(1, 1);
        f.set_coeff(0, 1, Complex64::new(0.5, 0.0));
        f.set_coeff(0, -1, Complex64::new(0.5, 0.0));
        let vals = f.synthesize(4).unwrap();
        let expect = [1.0, 0.0, -1.0, 0.0];
        for (v, e) in vals[0].iter().zip(expect) {
            assert!((v - Complex64::new(e, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn analyze_synthesize_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_section(2, 8, &mut rng);
        let vals = f.synthesize(64).unwrap();
        let g = BoundarySection::analyze(2, 8, &vals).unwrap();
        let d = (f.as_vector() - g.as_vector()).norm();
        assert!(d < 1e-13, "roundtrip residual {d}");
    }

    #[test]
    fn gridsize_too_small_is_an_error() {
        let f = BoundarySection::zero(1, 4);
        assert!(matches!(
            f.synthesize(5),
            Err(Error::GridTooSmall { .. })
        ));
    }

    #[test]
    fn mean_zero_projection_on_examples() {
        // constants are annihilated
        let mut c = BoundarySection::zero(1, 3);
        c.set_coeff(0, 0, Complex64::new(2.0, 1.0));
        c.set_coeff(1, 0, Complex64::new(-1.0, 0.5));
        assert!(c.project_mean_zero().norm() < 1e-15);
        // e^{i theta} is untouched
        let mut f = BoundarySection::zero(1, 3);
        f.set_coeff(0, 1, Complex64::new(1.0, 0.0));
        assert_eq!(f.project_mean_zero(), f);
    }

    #[test]
    fn inner_product_basics() {
        let mut f = BoundarySection::zero(1, 2);
        f.set_coeff(0, 0, Complex64::new(1.0, 0.0));
        let ip = f.inner_product(&f).unwrap();
        assert!((ip - Complex64::new(2.0 * PI, 0.0)).norm() < 1e-14);
        // orthogonal modes
        let mut g = BoundarySection::zero(1, 2);
        g.set_coeff(0, 1, Complex64::new(1.0, 0.0));
        let mut h = BoundarySection::zero(1, 2);
        h.set_coeff(0, 2, Complex64::new(1.0, 0.0));
        assert!(g.inner_product(&h).unwrap().norm() < 1e-15);
    }

    #[test]
    fn inner_product_matches_grid_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_section(1, 6, &mut rng);
        let g = random_section(1, 6, &mut rng);
        let n = 64usize;
        let fv = f.synthesize(n).unwrap();
        let gv = g.synthesize(n).unwrap();
        let mut quad = ZERO;
        for c in 0..2 {
            for j in 0..n {
                quad += fv[c][j] * gv[c][j].conj();
            }
        }
        quad *= Complex64::new(2.0 * PI / n as f64, 0.0);
        let ip = f.inner_product(&g).unwrap();
        assert!((ip - quad).norm() < 1e-12, "parseval defect {}", (ip - quad).norm());
    }

    #[test]
    fn field_product_of_band_limited_inputs_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = CoefficientField::zero(1, 6);
        let mut b = CoefficientField::zero(1, 6);
        for r in 0..2 {
            for c in 0..2 {
                for k in -2i64..=2 {
                    a.set_entry(r, c, k, Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                    b.set_entry(r, c, k, Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                }
            }
        }
        let p = a.multiply(&b).unwrap();
        // bandwidth 4 <= 6: product must be exact, zero truncation residual
        assert!(p.truncation_residual < 1e-14);
        // check one Fourier coefficient by hand convolution
        let mut expect = ZERO;
        for k in -2i64..=2 {
            let kp = 1 - k;
            if kp.abs() <= 2 {
                expect += a.entry(0, 0, k) * b.entry(0, 0, kp) + a.entry(0, 1, k) * b.entry(1, 0, kp);
            }
        }
        assert!((p.entry(0, 0, 1) - expect).norm() < 1e-13);
    }

    #[test]
    fn adjoint_is_involutive_and_detects_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut a = CoefficientField::zero(1, 4);
        for r in 0..2 {
            for c in 0..2 {
                for k in -2i64..=2 {
                    a.set_entry(r, c, k, Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                }
            }
        }
        assert!(a.adjoint().adjoint().distance_to(&a) < 1e-15);
        let h = a.add(&a.adjoint()).unwrap();
        assert!(h.is_hermitian(1e-14));
    }

    #[test]
    fn polar_grid_rejects_bad_radii() {
        assert!(PolarGridFunction::new(vec![0.5, 0.5], 8, 1).is_err());
        assert!(PolarGridFunction::new(vec![0.0, 0.5], 8, 1).is_err());
        assert!(PolarGridFunction::new(vec![0.2, 0.9, 1.0], 8, 1).is_ok());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn section_strategy() -> impl Strategy<Value = BoundarySection> {
            proptest::collection::vec(-5.0f64..5.0, 2 * 2 * (2 * 4 + 1) * 2).prop_map(|vals| {
                let dim = 2 * 2 * (2 * 4 + 1);
                let v = CVec::from_fn(dim, |i, _| Complex64::new(vals[2 * i], vals[2 * i + 1]));
                BoundarySection::from_vector(2, 4, v)
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn parseval_against_trapezoid(f in section_strategy(), g in section_strategy()) {
                let n = 32usize;
                let fv = f.synthesize(n).unwrap();
                let gv = g.synthesize(n).unwrap();
                let mut quad = ZERO;
                for c in 0..4 {
                    for j in 0..n {
                        quad += fv[c][j] * gv[c][j].conj();
                    }
                }
                quad *= Complex64::new(2.0 * PI / n as f64, 0.0);
                let ip = f.inner_product(&g).unwrap();
                prop_assert!((ip - quad).norm() < 1e-12 * (1.0 + f.norm() * g.norm()));
            }

            #[test]
            fn normal_tangential_split_is_orthogonal(f in section_strategy(), g in section_strategy()) {
                // f = (f_perp, 0) + (0, f_par) exactly and the two halves of
                // different sections are orthogonal
                let re = f.normal_half().as_vector() + f.tangential_half().as_vector();
                prop_assert!((re - f.as_vector()).norm() == 0.0);
                let ip = f.normal_half().inner_product(&g.tangential_half()).unwrap();
                prop_assert!(ip.norm() < 1e-12);
            }

            #[test]
            fn mean_zero_splitting_is_orthogonal(f in section_strategy()) {
                let p = f.project_mean_zero();
                let q = BoundarySection::from_vector(2, 4, f.as_vector() - p.as_vector());
                let total = f.norm().powi(2);
                let parts = p.norm().powi(2) + q.norm().powi(2);
                prop_assert!((total - parts).abs() < 1e-10 * (1.0 + total));
                // idempotent and self-adjoint
                prop_assert!((p.project_mean_zero().as_vector() - p.as_vector()).norm() == 0.0);
            }
        }
    }
}
