//! Pointwise matrix algebra on coefficient fields: the self-inverse block
//! transform feeding the first-order system, conjugate coefficients,
//! accretivity constants, the coefficient discrepancy with its Carleson
//! bookkeeping, and the Lipschitz pullback of coefficients.

use crate::error::{Error, Result};
use crate::fourier::CoefficientField;
use crate::linalg::{self, CMat, ZERO};
use crate::operators;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

fn theta_of(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Invert the top-left m x m block of a 2m x 2m matrix, failing with the
/// grid location when it is singular.
fn invert_block(a: &CMat, m: usize, theta: f64, what: &str) -> Result<CMat> {
    let blk = a.view((0, 0), (m, m)).into_owned();
    blk.lu().try_inverse().ok_or_else(|| Error::DegenerateCoefficient {
        what: what.into(),
        theta,
    })
}

/// Re-analyze a pointwise matrix map of a field. The map produces values
/// that are not band-limited, so the analysis grid starts at the dealiased
/// size 4(2K+1) and doubles until the outer quarter of the recovered modes
/// drops below round-off, then trailing negligible modes are trimmed. The
/// final outer-band magnitude is recorded as the truncation residual.
fn pointwise_field_map(
    a: &CoefficientField,
    map: impl Fn(&CMat, f64) -> Result<CMat>,
) -> Result<CoefficientField> {
    let m = a.m();
    let tol = 1e-13;
    let mut n = 4 * (2 * a.k_max() + 1);
    loop {
        let vals = a.eval_grid(n)?;
        let mut out = Vec::with_capacity(n);
        for (j, v) in vals.iter().enumerate() {
            out.push(map(v, theta_of(j, n))?);
        }
        let k_full = (n - 1) / 2;
        let field = CoefficientField::from_grid(m, k_full, &out)?;
        // magnitude profile over |k|
        let band_max = |lo: usize, hi: usize| -> f64 {
            let mut mx: f64 = 0.0;
            for r in 0..2 * m {
                for c in 0..2 * m {
                    for k in lo as i64..=hi as i64 {
                        mx = mx.max(field.entry(r, c, k).norm());
                        mx = mx.max(field.entry(r, c, -k).norm());
                    }
                }
            }
            mx
        };
        let scale = band_max(0, k_full).max(1e-300);
        let outer = band_max(3 * k_full / 4, k_full);
        if outer <= tol * scale || n >= 4096 {
            // trim trailing modes below round-off
            let mut k_keep = a.k_max().min(k_full);
            for k in (a.k_max()..=k_full).rev() {
                if band_max(k, k) > tol * scale {
                    k_keep = k;
                    break;
                }
            }
            let mut trimmed = field.resize_modes(k_keep);
            trimmed.truncation_residual = band_max(k_keep + 1, k_full).max(outer);
            return Ok(trimmed);
        }
        n *= 2;
    }
}

/// The self-inverse block transform exchanging the normal flux and normal
/// gradient components: with A = [[a, b], [c, d]] in the normal/tangential
/// splitting, returns [[a^{-1}, -a^{-1} b], [c a^{-1}, d - c a^{-1} b]].
pub fn hat_transform(a: &CoefficientField) -> Result<CoefficientField> {
    let m = a.m();
    pointwise_field_map(a, |v, theta| {
        let ainv = invert_block(v, m, theta, "normal-normal block singular")?;
        let b = v.view((0, m), (m, m)).into_owned();
        let c = v.view((m, 0), (m, m)).into_owned();
        let d = v.view((m, m), (m, m)).into_owned();
        let mut w = CMat::zeros(2 * m, 2 * m);
        w.view_mut((0, 0), (m, m)).copy_from(&ainv);
        w.view_mut((0, m), (m, m)).copy_from(&(-&ainv * &b));
        w.view_mut((m, 0), (m, m)).copy_from(&(&c * &ainv));
        w.view_mut((m, m), (m, m)).copy_from(&(&d - &c * &ainv * &b));
        Ok(w)
    })
}

/// Conjugate coefficients J^t A^{-1} J with J the quarter-turn
/// [[0, -I], [I, 0]]; for scalar equations this is (det A)^{-1} A^t.
pub fn conjugate_coefficients(a: &CoefficientField) -> Result<CoefficientField> {
    let m = a.m();
    let mut jmat = CMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        jmat[(i, m + i)] = Complex64::new(-1.0, 0.0);
        jmat[(m + i, i)] = Complex64::new(1.0, 0.0);
    }
    let jt = jmat.transpose();
    pointwise_field_map(a, |v, theta| {
        let inv = v.clone().lu().try_inverse().ok_or_else(|| Error::DegenerateCoefficient {
            what: "coefficient matrix singular".into(),
            theta,
        })?;
        Ok(&jt * inv * &jmat)
    })
}

/// Smallest eigenvalue of the symmetrized quadratic form g -> Re (M_A g, g)
/// restricted to sections whose tangential mean vanishes, normalized by
/// ||g||^2. Positive return values certify strict accretivity on that space.
pub fn accretivity_garding(a: &CoefficientField) -> Result<f64> {
    let m = a.m();
    let k_max = a.k_max();
    let mult = operators::assemble_mult(a, k_max).entries;
    let herm = (&mult + mult.adjoint()) * Complex64::new(0.5, 0.0);
    // admissible coordinates: everything except the tangential k = 0 modes
    let mut idx = Vec::new();
    for k in -(k_max as i64)..=(k_max as i64) {
        for c in 0..2 * m {
            if k == 0 && c >= m {
                continue;
            }
            idx.push(operators::global_index(m, k_max, c, k));
        }
    }
    let restricted = operators::restrict(&herm, &idx);
    let eig = nalgebra::linalg::SymmetricEigen::new(restricted);
    Ok(eig.eigenvalues.min())
}

/// Min over a dense evaluation grid of the smallest eigenvalue of the
/// pointwise Hermitian part.
pub fn accretivity_pointwise(a: &CoefficientField) -> Result<f64> {
    let n = 4 * (2 * a.k_max() + 1);
    let vals = a.eval_grid(n)?;
    let mut min = f64::INFINITY;
    for v in &vals {
        let herm = (v + v.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = nalgebra::linalg::SymmetricEigen::new(herm);
        min = min.min(eig.eigenvalues.min());
    }
    Ok(min)
}

/// Compute and cache both accretivity constants on a field.
pub fn with_accretivity(mut a: CoefficientField) -> Result<CoefficientField> {
    a.kappa_garding = Some(accretivity_garding(&a)?);
    a.kappa_pointwise = Some(accretivity_pointwise(&a)?);
    Ok(a)
}

/// Radially dependent coefficients given by a boundary trace and samples on
/// a radial/time grid (t = ln(1/r), so t = 0 is the boundary).
#[derive(Debug, Clone)]
pub struct RadialCoefficient {
    pub boundary: CoefficientField,
    /// (t, A_t) samples, understood as piecewise constant on the time grid
    pub samples: Vec<(f64, CoefficientField)>,
}

impl RadialCoefficient {
    pub fn radially_independent(boundary: CoefficientField) -> Self {
        RadialCoefficient {
            boundary,
            samples: Vec::new(),
        }
    }

    /// Coefficient matrix field at time t (nearest sample at or below t,
    /// boundary trace when no sample applies).
    pub fn at_time(&self, t: f64) -> &CoefficientField {
        let mut best: Option<(f64, &CoefficientField)> = None;
        for (s, f) in &self.samples {
            if *s <= t && best.map_or(true, |(bs, _)| *s > bs) {
                best = Some((*s, f));
            }
        }
        best.map(|(_, f)| f).unwrap_or(&self.boundary)
    }
}

/// The transformed-coefficient discrepancy on a time grid: base transformed
/// boundary trace and per-node deviations, with cached norms.
#[derive(Debug, Clone)]
pub struct Discrepancy {
    /// transformed boundary trace
    pub base: CoefficientField,
    /// time nodes (representatives of the trajectory intervals), ascending
    pub times: Vec<f64>,
    /// deviation of the transformed coefficients at each node
    pub samples: Vec<CoefficientField>,
    pub carleson_norm: Option<f64>,
    pub sup_norm: Option<f64>,
}

impl Discrepancy {
    /// Radially independent coefficients: zero discrepancy.
    pub fn zero(base: CoefficientField, times: Vec<f64>) -> Self {
        let m = base.m();
        let k = base.k_max();
        let samples = times.iter().map(|_| CoefficientField::zero(m, k)).collect();
        Discrepancy {
            base,
            times,
            samples,
            carleson_norm: Some(0.0),
            sup_norm: Some(0.0),
        }
    }

    /// Build from transformed fields at each node: deviation = base - field(t).
    pub fn from_transformed_samples(
        base: CoefficientField,
        times: Vec<f64>,
        fields: &[CoefficientField],
    ) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::DimensionMismatch("times vs samples".into()));
        }
        let samples = fields
            .iter()
            .map(|f| base.sub(&f.resize_modes(base.k_max())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Discrepancy {
            base,
            times,
            samples,
            carleson_norm: None,
            sup_norm: None,
        })
    }

    /// Transform radially dependent coefficients node by node.
    pub fn from_radial(a: &RadialCoefficient, times: &[f64]) -> Result<Self> {
        let b0 = hat_transform(&a.boundary)?;
        if a.samples.is_empty() {
            return Ok(Self::zero(b0, times.to_vec()));
        }
        let fields = times
            .iter()
            .map(|&t| hat_transform(a.at_time(t)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_transformed_samples(b0, times.to_vec(), &fields)
    }

    pub fn is_zero(&self) -> bool {
        self.samples
            .iter()
            .all(|s| (0..2 * s.m()).all(|r| {
                (0..2 * s.m()).all(|c| s.entry_modes(r, c).iter().all(|z| z.norm() == 0.0))
            }))
    }

    /// Pointwise adjoint discrepancy, the one driving the adjoint problem:
    /// reflect with N on both sides and take the pointwise adjoint.
    pub fn adjoint_reflected(&self) -> Result<Discrepancy> {
        let reflect = |f: &CoefficientField| -> CoefficientField {
            let m = f.m();
            let mut out = f.adjoint();
            // N X N: flips the sign of the off-diagonal blocks
            for r in 0..2 * m {
                for c in 0..2 * m {
                    if (r < m) != (c < m) {
                        for k in -(f.k_max() as i64)..=(f.k_max() as i64) {
                            let v = out.entry(r, c, k);
                            out.set_entry(r, c, k, -v);
                        }
                    }
                }
            }
            out
        };
        Ok(Discrepancy {
            base: reflect(&self.base),
            times: self.times.clone(),
            samples: self.samples.iter().map(reflect).collect(),
            carleson_norm: self.carleson_norm,
            sup_norm: self.sup_norm,
        })
    }

    /// Max over nodes and grid points of the pointwise operator norm.
    pub fn compute_sup_norm(&mut self) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for s in &self.samples {
            sup = sup.max(s.sup_norm(0)?);
        }
        self.sup_norm = Some(sup);
        Ok(sup)
    }

    /// Compute and cache the discretized Carleson norm.
    pub fn compute_carleson(&mut self, n_theta: usize) -> Result<f64> {
        let rep = carleson_norm(self, n_theta, &[])?;
        self.carleson_norm = Some(rep.norm);
        Ok(rep.norm)
    }
}

/// Whitney geometry used by the Carleson and non-tangential machinery:
/// boxes `{(s, phi): |phi - theta| < C1 t, 1/C0 < s/t < C0}`.
pub const WHITNEY_C0: f64 = 2.0;
pub const WHITNEY_C1: f64 = 0.5;

/// Discretized modified Carleson norm of the discrepancy and its
/// restrictions to boundary strips t < tau.
pub struct CarlesonReport {
    pub norm: f64,
    /// per requested tau, the norm of the discrepancy cut to t < tau
    pub truncated: Vec<(f64, f64)>,
}

/// Sup over a dyadic family of boundary arcs of the Carleson box average of
/// the squared Whitney sup of the discrepancy, discretized on the time grid
/// and a uniform angular grid.
pub fn carleson_norm(e: &Discrepancy, n_theta: usize, taus: &[f64]) -> Result<CarlesonReport> {
    let l = e.times.len();
    if l == 0 {
        return Ok(CarlesonReport {
            norm: 0.0,
            truncated: taus.iter().map(|&t| (t, 0.0)).collect(),
        });
    }
    // pointwise operator norm of the discrepancy on the (t, theta) grid
    let mut mag = vec![vec![0.0f64; n_theta]; l];
    for (li, s) in e.samples.iter().enumerate() {
        let vals = s.eval_grid(n_theta)?;
        for (j, v) in vals.iter().enumerate() {
            mag[li][j] = linalg::spectral_norm(v);
        }
    }
    // Whitney sup on the same grid
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut wsup = vec![vec![0.0f64; n_theta]; l];
    for (li, &t) in e.times.iter().enumerate() {
        let half_arc = WHITNEY_C1 * t;
        let reach = (half_arc / dtheta).ceil() as i64;
        for j in 0..n_theta {
            let mut sup = 0.0f64;
            for (si, &s) in e.times.iter().enumerate() {
                if s * WHITNEY_C0 < t || s > t * WHITNEY_C0 {
                    continue;
                }
                for dj in -reach..=reach {
                    let jj = (j as i64 + dj).rem_euclid(n_theta as i64) as usize;
                    sup = sup.max(mag[si][jj]);
                }
            }
            wsup[li][j] = sup;
        }
    }
    // interval weights dt of the (piecewise-constant) time grid
    let weights = interval_weights(&e.times);
    let eval = |cut: Option<f64>| -> f64 {
        let mut worst: f64 = 0.0;
        let mut j_level = 2u32;
        loop {
            let radius = 2f64.powi(-(j_level as i32));
            if radius < e.times[0].max(1e-6) || j_level > 24 {
                break;
            }
            let n_arcs = ((2.0 * PI / radius).ceil() as usize).max(1);
            let pts_half = (radius / dtheta).ceil() as i64;
            for arc in 0..n_arcs {
                let center = 2.0 * PI * arc as f64 / n_arcs as f64;
                let jc = (center / dtheta).round() as i64;
                let mut acc = 0.0f64;
                for (li, &t) in e.times.iter().enumerate() {
                    if t >= radius {
                        continue;
                    }
                    if let Some(tau) = cut {
                        if t >= tau {
                            continue;
                        }
                    }
                    let wt = weights[li] / t;
                    for dj in -pts_half..=pts_half {
                        let jj = (jc + dj).rem_euclid(n_theta as i64) as usize;
                        acc += wsup[li][jj] * wsup[li][jj] * wt * dtheta;
                    }
                }
                worst = worst.max(acc / (2.0 * radius));
            }
            j_level += 1;
        }
        worst.sqrt()
    };
    let norm = eval(None);
    let truncated = taus.iter().map(|&tau| (tau, eval(Some(tau)))).collect();
    Ok(CarlesonReport { norm, truncated })
}

/// Lengths of the partition intervals represented by ascending nodes
/// (first interval reaches down to t = 0).
pub fn interval_weights(times: &[f64]) -> Vec<f64> {
    let l = times.len();
    let mut w = vec![0.0; l];
    for i in 0..l {
        let lo = if i == 0 { 0.0 } else { 0.5 * (times[i - 1] + times[i]) };
        let hi = if i + 1 == l {
            times[l - 1] + 0.5 * (times[l - 1] - times[l - 2].max(0.0))
        } else {
            0.5 * (times[i] + times[i + 1])
        };
        w[i] = hi - lo;
    }
    w
}

/// Pull back boundary coefficients along a bi-Lipschitz boundary map. Inputs
/// are Cartesian-frame samples of the coefficients at the image points and
/// the Jacobians of the map at the grid angles; the result is re-expressed
/// in the moving frame and re-analyzed. Each m x m component pair transforms
/// through its 2 x 2 spatial block as |det J| J^{-1} A J^{-t}.
pub fn pullback_coefficients(
    a_at_image_cartesian: &[CMat],
    jacobians: &[DMatrix<f64>],
    m: usize,
    k_out: usize,
) -> Result<CoefficientField> {
    let n = a_at_image_cartesian.len();
    if jacobians.len() != n {
        return Err(Error::DimensionMismatch("samples vs jacobians".into()));
    }
    let mut frame_samples = Vec::with_capacity(n);
    for (j, (a, jac)) in a_at_image_cartesian.iter().zip(jacobians).enumerate() {
        let det = jac[(0, 0)] * jac[(1, 1)] - jac[(0, 1)] * jac[(1, 0)];
        if det.abs() < 1e-14 {
            return Err(Error::SingularJacobian { index: j });
        }
        let jinv = DMatrix::from_row_slice(
            2,
            2,
            &[
                jac[(1, 1)] / det,
                -jac[(0, 1)] / det,
                -jac[(1, 0)] / det,
                jac[(0, 0)] / det,
            ],
        );
        let theta = theta_of(j, n);
        let mut out = CMat::zeros(2 * m, 2 * m);
        for alpha in 0..m {
            for beta in 0..m {
                // spatial 2x2 block of the (alpha, beta) component pair
                let blk = [
                    [a[(alpha, beta)], a[(alpha, m + beta)]],
                    [a[(m + alpha, beta)], a[(m + alpha, m + beta)]],
                ];
                let mut pb = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = ZERO;
                        for p in 0..2 {
                            for q in 0..2 {
                                acc += Complex64::new(jinv[(r, p)], 0.0)
                                    * blk[p][q]
                                    * Complex64::new(jinv[(c, q)], 0.0);
                            }
                        }
                        pb[r][c] = acc * Complex64::new(det.abs(), 0.0);
                    }
                }
                // Cartesian -> moving frame at angle theta
                let (ct, st) = (theta.cos(), theta.sin());
                let q = [[ct, -st], [st, ct]];
                let mut fr = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = ZERO;
                        for p in 0..2 {
                            for s in 0..2 {
                                acc += Complex64::new(q[p][r], 0.0)
                                    * pb[p][s]
                                    * Complex64::new(q[s][c], 0.0);
                            }
                        }
                        fr[r][c] = acc;
                    }
                }
                out[(alpha, beta)] = fr[0][0];
                out[(alpha, m + beta)] = fr[0][1];
                out[(m + alpha, beta)] = fr[1][0];
                out[(m + alpha, m + beta)] = fr[1][1];
            }
        }
        frame_samples.push(out);
    }
    CoefficientField::from_grid(m, k_out, &frame_samples)
}

/// Cartesian-frame grid samples of a moving-frame coefficient field.
pub fn field_to_cartesian_grid(a: &CoefficientField, n: usize) -> Result<Vec<CMat>> {
    let m = a.m();
    let vals = a.eval_grid(n)?;
    let mut out = Vec::with_capacity(n);
    for (j, v) in vals.iter().enumerate() {
        let theta = theta_of(j, n);
        let (ct, st) = (theta.cos(), theta.sin());
        let q = [[ct, -st], [st, ct]];
        let mut w = CMat::zeros(2 * m, 2 * m);
        for alpha in 0..m {
            for beta in 0..m {
                let blk = [
                    [v[(alpha, beta)], v[(alpha, m + beta)]],
                    [v[(m + alpha, beta)], v[(m + alpha, m + beta)]],
                ];
                // A_cart = Q A_frame Q^t
                let mut cart = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        let mut acc = ZERO;
                        for p in 0..2 {
                            for s in 0..2 {
                                acc += Complex64::new(q[r][p], 0.0)
                                    * blk[p][s]
                                    * Complex64::new(q[c][s], 0.0);
                            }
                        }
                        cart[r][c] = acc;
                    }
                }
                w[(alpha, beta)] = cart[0][0];
                w[(alpha, m + beta)] = cart[0][1];
                w[(m + alpha, beta)] = cart[1][0];
                w[(m + alpha, m + beta)] = cart[1][1];
            }
        }
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::CoefficientField;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    pub fn random_accretive(
        m: usize,
        k_max: usize,
        bandwidth: usize,
        amp: f64,
        rng: &mut ChaCha8Rng,
    ) -> CoefficientField {
        let mut f = CoefficientField::identity(m, k_max);
        let bw = bandwidth.min(k_max) as i64;
        for r in 0..2 * m {
            for c in 0..2 * m {
                for k in 1..=bw {
                    let z = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                        * Complex64::new(amp, 0.0);
                    f.set_entry(r, c, k, z);
                    f.set_entry(r, c, -k, z.conj());
                }
            }
        }
        f
    }

    #[test]
    fn hat_fixes_identity_and_diagonal() {
        let id = CoefficientField::identity(1, 4);
        let h = hat_transform(&id).unwrap();
        assert!(h.grid_distance_to(&id, 64).unwrap() < 1e-13);

        let mut diag = CMat::zeros(2, 2);
        diag[(0, 0)] = Complex64::new(2.0, 0.0);
        diag[(1, 1)] = Complex64::new(3.0, 0.0);
        let a = CoefficientField::constant(1, 2, &diag);
        let h = hat_transform(&a).unwrap();
        let mut expect = CMat::zeros(2, 2);
        expect[(0, 0)] = Complex64::new(0.5, 0.0);
        expect[(1, 1)] = Complex64::new(3.0, 0.0);
        let e = CoefficientField::constant(1, 2, &expect);
        assert!(h.grid_distance_to(&e, 64).unwrap() < 1e-13);
    }

    #[test]
    fn hat_is_involutive_on_random_accretive_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for m in [1usize, 2] {
            let a = random_accretive(m, 4, 3, 0.3 / (m as f64), &mut rng);
            let hh = hat_transform(&hat_transform(&a).unwrap()).unwrap();
            let d = hh.grid_distance_to(&a, 128).unwrap();
            assert!(d < 1e-11, "m={m}: involution defect {d}");
        }
    }

    #[test]
    fn conjugate_matches_det_formula_for_scalar_case() {
        // A = diag(a, d) constants: conj = diag(1/d, 1/a)
        let mut dmat = CMat::zeros(2, 2);
        dmat[(0, 0)] = Complex64::new(2.0, 0.0);
        dmat[(1, 1)] = Complex64::new(5.0, 0.0);
        let a = CoefficientField::constant(1, 2, &dmat);
        let c = conjugate_coefficients(&a).unwrap();
        let mut expect = CMat::zeros(2, 2);
        expect[(0, 0)] = Complex64::new(0.2, 0.0);
        expect[(1, 1)] = Complex64::new(0.5, 0.0);
        let e = CoefficientField::constant(1, 2, &expect);
        assert!(c.grid_distance_to(&e, 32).unwrap() < 1e-13);

        // identity is fixed
        let id = CoefficientField::identity(1, 3);
        assert!(conjugate_coefficients(&id)
            .unwrap()
            .grid_distance_to(&id, 32)
            .unwrap()
            < 1e-13);

        // upper triangular: [[1, b], [0, 1]] -> [[1, 0], [b, 1]]
        let mut t = CMat::identity(2, 2);
        t[(0, 1)] = Complex64::new(0.7, 0.0);
        let a = CoefficientField::constant(1, 2, &t);
        let c = conjugate_coefficients(&a).unwrap();
        let mut expect = CMat::identity(2, 2);
        expect[(1, 0)] = Complex64::new(0.7, 0.0);
        let e = CoefficientField::constant(1, 2, &expect);
        assert!(c.grid_distance_to(&e, 32).unwrap() < 1e-12);
    }

    #[test]
    fn conjugate_is_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = random_accretive(1, 3, 2, 0.3, &mut rng);
        let cc = conjugate_coefficients(&conjugate_coefficients(&a).unwrap()).unwrap();
        let d = cc.grid_distance_to(&a, 128).unwrap();
        assert!(d < 1e-11, "conjugate involution defect {d}");
    }

    #[test]
    fn garding_constant_examples() {
        let id = CoefficientField::identity(1, 3);
        assert!((accretivity_garding(&id).unwrap() - 1.0).abs() < 1e-12);

        let mut dmat = CMat::zeros(2, 2);
        dmat[(0, 0)] = Complex64::new(2.0, 0.0);
        dmat[(1, 1)] = Complex64::new(3.0, 0.0);
        let a = CoefficientField::constant(1, 3, &dmat);
        assert!((accretivity_garding(&a).unwrap() - 2.0).abs() < 1e-12);

        // constant non-normal matrix: min eigenvalue of the Hermitian part,
        // attained on nonzero modes where both components are admissible
        let mut t = CMat::identity(2, 2);
        t[(0, 1)] = Complex64::new(1.9, 0.0);
        let a = CoefficientField::constant(1, 3, &t);
        let got = accretivity_garding(&a).unwrap();
        assert!((got - 0.05).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn pointwise_constants_and_consistency() {
        let id = CoefficientField::identity(1, 3);
        assert!((accretivity_pointwise(&id).unwrap() - 1.0).abs() < 1e-12);

        // Hermitian with eigenvalues {1, 4} everywhere
        let mut h = CMat::zeros(2, 2);
        h[(0, 0)] = Complex64::new(2.5, 0.0);
        h[(0, 1)] = Complex64::new(1.5, 0.0);
        h[(1, 0)] = Complex64::new(1.5, 0.0);
        h[(1, 1)] = Complex64::new(2.5, 0.0);
        let a = CoefficientField::constant(1, 3, &h);
        assert!((accretivity_pointwise(&a).unwrap() - 1.0).abs() < 1e-12);

        // discretized form constant dominates the pointwise constant
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let a = random_accretive(1, 6, 2, 0.35, &mut rng);
            let kg = accretivity_garding(&a).unwrap();
            let kp = accretivity_pointwise(&a).unwrap();
            assert!(
                kp <= kg + 1e-10,
                "pointwise {kp} should not exceed form constant {kg}"
            );
        }
    }

    #[test]
    fn carleson_norm_zero_discrepancy() {
        let base = CoefficientField::identity(1, 2);
        let times: Vec<f64> = (0..20).map(|i| 1e-3 * 1.4f64.powi(i)).collect();
        let e = Discrepancy::zero(base, times);
        let rep = carleson_norm(&e, 64, &[0.1, 1.0]).unwrap();
        assert_eq!(rep.norm, 0.0);
        assert!(rep.truncated.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn carleson_norm_matches_direct_double_sum() {
        // discrepancy equal to a constant matrix for t < t0, zero above
        let base = CoefficientField::identity(1, 2);
        let times: Vec<f64> = (0..24).map(|i| 1e-3 * 1.5f64.powi(i)).collect();
        let t0 = 0.2;
        let mut cmat = CMat::zeros(2, 2);
        cmat[(0, 0)] = Complex64::new(0.3, 0.0);
        cmat[(1, 1)] = Complex64::new(0.3, 0.0);
        let fields: Vec<CoefficientField> = times
            .iter()
            .map(|&t| {
                if t < t0 {
                    CoefficientField::constant(1, 2, &(CMat::identity(2, 2) - &cmat))
                } else {
                    CoefficientField::identity(1, 2)
                }
            })
            .collect();
        let e = Discrepancy::from_transformed_samples(base, times.clone(), &fields).unwrap();
        let n_theta = 64;
        let rep = carleson_norm(&e, n_theta, &[]).unwrap();

        // direct double sum oracle: |E| = 0.3 wherever the Whitney box
        // reaches below t0 within the span of the time samples
        let weights = interval_weights(&times);
        let mut worst: f64 = 0.0;
        let mut j = 2i32;
        while 2f64.powi(-j) >= times[0].max(1e-6) && j <= 24 {
            let radius = 2f64.powi(-j);
            // angle-independent data: every arc gives the same value
            let mut acc = 0.0;
            for (li, &t) in times.iter().enumerate() {
                if t >= radius {
                    continue;
                }
                let visible = times
                    .iter()
                    .any(|&s| s >= t / WHITNEY_C0 && s <= t * WHITNEY_C0 && s < t0);
                if visible {
                    acc += 0.09 * weights[li] / t;
                }
            }
            // box average over the arc: the angular integral cancels |Q|
            // up to the grid quantization of the arc
            let dtheta = 2.0 * PI / n_theta as f64;
            let pts = 2 * ((radius / dtheta).ceil() as i64) + 1;
            let frac = pts as f64 * dtheta / (2.0 * radius);
            worst = worst.max(acc * frac);
            j += 1;
        }
        let oracle = worst.sqrt();
        assert!(
            (rep.norm - oracle).abs() < 1e-12,
            "carleson {} vs direct sum {}",
            rep.norm,
            oracle
        );
        assert!(rep.norm > 0.0);
    }

    #[test]
    fn truncated_carleson_is_monotone_and_does_not_vanish_for_constant_discrepancy() {
        let base = CoefficientField::identity(1, 2);
        let times: Vec<f64> = (0..28).map(|i| 1e-3 * 1.5f64.powi(i)).collect();
        let mut dev = CMat::zeros(2, 2);
        dev[(0, 0)] = Complex64::new(0.2, 0.0);
        let fields: Vec<CoefficientField> = times
            .iter()
            .map(|_| CoefficientField::constant(1, 2, &(CMat::identity(2, 2) - &dev)))
            .collect();
        let e = Discrepancy::from_transformed_samples(base, times.clone(), &fields).unwrap();
        let taus = [0.02, 0.05, 0.1, 0.3, 1.0];
        let rep = carleson_norm(&e, 64, &taus).unwrap();
        for w in rep.truncated.windows(2) {
            assert!(
                w[0].1 <= w[1].1 + 1e-14,
                "truncated norm must be nondecreasing in tau"
            );
        }
        // constant-in-t discrepancy is not small-Carleson: the smallest
        // truncation still sees the full constant near the grid floor
        assert!(rep.truncated[0].1 > 0.1);
    }

    #[test]
    fn pullback_identity_and_scaling_fix_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let a = random_accretive(1, 4, 2, 0.3, &mut rng);
        let n = 64usize;
        let cart = field_to_cartesian_grid(&a, n).unwrap();
        let jid: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::identity(2, 2)).collect();
        let pb = pullback_coefficients(&cart, &jid, 1, 4).unwrap();
        assert!(pb.grid_distance_to(&a, 128).unwrap() < 1e-12);

        // scaling by s: |J| J^{-1} J^{-t} = identity in two dimensions
        let s = 1.7;
        let jsc: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::identity(2, 2) * s).collect();
        let pb = pullback_coefficients(&cart, &jsc, 1, 4).unwrap();
        assert!(pb.grid_distance_to(&a, 128).unwrap() < 1e-12);
    }

    #[test]
    fn pullback_by_rotation_shifts_the_frame_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = random_accretive(1, 4, 2, 0.3, &mut rng);
        let n = 64usize;
        let alpha = 2.0 * PI * 5.0 / n as f64;
        // samples of A at the rotated points, in Cartesian frame
        let cart_all = field_to_cartesian_grid(&a, n).unwrap();
        let rotated: Vec<CMat> = (0..n).map(|j| cart_all[(j + 5) % n].clone()).collect();
        let (ca, sa) = (alpha.cos(), alpha.sin());
        let jrot: Vec<DMatrix<f64>> = (0..n)
            .map(|_| DMatrix::from_row_slice(2, 2, &[ca, -sa, sa, ca]))
            .collect();
        let pb = pullback_coefficients(&rotated, &jrot, 1, 4).unwrap();
        // in the moving frame a rigid rotation is a pure angle shift
        let mut shifted = CoefficientField::zero(1, 4);
        for r in 0..2 {
            for c in 0..2 {
                for k in -4i64..=4 {
                    let phase = Complex64::new(0.0, k as f64 * alpha).exp();
                    shifted.set_entry(r, c, k, a.entry(r, c, k) * phase);
                }
            }
        }
        let d = pb.grid_distance_to(&shifted, 128).unwrap();
        assert!(d < 1e-12, "rotation pullback vs frame shift {d}");
    }

    #[test]
    fn singular_jacobian_rejected() {
        let a = CoefficientField::identity(1, 2);
        let n = 16usize;
        let cart = field_to_cartesian_grid(&a, n).unwrap();
        let mut jacs: Vec<DMatrix<f64>> = (0..n).map(|_| DMatrix::identity(2, 2)).collect();
        jacs[3] = DMatrix::zeros(2, 2);
        assert!(matches!(
            pullback_coefficients(&cart, &jacs, 1, 2),
            Err(Error::SingularJacobian { index: 3 })
        ));
    }

    #[test]
    fn accretivity_transported_by_hat() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..6 {
            let a = with_accretivity(random_accretive(1, 4, 2, 0.3, &mut rng)).unwrap();
            assert!(a.kappa_garding.unwrap() > 0.0);
            let b = with_accretivity(hat_transform(&a).unwrap()).unwrap();
            assert!(
                b.kappa_garding.unwrap() > 0.0,
                "transform must preserve accretivity, got {}",
                b.kappa_garding.unwrap()
            );
        }
    }

    #[test]
    fn boundary_trace_norms_dominate_interior() {
        // coefficients varying in t whose boundary trace is the identity:
        // sup norm of A_t at least that of A_1 and form constant at most
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a1 = CoefficientField::identity(1, 3);
        let mut interior = random_accretive(1, 3, 2, 0.2, &mut rng);
        interior.kappa_garding = None;
        let k1 = accretivity_garding(&a1).unwrap();
        let ki = accretivity_garding(&interior).unwrap();
        let s1 = a1.sup_norm(64).unwrap();
        let si = interior.sup_norm(64).unwrap();
        assert!(k1 >= ki - 1e-12);
        assert!(s1 <= si + 1e-12);
    }
}
