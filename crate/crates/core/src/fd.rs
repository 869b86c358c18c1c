//! Independent second-order finite-difference oracle for the scalar
//! divergence-form equation on the disk, discretized in polar coordinates
//! by cell-centered energy assembly and solved iteratively. This solver
//! shares no code path with the spectral pipeline.

use crate::error::{Error, Result};
use crate::fourier::{BoundarySection, CoefficientField, PolarGridFunction};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Sparse matrix in compressed-row form, assembled from triplets.
struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut trip: Vec<(u32, u32, f64)>) -> Csr {
        trip.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(trip.len());
        let mut val: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in trip {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c as usize);
                val.push(v);
                row_ptr[r as usize + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n,
            row_ptr,
            col,
            val,
        }
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[i] = acc;
        }
    }

    fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }

    fn is_symmetric(&self, tol: f64) -> bool {
        // probe a handful of random-ish entries
        for i in (0..self.n).step_by((self.n / 64).max(1)) {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k];
                let mut aji = 0.0;
                for kk in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col[kk] == i {
                        aji = self.val[kk];
                    }
                }
                if (self.val[k] - aji).abs() > tol * (1.0 + self.val[k].abs()) {
                    return false;
                }
            }
        }
        true
    }
}

/// Jacobi-preconditioned conjugate gradients.
fn cg(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let d = a.diag();
    let minv: Vec<f64> = d
        .iter()
        .map(|&x| if x.abs() > 1e-300 { 1.0 / x } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::IndefiniteOperator);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < tol * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NonConvergence("CG did not converge".into()))
}

/// BiCGStab with Jacobi preconditioning for the nonsymmetric case.
fn bicgstab(a: &Csr, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = a.n;
    let d = a.diag();
    let minv: Vec<f64> = d
        .iter()
        .map(|&x| if x.abs() > 1e-300 { 1.0 / x } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r0 = r.clone();
    let mut rho = 1.0f64;
    let mut alpha = 1.0f64;
    let mut omega = 1.0f64;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let b_norm = b.iter().map(|q| q * q).sum::<f64>().sqrt().max(1e-300);
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..max_iter {
        let rho_new: f64 = r0.iter().zip(&r).map(|(a, b)| a * b).sum();
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            phat[i] = p[i] * minv[i];
        }
        a.mul(&phat, &mut v);
        let r0v: f64 = r0.iter().zip(&v).map(|(a, b)| a * b).sum();
        alpha = rho / r0v;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        let sn = s.iter().map(|q| q * q).sum::<f64>().sqrt();
        if sn < tol * b_norm {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok(x);
        }
        for i in 0..n {
            shat[i] = s[i] * minv[i];
        }
        a.mul(&shat, &mut t);
        let tt: f64 = t.iter().map(|q| q * q).sum();
        let ts: f64 = t.iter().zip(&s).map(|(a, b)| a * b).sum();
        omega = ts / tt.max(1e-300);
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        let rn = r.iter().map(|q| q * q).sum::<f64>().sqrt();
        if rn < tol * b_norm {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence("BiCGStab did not converge".into()))
}

/// Coefficients for the oracle: real 2x2 matrix in the moving frame as a
/// function of (r, theta).
pub trait OracleCoefficients {
    fn at(&self, r: f64, theta: f64) -> [[f64; 2]; 2];
}

/// Radially independent coefficients from a (real) field.
pub struct FieldCoefficients {
    values: Vec<[[f64; 2]; 2]>,
}

impl FieldCoefficients {
    pub fn new(a: &CoefficientField, n_theta: usize) -> Result<Self> {
        if a.m() != 1 {
            return Err(Error::DimensionMismatch(
                "the finite-difference oracle handles scalar equations".into(),
            ));
        }
        let grid = a.eval_grid(n_theta)?;
        let mut values = Vec::with_capacity(n_theta);
        for g in &grid {
            let mut v = [[0.0f64; 2]; 2];
            for r in 0..2 {
                for c in 0..2 {
                    if g[(r, c)].im.abs() > 1e-10 {
                        return Err(Error::BadDatum(
                            "oracle coefficients must be real".into(),
                        ));
                    }
                    v[r][c] = g[(r, c)].re;
                }
            }
            values.push(v);
        }
        Ok(FieldCoefficients { values })
    }
}

impl OracleCoefficients for FieldCoefficients {
    fn at(&self, _r: f64, theta: f64) -> [[f64; 2]; 2] {
        let n = self.values.len();
        let j = ((theta / (2.0 * PI) * n as f64).round() as i64).rem_euclid(n as i64) as usize;
        self.values[j]
    }
}

/// Second-order finite-difference solution of `div A grad u = 0` with
/// Dirichlet data on the unit circle: nodes at radii i/n_r including a
/// single unknown at the center, cell-centered gradients, energy assembly,
/// iterative solve.
pub fn fd_dirichlet(
    coeff: &dyn OracleCoefficients,
    datum: &BoundarySection,
    n_r: usize,
    n_theta: usize,
) -> Result<PolarGridFunction> {
    if datum.m() != 1 {
        return Err(Error::DimensionMismatch("scalar datum expected".into()));
    }
    let h_r = 1.0 / n_r as f64;
    let h_t = 2.0 * PI / n_theta as f64;
    // unknowns: center (index 0) + rings i = 1..n_r-1
    let unknowns = 1 + (n_r - 1) * n_theta;
    let idx = |i: usize, j: usize| -> Option<usize> {
        match i {
            0 => Some(0),
            i if i < n_r => Some(1 + (i - 1) * n_theta + (j % n_theta)),
            _ => None, // boundary ring: known
        }
    };

    let phi_grid = datum.synthesize(n_theta)?;
    let solve_part = |part: &dyn Fn(Complex64) -> f64| -> Result<Vec<f64>> {
        let boundary: Vec<f64> = (0..n_theta).map(|j| part(phi_grid[0][j])).collect();
        let mut trip: Vec<(u32, u32, f64)> = Vec::new();
        let mut rhs = vec![0.0f64; unknowns];
        for i in 0..n_r {
            for j in 0..n_theta {
                let r_c = (i as f64 + 0.5) * h_r;
                let th_c = (j as f64 + 0.5) * h_t;
                let a = coeff.at(r_c, th_c);
                // local corners in order (i,j), (i,j+1), (i+1,j), (i+1,j+1)
                let corners = [
                    (i, j),
                    (i, (j + 1) % n_theta),
                    (i + 1, j),
                    (i + 1, (j + 1) % n_theta),
                ];
                // gradient rows: d_r and r^{-1} d_theta at the cell center
                let gr = [-0.5 / h_r, -0.5 / h_r, 0.5 / h_r, 0.5 / h_r];
                let gt = [
                    -0.5 / (h_t * r_c),
                    0.5 / (h_t * r_c),
                    -0.5 / (h_t * r_c),
                    0.5 / (h_t * r_c),
                ];
                let w = r_c * h_r * h_t;
                // local stiffness K = G^t A G * w
                for p in 0..4 {
                    for q in 0..4 {
                        let k = w
                            * (gr[p] * a[0][0] * gr[q]
                                + gr[p] * a[0][1] * gt[q]
                                + gt[p] * a[1][0] * gr[q]
                                + gt[p] * a[1][1] * gt[q]);
                        if k == 0.0 {
                            continue;
                        }
                        let (pi, pj) = corners[p];
                        let (qi, qj) = corners[q];
                        match (idx(pi, pj), idx(qi, qj)) {
                            (Some(rp), Some(cq)) => trip.push((rp as u32, cq as u32, k)),
                            (Some(rp), None) => rhs[rp] -= k * boundary[qj % n_theta],
                            _ => {}
                        }
                    }
                }
            }
        }
        let a = Csr::from_triplets(unknowns, trip);
        if a.is_symmetric(1e-9) {
            cg(&a, &rhs, 1e-12, 40 * unknowns.max(200))
        } else {
            bicgstab(&a, &rhs, 1e-12, 40 * unknowns.max(200))
        }
    };

    let re = solve_part(&|z: Complex64| z.re)?;
    let im_needed = phi_grid[0].iter().any(|z| z.im.abs() > 1e-14);
    let im = if im_needed {
        solve_part(&|z: Complex64| z.im)?
    } else {
        vec![0.0; unknowns]
    };

    let radii: Vec<f64> = (1..=n_r).map(|i| i as f64 * h_r).collect();
    let mut out = PolarGridFunction::new(radii, n_theta, 1)?;
    for i in 1..n_r {
        for j in 0..n_theta {
            let k = idx(i, j).unwrap();
            out.values[0][i - 1][j] = Complex64::new(re[k], im[k]);
        }
    }
    for j in 0..n_theta {
        out.values[0][n_r - 1][j] = phi_grid[0][j];
    }
    Ok(out)
}

/// Relative L2 distance over the disk between two scalar fields sampled on
/// the same polar grid, weighted by the area element.
pub fn relative_l2_distance(a: &PolarGridFunction, b: &PolarGridFunction) -> Result<f64> {
    if a.radii.len() != b.radii.len() || a.angles.len() != b.angles.len() {
        return Err(Error::DimensionMismatch("polar grids differ".into()));
    }
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for ri in 0..a.radii.len() {
        let r = a.radii[ri];
        for ti in 0..a.angles.len() {
            let d = (a.values[0][ri][ti] - b.values[0][ri][ti]).norm_sqr();
            num += d * r;
            den += b.values[0][ri][ti].norm_sqr() * r;
        }
    }
    Ok((num / den.max(1e-300)).sqrt())
}
