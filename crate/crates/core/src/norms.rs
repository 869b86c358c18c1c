//! Solution-class norms: the Whitney-averaged non-tangential maximal
//! function, the weighted square-function norms on trajectories, and the
//! weighted interior norm of gradients.

use crate::coeff::{interval_weights, WHITNEY_C0, WHITNEY_C1};
use crate::error::Result;
use crate::fourier::PolarGridFunction;
use crate::solver::{SolverContext, Trajectory};
use std::f64::consts::PI;

/// Values of a scalar quantity |f|^2 on a (time, angle) sampling grid.
pub struct CylinderSamples {
    /// ascending times
    pub times: Vec<f64>,
    /// squared magnitudes, `[time][angle]`, summed over components
    pub mag2: Vec<Vec<f64>>,
}

impl CylinderSamples {
    pub fn from_trajectory(traj: &Trajectory, n_theta: usize) -> Result<Self> {
        let mut mag2 = Vec::with_capacity(traj.grid.len());
        for s in &traj.sections {
            let vals = s.synthesize(n_theta)?;
            let mut row = vec![0.0f64; n_theta];
            for comp in &vals {
                for (j, z) in comp.iter().enumerate() {
                    row[j] += z.norm_sqr();
                }
            }
            mag2.push(row);
        }
        Ok(CylinderSamples {
            times: traj.grid.nodes.clone(),
            mag2,
        })
    }

    /// Interpret a polar grid function through t = ln(1/r).
    pub fn from_polar(g: &PolarGridFunction) -> Self {
        let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(g.radii.len());
        for (ri, &r) in g.radii.iter().enumerate() {
            let t = -(r.ln());
            if t <= 0.0 {
                continue;
            }
            let mut row = vec![0.0f64; g.angles.len()];
            for comp in &g.values {
                for (j, z) in comp[ri].iter().enumerate() {
                    row[j] += z.norm_sqr();
                }
            }
            pairs.push((t, row));
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        CylinderSamples {
            times: pairs.iter().map(|p| p.0).collect(),
            mag2: pairs.into_iter().map(|p| p.1).collect(),
        }
    }
}

/// The modified non-tangential maximal function on the boundary grid, using
/// the Whitney boxes `|phi - theta| < C1 t, t/C0 < s < C0 t` and the scales
/// carried by the samples, truncated to s < 1; returns the boundary values
/// and their L2 norm.
pub fn nt_maximal(samples: &CylinderSamples, n_theta: usize) -> (Vec<f64>, f64) {
    let dtheta = 2.0 * PI / n_theta as f64;
    let weights = interval_weights(&samples.times);
    let mut out = vec![0.0f64; n_theta];
    for &t in samples.times.iter() {
        if t >= WHITNEY_C0 {
            continue;
        }
        // box average of |f|^2 over the Whitney region at scale t
        let reach = ((WHITNEY_C1 * t) / dtheta).ceil().max(1.0) as i64;
        let arc = (2 * reach + 1) as f64 * dtheta;
        for j in 0..n_theta {
            let mut acc = 0.0f64;
            let mut area = 0.0f64;
            for (si, &s) in samples.times.iter().enumerate() {
                if s * WHITNEY_C0 < t || s > t * WHITNEY_C0 || s >= 1.0 {
                    continue;
                }
                let w = weights[si];
                for dj in -reach..=reach {
                    let jj = (j as i64 + dj).rem_euclid(n_theta as i64) as usize;
                    acc += samples.mag2[si][jj] * w * dtheta;
                }
                area += w * arc;
            }
            if area > 0.0 {
                out[j] = out[j].max((acc / area).sqrt());
            }
        }
    }
    let norm = (out.iter().map(|v| v * v).sum::<f64>() * dtheta).sqrt();
    (out, norm)
}

/// Weighted trajectory norms for the solution classes.
pub struct NormReport {
    /// int ||f_t||^2 min(t, 1) dt
    pub y_norm: f64,
    /// int ||f_t||^2 max(1/t, 1) dt (the dual-side weight)
    pub y_star_norm: f64,
    /// NT part + tail: (||NT(f)||^2 + int_1^oo ||f_t||^2 dt)^{1/2}
    pub x_norm: f64,
    pub nt_max_norm: f64,
    pub sup_l2_norm: f64,
    /// plain L2(dt) norm
    pub l2_norm: f64,
}

pub fn y_x_norms(traj: &Trajectory, n_theta: usize) -> Result<NormReport> {
    let weights = interval_weights(&traj.grid.nodes);
    let mut y2 = 0.0f64;
    let mut ys2 = 0.0f64;
    let mut l2 = 0.0f64;
    let mut tail2 = 0.0f64;
    let mut sup = 0.0f64;
    for (i, s) in traj.sections.iter().enumerate() {
        let t = traj.grid.nodes[i];
        let n2 = s.norm().powi(2);
        y2 += weights[i] * t.min(1.0) * n2;
        ys2 += weights[i] * (1.0 / t).max(1.0) * n2;
        l2 += weights[i] * n2;
        if t > 1.0 {
            tail2 += weights[i] * n2;
        }
        sup = sup.max(n2.sqrt());
    }
    let samples = CylinderSamples::from_trajectory(traj, n_theta)?;
    let (_, nt) = nt_maximal(&samples, n_theta);
    Ok(NormReport {
        y_norm: y2.sqrt(),
        y_star_norm: ys2.sqrt(),
        x_norm: (nt * nt + tail2).sqrt(),
        nt_max_norm: nt,
        sup_l2_norm: sup,
        l2_norm: l2.sqrt(),
    })
}

/// The weighted interior norm of the gradient of the associated solution:
/// `int |grad u|^2 (1 - |x|) dx` computed from the conormal trajectory.
pub fn grad_y_norm_squared(ctx: &SolverContext, f: &Trajectory) -> Result<f64> {
    let weights = interval_weights(&f.grid.nodes);
    let mb0 = crate::operators::assemble_mult(&ctx.handle.b0, ctx.handle.k_max);
    let mut acc = 0.0f64;
    for (i, s) in f.sections.iter().enumerate() {
        let t = f.grid.nodes[i];
        // B_t f = B0 f - E_t f
        let bf = {
            let base = mb0.apply(s)?;
            match ctx.disc.samples.get(i) {
                Some(e) if !e_is_zero(e) => {
                    let ef = crate::operators::assemble_mult(
                        &e.resize_modes(ctx.handle.k_max),
                        ctx.handle.k_max,
                    )
                    .apply(s)?;
                    crate::fourier::BoundarySection::from_vector(
                        s.m(),
                        s.k_max(),
                        base.as_vector() - ef.as_vector(),
                    )
                }
                _ => base,
            }
        };
        let n2 = bf.normal_half().norm().powi(2) + s.tangential_half().norm().powi(2);
        acc += weights[i] * (1.0 - (-t).exp()) * n2;
    }
    Ok(acc)
}

fn e_is_zero(e: &crate::fourier::CoefficientField) -> bool {
    (0..2 * e.m()).all(|r| {
        (0..2 * e.m()).all(|c| e.entry_modes(r, c).iter().all(|z| z.norm() == 0.0))
    })
}
