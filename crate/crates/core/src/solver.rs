//! The solution pipeline: semigroup trajectories on a geometric time grid,
//! the integral operator of the perturbed ODE and its potential-level
//! companion, the fixed-point / dense solve of the integral equation,
//! perturbed Hardy projections, well-posedness boundary maps, and the
//! reconstruction of solutions, gradients and conjugates on the disk.
//!
//! Trajectories are piecewise constant in time over the partition carried by
//! [`TimeGrid`]; every semigroup kernel is integrated exactly against that
//! representation, which keeps the derivative jump of `exp(-|t-s| L)` at
//! `s = t` harmless and makes the discrete operators adjoint-consistent.

use crate::calculus::CalculusHandle;
use crate::coeff::Discrepancy;
use crate::error::{Error, Result};
use crate::fourier::{BoundarySection, PolarGridFunction};
use crate::linalg::{self, CMat, CVec, ONE};
use crate::operators;
use num_complex::Complex64;

/// Geometric partition of (0, T_max] with interval representatives.
#[derive(Debug, Clone)]
pub struct TimeGrid {
    /// interval edges, ascending, `edges[0] = 0`
    pub edges: Vec<f64>,
    /// representative node inside each interval
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    /// Geometric grid with the given smallest positive edge, growth ratio
    /// and final time.
    pub fn geometric(t_min: f64, t_max: f64, ratio: f64) -> Self {
        assert!(t_min > 0.0 && t_max > t_min && ratio > 1.0);
        let mut edges = vec![0.0, t_min];
        let mut t = t_min;
        while t * ratio < t_max {
            t *= ratio;
            edges.push(t);
        }
        edges.push(t_max);
        let nodes = (0..edges.len() - 1)
            .map(|i| {
                if i == 0 {
                    0.5 * edges[1]
                } else {
                    (edges[i] * edges[i + 1]).sqrt()
                }
            })
            .collect();
        TimeGrid { edges, nodes }
    }

    /// Grid adapted to a generator: resolves down to `t_min` and out to the
    /// time where the decay semigroup drops below `decay_tol`.
    pub fn for_handle(handle: &CalculusHandle, t_min: f64, ratio: f64, decay_tol: f64) -> Self {
        let gap = handle.real_gap().max(1e-6);
        let t_max = (1.0 / decay_tol).ln() / gap;
        Self::geometric(t_min, t_max.max(8.0 * t_min), ratio)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Refine by splitting every interval at its representative.
    pub fn refine(&self) -> Self {
        let mut edges = vec![0.0];
        for i in 0..self.len() {
            edges.push(self.nodes[i]);
            edges.push(self.edges[i + 1]);
        }
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
        let nodes = (0..edges.len() - 1)
            .map(|i| {
                if i == 0 {
                    0.5 * edges[1]
                } else {
                    (edges[i] * edges[i + 1]).sqrt()
                }
            })
            .collect();
        TimeGrid { edges, nodes }
    }

    /// Euclidean-style norm on piecewise-constant trajectories:
    /// sqrt(sum_i |I_i| |v_i|^2).
    pub fn traj_norm(&self, v: &[CVec]) -> f64 {
        v.iter()
            .enumerate()
            .map(|(i, x)| self.width(i) * x.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    ConormalF,
    PotentialV,
}

/// A section-valued function of time, piecewise constant on the grid.
#[derive(Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub sections: Vec<BoundarySection>,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    pub fn from_vectors(grid: TimeGrid, m: usize, k_max: usize, v: Vec<CVec>, kind: TrajectoryKind) -> Self {
        let sections = v
            .into_iter()
            .map(|x| BoundarySection::from_vector(m, k_max, x))
            .collect();
        Trajectory {
            grid,
            sections,
            kind,
        }
    }

    pub fn vectors(&self) -> Vec<CVec> {
        self.sections.iter().map(|s| s.as_vector().clone()).collect()
    }

    /// Largest mean-mode content relative to the trajectory scale, which
    /// must vanish on conormal trajectories.
    pub fn mean_mode_residual(&self) -> f64 {
        let scale = self
            .sections
            .iter()
            .map(|s| s.norm())
            .fold(1e-300, f64::max);
        let mut worst: f64 = 0.0;
        for s in &self.sections {
            let mean = (s.as_vector() - s.project_mean_zero().as_vector()).norm()
                * (2.0 * std::f64::consts::PI).sqrt();
            worst = worst.max(mean / scale);
        }
        worst
    }
}

/// (1 - e^{-x}) / x with a series branch for small arguments.
fn omed(x: Complex64) -> Complex64 {
    if x.norm() < 1e-5 {
        ONE - x / 2.0 + x * x / 6.0 - x * x * x / 24.0
    } else {
        (ONE - (-x).exp()) / x
    }
}

/// Context for one coefficient configuration: generator calculus, time grid
/// and discrepancy samples aligned with the grid nodes.
pub struct SolverContext {
    pub handle: CalculusHandle,
    pub grid: TimeGrid,
    pub disc: Discrepancy,
    /// multiplication matrices of the discrepancy samples (None when zero)
    e_mults: Vec<Option<CMat>>,
}

impl SolverContext {
    pub fn new(handle: CalculusHandle, grid: TimeGrid, disc: Discrepancy) -> Result<Self> {
        if disc.times.len() != grid.len() {
            return Err(Error::DimensionMismatch(
                "discrepancy samples must align with the time grid".into(),
            ));
        }
        let k_max = handle.k_max;
        let e_mults = disc
            .samples
            .iter()
            .map(|s| {
                let zero = (0..2 * s.m()).all(|r| {
                    (0..2 * s.m()).all(|c| s.entry_modes(r, c).iter().all(|z| z.norm() == 0.0))
                });
                if zero {
                    None
                } else {
                    Some(operators::assemble_mult(&s.resize_modes(k_max), k_max).entries)
                }
            })
            .collect();
        Ok(SolverContext {
            handle,
            grid,
            disc,
            e_mults,
        })
    }

    pub fn radially_independent(handle: CalculusHandle, grid: TimeGrid) -> Self {
        let disc = Discrepancy::zero(handle.b0.clone(), grid.nodes.clone());
        let e_mults = grid.nodes.iter().map(|_| None).collect();
        SolverContext {
            handle,
            grid,
            disc,
            e_mults,
        }
    }

    pub fn is_radially_independent(&self) -> bool {
        self.e_mults.iter().all(|e| e.is_none())
    }

    fn dim(&self) -> usize {
        self.handle.dim
    }

    /// Pointwise discrepancy products E_j f_j for a full-space trajectory.
    fn e_times(&self, f: &[CVec]) -> Vec<Option<CVec>> {
        f.iter()
            .zip(&self.e_mults)
            .map(|(x, e)| e.as_ref().map(|m| m * x))
            .collect()
    }

    /// Piecewise-constant projection of t -> exp(-t L) w for w given in
    /// range spectral coordinates; returns spectral coordinates per node.
    fn pc_exp_spec(&self, w: &CVec) -> Vec<CVec> {
        let mu = self.abs_values();
        (0..self.grid.len())
            .map(|i| {
                let a = self.grid.edges[i];
                let h = self.grid.width(i);
                CVec::from_fn(w.len(), |j, _| {
                    let x = mu[j] * h;
                    w[j] * (-mu[j] * a).exp() * omed(x)
                })
            })
            .collect()
    }

    /// mu = lambda sgn(Re lambda): the spectral action of |D0|.
    fn abs_values(&self) -> Vec<Complex64> {
        self.handle
            .spec()
            .values
            .iter()
            .map(|z| if z.re >= 0.0 { *z } else { -*z })
            .collect()
    }

    fn abs_values_tilde(&self) -> Vec<Complex64> {
        self.handle
            .tilde_spec()
            .values
            .iter()
            .map(|z| if z.re >= 0.0 { *z } else { -*z })
            .collect()
    }

    fn plus_mask(&self) -> Vec<bool> {
        self.handle.spec().values.iter().map(|z| z.re >= 0.0).collect()
    }

    fn plus_mask_tilde(&self) -> Vec<bool> {
        self.handle
            .tilde_spec()
            .values
            .iter()
            .map(|z| z.re >= 0.0)
            .collect()
    }

    /// Apply the integral operator of the conormal equation to a trajectory
    /// (full-space vectors per node), returning node values of the same kind.
    pub fn apply_sa(&self, f: &[CVec]) -> Result<Vec<CVec>> {
        let spec = self.handle.spec();
        let r = spec.rank();
        let l = self.grid.len();
        let ef = self.e_times(f);
        // spectral coordinates of hat and check inputs per node
        let binv = self.handle.binv_p1t();
        let nrefl = &self.handle.n_refl;
        let sigma = self.handle.sigma;
        let mut y: Vec<Option<CVec>> = Vec::with_capacity(l);
        let mut z: Vec<Option<CVec>> = Vec::with_capacity(l);
        for g in &ef {
            match g {
                None => {
                    y.push(None);
                    z.push(None);
                }
                Some(g) => {
                    let bg = binv * g;
                    y.push(Some(&spec.to * &bg));
                    if sigma != 0.0 {
                        z.push(Some(&spec.to * (nrefl * &bg)));
                    } else {
                        z.push(None);
                    }
                }
            }
        }
        let mu = self.abs_values();
        let mask = self.plus_mask();
        let mut out = Vec::with_capacity(l);
        for i in 0..l {
            let (a, b) = (self.grid.edges[i], self.grid.edges[i + 1]);
            let hi = b - a;
            let mut acc = CVec::zeros(r);
            for j in 0..l {
                let (yj, zj) = (&y[j], &z[j]);
                if yj.is_none() && zj.is_none() {
                    continue;
                }
                let (c, d) = (self.grid.edges[j], self.grid.edges[j + 1]);
                let hj = d - c;
                if j < i {
                    // sources strictly below: plus-part kernels
                    for s in 0..r {
                        if !mask[s] {
                            continue;
                        }
                        let e_gap = (-mu[s] * (a - d)).exp();
                        let k_hat = e_gap * (ONE - (-mu[s] * hj).exp()) * omed(mu[s] * hi);
                        if let Some(yj) = yj {
                            acc[s] += k_hat * yj[s];
                        }
                        if let Some(zj) = zj {
                            acc[s] -= Complex64::new(sigma, 0.0) * (k_hat / mu[s]) * zj[s];
                        }
                    }
                } else if j > i {
                    // sources strictly above: minus-part kernels
                    for s in 0..r {
                        if mask[s] {
                            continue;
                        }
                        let e_gap = (-mu[s] * (c - b)).exp();
                        let k_hat = e_gap * (ONE - (-mu[s] * hj).exp()) * omed(mu[s] * hi);
                        if let Some(yj) = yj {
                            acc[s] += k_hat * yj[s];
                        }
                        // note the sign: the check-part integral above t
                        // enters with a minus, and S = hat - sigma check
                        if let Some(zj) = zj {
                            acc[s] += Complex64::new(sigma, 0.0) * (k_hat / mu[s]) * zj[s];
                        }
                    }
                } else {
                    // the diagonal cell: both sides of s = t inside one box
                    for s in 0..r {
                        let k_diag = ONE - omed(mu[s] * hi);
                        if let Some(yj) = yj {
                            acc[s] += k_diag * yj[s];
                        }
                        if let Some(zj) = zj {
                            let sgn = if mask[s] { 1.0 } else { -1.0 };
                            acc[s] -= Complex64::new(sigma * sgn, 0.0) * (k_diag / mu[s]) * zj[s];
                        }
                    }
                }
            }
            out.push(&spec.from * acc);
        }
        Ok(out)
    }

    /// Pointwise value of the integral operator at time t inside the grid.
    pub fn eval_sa(&self, f: &[CVec], t: f64) -> Result<CVec> {
        let spec = self.handle.spec();
        let r = spec.rank();
        let ef = self.e_times(f);
        let binv = self.handle.binv_p1t();
        let nrefl = &self.handle.n_refl;
        let sigma = self.handle.sigma;
        let mu = self.abs_values();
        let mask = self.plus_mask();
        let mut acc = CVec::zeros(r);
        for (j, g) in ef.iter().enumerate() {
            let g = match g {
                None => continue,
                Some(g) => g,
            };
            let bg = binv * g;
            let yj = &spec.to * &bg;
            let zj = if sigma != 0.0 {
                Some(&spec.to * (nrefl * &bg))
            } else {
                None
            };
            let (c, d) = (self.grid.edges[j], self.grid.edges[j + 1]);
            // below part: overlap of (0, t) with the interval
            let below_hi = d.min(t);
            if below_hi > c {
                for s in 0..r {
                    if !mask[s] {
                        continue;
                    }
                    // int_c^{below_hi} mu e^{-(t-s)mu} ds
                    let k = (-mu[s] * (t - below_hi)).exp() - (-mu[s] * (t - c)).exp();
                    acc[s] += k * yj[s];
                    if let Some(zj) = &zj {
                        acc[s] -= Complex64::new(sigma, 0.0) * (k / mu[s]) * zj[s];
                    }
                }
            }
            // above part: overlap of (t, oo)
            let above_lo = c.max(t);
            if d > above_lo {
                for s in 0..r {
                    if mask[s] {
                        continue;
                    }
                    let k = (-mu[s] * (above_lo - t)).exp() - (-mu[s] * (d - t)).exp();
                    acc[s] += k * yj[s];
                    if let Some(zj) = &zj {
                        acc[s] += Complex64::new(sigma, 0.0) * (k / mu[s]) * zj[s];
                    }
                }
            }
        }
        Ok(&spec.from * acc)
    }

    /// The potential-level integral operator applied to a conormal
    /// trajectory, node values.
    pub fn apply_sa_tilde(&self, f: &[CVec]) -> Result<Vec<CVec>> {
        let l = self.grid.len();
        let ts = (0..l).map(|i| self.node_pair(i)).collect::<Vec<_>>();
        let mut out = Vec::with_capacity(l);
        for (i, _) in ts.iter().enumerate() {
            out.push(self.sa_tilde_at_interval(f, i)?);
        }
        Ok(out)
    }

    fn node_pair(&self, i: usize) -> (f64, f64) {
        (self.grid.edges[i], self.grid.edges[i + 1])
    }

    /// Galerkin average of the potential-level operator over interval i.
    fn sa_tilde_at_interval(&self, f: &[CVec], i: usize) -> Result<CVec> {
        let tilde = self.handle.tilde_spec();
        let r = tilde.rank();
        let ef = self.e_times(f);
        let sigma = self.handle.sigma;
        let mu = self.abs_values_tilde();
        let mask = self.plus_mask_tilde();
        let (a, b) = self.node_pair(i);
        let hi = b - a;
        let mut acc = CVec::zeros(r);
        let mut null_acc = CVec::zeros(self.dim());
        let p0t = &self.handle.hodge.p0_tilde.entries;
        for (j, g) in ef.iter().enumerate() {
            let g = match g {
                None => continue,
                Some(g) => g,
            };
            let yj = &tilde.to * g;
            let (c, d) = self.node_pair(j);
            let hj = d - c;
            if j < i {
                for s in 0..r {
                    if !mask[s] {
                        continue;
                    }
                    let k = (-mu[s] * (a - d)).exp()
                        * (ONE - (-mu[s] * hj).exp())
                        * omed(mu[s] * hi)
                        / mu[s];
                    acc[s] += k * yj[s];
                }
            } else if j > i {
                for s in 0..r {
                    if mask[s] {
                        continue;
                    }
                    let k = (-mu[s] * (c - b)).exp()
                        * (ONE - (-mu[s] * hj).exp())
                        * omed(mu[s] * hi)
                        / mu[s];
                    acc[s] -= k * yj[s];
                }
            } else {
                for s in 0..r {
                    let k = (ONE - omed(mu[s] * hi)) / mu[s];
                    if mask[s] {
                        acc[s] += k * yj[s];
                    } else {
                        acc[s] -= k * yj[s];
                    }
                }
            }
            if sigma == 0.0 {
                // null directions: the decay semigroup is the identity there
                let pg = p0t * g;
                let (wb, wa) = overlap_weights_avg(a, b, c, d);
                // below: N^- projection, above: -N^+
                for idx in 0..self.dim() {
                    let is_normal = self.is_normal_coord(idx);
                    if wb > 0.0 && is_normal {
                        null_acc[idx] += Complex64::new(wb, 0.0) * pg[idx];
                    }
                    if wa > 0.0 && !is_normal {
                        null_acc[idx] -= Complex64::new(wa, 0.0) * pg[idx];
                    }
                }
            }
        }
        let mut out = &tilde.from * acc;
        if sigma == 0.0 {
            out += null_acc;
        }
        Ok(out)
    }

    fn is_normal_coord(&self, idx: usize) -> bool {
        (idx % (2 * self.handle.m)) < self.handle.m
    }

    /// Pointwise value of the potential-level operator at time t.
    pub fn eval_sa_tilde(&self, f: &[CVec], t: f64) -> Result<CVec> {
        let tilde = self.handle.tilde_spec();
        let r = tilde.rank();
        let ef = self.e_times(f);
        let sigma = self.handle.sigma;
        let mu = self.abs_values_tilde();
        let mask = self.plus_mask_tilde();
        let mut acc = CVec::zeros(r);
        let mut null_acc = CVec::zeros(self.dim());
        let p0t = &self.handle.hodge.p0_tilde.entries;
        for (j, g) in ef.iter().enumerate() {
            let g = match g {
                None => continue,
                Some(g) => g,
            };
            let yj = &tilde.to * g;
            let (c, d) = self.node_pair(j);
            let below_hi = d.min(t);
            if below_hi > c {
                for s in 0..r {
                    if !mask[s] {
                        continue;
                    }
                    let k = ((-mu[s] * (t - below_hi)).exp() - (-mu[s] * (t - c)).exp()) / mu[s];
                    acc[s] += k * yj[s];
                }
            }
            let above_lo = c.max(t);
            if d > above_lo {
                for s in 0..r {
                    if mask[s] {
                        continue;
                    }
                    let k = ((-mu[s] * (above_lo - t)).exp() - (-mu[s] * (d - t)).exp()) / mu[s];
                    acc[s] -= k * yj[s];
                }
            }
            if sigma == 0.0 {
                let pg = p0t * g;
                let wb = (below_hi - c).max(0.0);
                let wa = (d - above_lo).max(0.0);
                for idx in 0..self.dim() {
                    let is_normal = self.is_normal_coord(idx);
                    if is_normal {
                        null_acc[idx] += Complex64::new(wb, 0.0) * pg[idx];
                    } else {
                        null_acc[idx] -= Complex64::new(wa, 0.0) * pg[idx];
                    }
                }
            }
        }
        let mut out = &tilde.from * acc;
        if sigma == 0.0 {
            out += null_acc;
        }
        Ok(out)
    }

    /// Boundary limit of the minus-part integral:
    /// `-int_0^oo exp(-s L) E0^- D (E f)_s ds`, a full-space section.
    pub fn h_minus(&self, f: &[CVec]) -> Result<CVec> {
        let spec = self.handle.spec();
        let r = spec.rank();
        let ef = self.e_times(f);
        let binv = self.handle.binv_p1t();
        let nrefl = &self.handle.n_refl;
        let sigma = self.handle.sigma;
        let mu = self.abs_values();
        let mask = self.plus_mask();
        let mut acc = CVec::zeros(r);
        for (j, g) in ef.iter().enumerate() {
            let g = match g {
                None => continue,
                Some(g) => g,
            };
            let bg = binv * g;
            let yj = &spec.to * &bg;
            let zj = if sigma != 0.0 {
                Some(&spec.to * (nrefl * &bg))
            } else {
                None
            };
            let (c, d) = self.node_pair(j);
            for s in 0..r {
                if mask[s] {
                    continue;
                }
                // -e^{-s mu} E0^- D = +Lambda e^{-s mu} E-hat^- + sigma e Echeck^-
                let k_hat = (-mu[s] * c).exp() - (-mu[s] * d).exp();
                acc[s] += k_hat * yj[s];
                if let Some(zj) = &zj {
                    acc[s] += Complex64::new(sigma, 0.0) * (k_hat / mu[s]) * zj[s];
                }
            }
        }
        Ok(&spec.from * acc)
    }

    /// Boundary limit of the potential-level minus part:
    /// `-int_0^oo exp(-s L~) E0~^- (E f)_s ds`.
    pub fn h_minus_tilde(&self, f: &[CVec]) -> Result<CVec> {
        let tilde = self.handle.tilde_spec();
        let r = tilde.rank();
        let ef = self.e_times(f);
        let sigma = self.handle.sigma;
        let mu = self.abs_values_tilde();
        let mask = self.plus_mask_tilde();
        let mut acc = CVec::zeros(r);
        let mut null_acc = CVec::zeros(self.dim());
        let p0t = &self.handle.hodge.p0_tilde.entries;
        for (j, g) in ef.iter().enumerate() {
            let g = match g {
                None => continue,
                Some(g) => g,
            };
            let yj = &tilde.to * g;
            let (c, d) = self.node_pair(j);
            for s in 0..r {
                if mask[s] {
                    continue;
                }
                let k = ((-mu[s] * c).exp() - (-mu[s] * d).exp()) / mu[s];
                acc[s] -= k * yj[s];
            }
            if sigma == 0.0 {
                let pg = p0t * g;
                let w = d - c;
                for idx in 0..self.dim() {
                    if !self.is_normal_coord(idx) {
                        null_acc[idx] -= Complex64::new(w, 0.0) * pg[idx];
                    }
                }
            }
        }
        let mut out = &tilde.from * acc;
        if sigma == 0.0 {
            out += null_acc;
        }
        Ok(out)
    }

    /// Piecewise-constant seed trajectory: node averages of `exp(-t L) w`.
    /// For sigma = 0 the decay semigroup extends by the identity over the
    /// complementary Hodge direction, which must ride along unchanged.
    pub fn semigroup_seed(&self, w: &CVec) -> Vec<CVec> {
        let spec = self.handle.spec();
        let wspec = &spec.to * w;
        let pcs = self.pc_exp_spec(&wspec);
        let null_part = if self.handle.sigma == 0.0 {
            Some(&self.handle.hodge.p0.entries * w)
        } else {
            None
        };
        pcs.into_iter()
            .map(|x| {
                let mut out = &spec.from * x;
                if let Some(np) = &null_part {
                    out += np;
                }
                out
            })
            .collect()
    }

    /// Pointwise `exp(-t L) w`, including the identity action on the
    /// complementary direction when sigma = 0.
    pub fn eval_semigroup(&self, w: &CVec, t: f64) -> CVec {
        let spec = self.handle.spec();
        let mut x = &spec.to * w;
        let mu = self.abs_values();
        for (j, v) in x.iter_mut().enumerate() {
            *v *= (-mu[j] * t).exp();
        }
        let mut out = &spec.from * x;
        if self.handle.sigma == 0.0 {
            out += &self.handle.hodge.p0.entries * w;
        }
        out
    }

    /// Pointwise `exp(-t L~) w`, including the identity action on the
    /// complementary directions when sigma = 0.
    pub fn eval_semigroup_tilde(&self, w: &CVec, t: f64) -> CVec {
        let tilde = self.handle.tilde_spec();
        let mut x = &tilde.to * w;
        let mu = self.abs_values_tilde();
        for (j, v) in x.iter_mut().enumerate() {
            *v *= (-mu[j] * t).exp();
        }
        let mut out = &tilde.from * x;
        if self.handle.sigma == 0.0 {
            out += &self.handle.hodge.p0_tilde.entries * w;
        }
        out
    }

    /// Galerkin averages of `exp(-t L~) w` over the grid intervals.
    pub fn semigroup_seed_tilde(&self, w: &CVec) -> Vec<CVec> {
        let tilde = self.handle.tilde_spec();
        let wspec = &tilde.to * w;
        let mu = self.abs_values_tilde();
        let null_part = if self.handle.sigma == 0.0 {
            Some(&self.handle.hodge.p0_tilde.entries * w)
        } else {
            None
        };
        (0..self.grid.len())
            .map(|i| {
                let a = self.grid.edges[i];
                let h = self.grid.width(i);
                let x = CVec::from_fn(wspec.len(), |j, _| {
                    wspec[j] * (-mu[j] * a).exp() * omed(mu[j] * h)
                });
                let mut out = &tilde.from * x;
                if let Some(np) = &null_part {
                    out += np;
                }
                out
            })
            .collect()
    }
}

fn overlap_weights_avg(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    // average over t in (a,b) of the measures |(0,t) cap (c,d)| and
    // |(t,oo) cap (c,d)|
    let h = b - a;
    let below = integral_overlap_below(a, b, c, d) / h;
    let above = (d - c) - below;
    (below, above)
}

fn integral_overlap_below(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // int_a^b |(0,t) cap (c,d)| dt
    let f = |t: f64| -> f64 { (t.min(d) - c).max(0.0) };
    // piecewise linear in t with breakpoints at c and d
    let pts = [a, b, c.clamp(a, b), d.clamp(a, b)];
    let mut xs: Vec<f64> = pts.to_vec();
    xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut acc = 0.0;
    for w in xs.windows(2) {
        if w[1] > w[0] {
            acc += 0.5 * (f(w[0]) + f(w[1])) * (w[1] - w[0]);
        }
    }
    acc
}

/// Outcome of the integral-equation solve.
pub struct SolveReport {
    pub iterations: usize,
    /// empirical contraction factor of the fixed-point iteration
    pub contraction: f64,
    /// relative residual of f = seed + S f
    pub residual: f64,
    pub used_dense: bool,
}

/// Solve `f = seed + S_A f` by fixed-point iteration with a dense fallback.
pub fn solve_integral_equation(
    ctx: &SolverContext,
    seed: &[CVec],
    tol: f64,
    max_iter: usize,
    force_dense: bool,
) -> Result<(Vec<CVec>, SolveReport)> {
    let l = ctx.grid.len();
    if ctx.is_radially_independent() {
        return Ok((
            seed.to_vec(),
            SolveReport {
                iterations: 0,
                contraction: 0.0,
                residual: 0.0,
                used_dense: false,
            },
        ));
    }
    let seed_norm = ctx.grid.traj_norm(seed).max(1e-300);
    let mut f: Vec<CVec> = seed.to_vec();
    let mut prev_delta = f64::INFINITY;
    let mut contraction: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0usize;
    if !force_dense {
        for it in 0..max_iter {
            let sf = ctx.apply_sa(&f)?;
            let next: Vec<CVec> = seed.iter().zip(&sf).map(|(b, s)| b + s).collect();
            let delta = ctx
                .grid
                .traj_norm(&next.iter().zip(&f).map(|(a, b)| a - b).collect::<Vec<_>>());
            if prev_delta.is_finite() && prev_delta > 0.0 {
                contraction = delta / prev_delta;
            }
            prev_delta = delta;
            f = next;
            iterations = it + 1;
            if delta < tol * seed_norm {
                converged = true;
                break;
            }
            if contraction > 1.05 && it > 4 {
                break;
            }
        }
    }
    let mut used_dense = false;
    if !converged {
        // dense solve of the stacked system in range spectral coordinates,
        // written for the correction g = f - seed which lies in the range
        // part even when the seed carries a complementary component:
        // (I - S) g = S seed
        let spec = ctx.handle.spec();
        let r = spec.rank();
        let n = l * r;
        let mut smat = CMat::zeros(n, n);
        // columns: S applied to spectral basis trajectories
        for j in 0..l {
            if ctx.e_mults[j].is_none() {
                continue;
            }
            for s in 0..r {
                let mut basis = vec![CVec::zeros(ctx.dim()); l];
                let mut e = CVec::zeros(r);
                e[s] = ONE;
                basis[j] = &spec.from * e;
                let out = ctx.apply_sa(&basis)?;
                for i in 0..l {
                    let oz = &spec.to * &out[i];
                    for t in 0..r {
                        smat[(i * r + t, j * r + s)] = oz[t];
                    }
                }
            }
        }
        let sseed = ctx.apply_sa(seed)?;
        let mut rhs = CVec::zeros(n);
        for i in 0..l {
            let z = &spec.to * &sseed[i];
            for t in 0..r {
                rhs[i * r + t] = z[t];
            }
        }
        let a = CMat::identity(n, n) - &smat;
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::NonConvergence("stacked dense solve failed".into()))?;
        let mut fd = Vec::with_capacity(l);
        for i in 0..l {
            let z = CVec::from_fn(r, |t, _| sol[i * r + t]);
            fd.push(&seed[i] + &spec.from * z);
        }
        f = fd;
        used_dense = true;
    }
    let sf = ctx.apply_sa(&f)?;
    let resid_vec: Vec<CVec> = f
        .iter()
        .zip(seed)
        .zip(&sf)
        .map(|((fi, bi), si)| fi - bi - si)
        .collect();
    let residual = ctx.grid.traj_norm(&resid_vec) / ctx.grid.traj_norm(&f).max(1e-300);
    if residual > 1e-6 {
        return Err(Error::NonConvergence(format!(
            "integral equation residual {residual:.3e}; small Carleson hypothesis unverified"
        )));
    }
    Ok((
        f,
        SolveReport {
            iterations,
            contraction,
            residual,
            used_dense,
        },
    ))
}

/// Perturbed Hardy projection applied to one section: E_A^+ h.
pub fn perturbed_hardy_plus(ctx: &SolverContext, h: &BoundarySection) -> Result<BoundarySection> {
    let ep = ctx.handle.apply_d0(linalg::ScalarFn::ChiPlus)?;
    let hp = &ep * h.as_vector();
    let seed = ctx.semigroup_seed(&hp);
    let (f, _) = solve_integral_equation(ctx, &seed, 1e-11, 400, false)?;
    let hm = ctx.h_minus(&f)?;
    Ok(BoundarySection::from_vector(
        ctx.handle.m,
        ctx.handle.k_max,
        hp + hm,
    ))
}

/// Potential-level perturbed Hardy projection applied to one section.
pub fn perturbed_hardy_tilde_plus(
    ctx: &SolverContext,
    h: &BoundarySection,
) -> Result<BoundarySection> {
    let tp = ctx.handle.apply_d0_tilde(linalg::ScalarFn::ChiPlus)?;
    let hp = &tp * h.as_vector();
    // seed for the conormal part: D exp(-t L~) h~+ = exp(-t L) D h~+
    let w = &ctx.handle.d * &hp;
    let seed = ctx.semigroup_seed(&w);
    let (f, _) = solve_integral_equation(ctx, &seed, 1e-11, 400, false)?;
    let hmt = ctx.h_minus_tilde(&f)?;
    Ok(BoundarySection::from_vector(
        ctx.handle.m,
        ctx.handle.k_max,
        hp + hmt,
    ))
}

/// Dense matrices of the perturbed Hardy projections.
pub fn perturbed_hardy_matrices(ctx: &SolverContext) -> Result<(CMat, CMat)> {
    let dim = ctx.dim();
    let (m, k) = (ctx.handle.m, ctx.handle.k_max);
    let mut ea = CMat::zeros(dim, dim);
    let mut eat = CMat::zeros(dim, dim);
    for j in 0..dim {
        let mut v = CVec::zeros(dim);
        v[j] = ONE;
        let e = BoundarySection::from_vector(m, k, v);
        let col = perturbed_hardy_plus(ctx, &e)?;
        let colt = perturbed_hardy_tilde_plus(ctx, &e)?;
        for i in 0..dim {
            ea[(i, j)] = col.as_vector()[i];
            eat[(i, j)] = colt.as_vector()[i];
        }
    }
    Ok((ea, eat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Dirichlet,
    Neumann,
    Regularity,
}

/// A boundary restriction map of the perturbed Hardy projection, assembled
/// on a basis of the plus spectral subspace, with its condition number.
pub struct WellPosednessMap {
    pub problem: Problem,
    pub m: usize,
    pub k_max: usize,
    /// orthonormal basis of the plus spectral subspace (columns)
    pub basis: CMat,
    /// map from basis coordinates to datum coordinates
    pub matrix: CMat,
    pub condition_number: f64,
    /// datum coordinate layout: global indices into section vectors
    pub datum_indices: Vec<usize>,
}

impl WellPosednessMap {
    /// The plus-part boundary section whose trace datum is `datum`.
    pub fn solve(&self, datum: &BoundarySection) -> Result<BoundarySection> {
        let rhs = CVec::from_fn(self.datum_indices.len(), |i, _| {
            datum.as_vector()[self.datum_indices[i]]
        });
        let x = self
            .matrix
            .clone()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::IllPosed("boundary map not invertible".into()))?;
        Ok(BoundarySection::from_vector(
            self.m,
            self.k_max,
            &self.basis * x,
        ))
    }
}

/// Datum coordinate layout per problem: Dirichlet uses every normal mode,
/// Neumann the mean-zero normal modes, regularity the mean-zero tangential
/// modes.
fn datum_indices(problem: Problem, m: usize, k_max: usize) -> Vec<usize> {
    let mut idx = Vec::new();
    for k in -(k_max as i64)..=(k_max as i64) {
        for c in 0..2 * m {
            let keep = match problem {
                Problem::Dirichlet => c < m,
                Problem::Neumann => c < m && k != 0,
                Problem::Regularity => c >= m && k != 0,
            };
            if keep {
                idx.push(operators::global_index(m, k_max, c, k));
            }
        }
    }
    idx
}

/// Assemble the boundary map of the given problem: each basis vector of the
/// plus spectral subspace is pushed through the perturbed Hardy projection
/// and restricted to the datum coordinates.
pub fn wellposedness_map(ctx: &SolverContext, problem: Problem) -> Result<WellPosednessMap> {
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    let (ep, _, tp, _) = ctx.handle.extended_hardy()?;
    let basis = match problem {
        Problem::Dirichlet => linalg::orthonormal_range(&tp, 0.5),
        Problem::Neumann | Problem::Regularity => {
            let pm = operators::assemble_p_meanzero(m, k_max).entries;
            linalg::orthonormal_range(&(&ep * &pm), 0.5)
        }
    };
    let idx = datum_indices(problem, m, k_max);
    if idx.len() != basis.ncols() {
        return Err(Error::IllPosed(format!(
            "trace space dimension {} vs datum dimension {}",
            basis.ncols(),
            idx.len()
        )));
    }
    let mut matrix = CMat::zeros(idx.len(), basis.ncols());
    for j in 0..basis.ncols() {
        let b = BoundarySection::from_vector(m, k_max, basis.column(j).into_owned());
        let image = match problem {
            Problem::Dirichlet => perturbed_hardy_tilde_plus(ctx, &b)?,
            Problem::Neumann | Problem::Regularity => perturbed_hardy_plus(ctx, &b)?,
        };
        for (i, &gi) in idx.iter().enumerate() {
            matrix[(i, j)] = image.as_vector()[gi];
        }
    }
    let condition_number = linalg::condition_number_2(&matrix);
    if !condition_number.is_finite() || condition_number > 1e12 {
        return Err(Error::IllPosed(format!(
            "boundary map condition number {condition_number:.3e}"
        )));
    }
    Ok(WellPosednessMap {
        problem,
        m,
        k_max,
        basis,
        matrix,
        condition_number,
        datum_indices: idx,
    })
}

/// Options controlling solution output grids and the integral solve.
pub struct SolveOptions {
    /// output radii; defaults to the grid image e^{-t} clipped below
    pub radii: Option<Vec<f64>>,
    pub n_theta: usize,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
    pub force_dense: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            radii: None,
            n_theta: 64,
            fixed_point_tol: 1e-11,
            max_iter: 400,
            force_dense: false,
        }
    }
}

/// A solved boundary value problem sampled on a polar grid.
pub struct BvpSolution {
    pub problem: Problem,
    /// the potential, m components
    pub u: PolarGridFunction,
    /// the full gradient in the moving frame, 2m components (normal first)
    pub grad: PolarGridFunction,
    /// the conjugate potential, m components
    pub conjugate: PolarGridFunction,
    pub trace_u1: BoundarySection,
    pub trace_g1: BoundarySection,
    /// conormal trajectory of the solution
    pub f_traj: Trajectory,
    /// potential trajectory
    pub v_traj: Trajectory,
    pub h_plus: BoundarySection,
    pub h_plus_tilde: Option<BoundarySection>,
    pub report: SolveReport,
}

fn default_radii(ctx: &SolverContext) -> Vec<f64> {
    let mut radii: Vec<f64> = ctx
        .grid
        .nodes
        .iter()
        .map(|&t| (-t).exp())
        .filter(|&r| r >= 0.02)
        .collect();
    radii.push(1.0);
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    radii
}

/// Solve the Dirichlet problem for the given normal datum.
pub fn solve_dirichlet(
    ctx: &SolverContext,
    datum: &BoundarySection,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    let map = wellposedness_map(ctx, Problem::Dirichlet)?;
    solve_dirichlet_with_map(ctx, &map, datum, opts)
}

pub fn solve_dirichlet_with_map(
    ctx: &SolverContext,
    map: &WellPosednessMap,
    datum: &BoundarySection,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    let h_tilde = map.solve(datum)?;
    // conormal seed: D exp(-t L~) h~+ = exp(-t L) (D h~+)
    let w = &ctx.handle.d * h_tilde.as_vector();
    let seed = ctx.semigroup_seed(&w);
    let (f, report) = solve_integral_equation(
        ctx,
        &seed,
        opts.fixed_point_tol,
        opts.max_iter,
        opts.force_dense,
    )?;
    let h_plus = BoundarySection::from_vector(m, k_max, w);
    build_solution(
        ctx,
        Problem::Dirichlet,
        f,
        h_plus,
        Some(h_tilde),
        report,
        opts,
    )
}

/// Solve the Neumann problem: datum is the normal component of the
/// transformed flux, which must have vanishing mean.
pub fn solve_neumann(
    ctx: &SolverContext,
    datum: &BoundarySection,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    for alpha in 0..ctx.handle.m {
        if datum.coeff(alpha, 0).norm() > 1e-10 {
            return Err(Error::BadDatum(
                "flux datum must have vanishing mean".into(),
            ));
        }
    }
    let map = wellposedness_map(ctx, Problem::Neumann)?;
    solve_conormal_problem(ctx, &map, datum, opts)
}

/// Solve the regularity problem: datum is the tangential gradient part,
/// which must have vanishing tangential mean.
pub fn solve_regularity(
    ctx: &SolverContext,
    datum: &BoundarySection,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    for alpha in 0..ctx.handle.m {
        if datum.coeff(ctx.handle.m + alpha, 0).norm() > 1e-10 {
            return Err(Error::BadDatum(
                "tangential datum must lie in the range of the boundary gradient".into(),
            ));
        }
    }
    let map = wellposedness_map(ctx, Problem::Regularity)?;
    solve_conormal_problem(ctx, &map, datum, opts)
}

fn solve_conormal_problem(
    ctx: &SolverContext,
    map: &WellPosednessMap,
    datum: &BoundarySection,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    let h_plus = map.solve(datum)?;
    let seed = ctx.semigroup_seed(h_plus.as_vector());
    let (f, report) = solve_integral_equation(
        ctx,
        &seed,
        opts.fixed_point_tol,
        opts.max_iter,
        opts.force_dense,
    )?;
    // lift the plus-part trace to the potential level for the v-trajectory
    let h_tilde = lift_to_tilde(ctx, &h_plus)?;
    build_solution(ctx, map.problem, f, h_plus, h_tilde, report, opts)
}

/// Mean-zero potential-level representative of the plus trace, solving
/// `D h~ = h` within the plus spectral subspace; the constant slot is left
/// at zero (the potential is normalized afterwards).
fn lift_to_tilde(ctx: &SolverContext, h_plus: &BoundarySection) -> Result<Option<BoundarySection>> {
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    // solve D x = h on mean-zero modes
    let mut x = BoundarySection::zero(m, k_max);
    for k in -(k_max as i64)..=(k_max as i64) {
        if k == 0 {
            continue;
        }
        let ik = Complex64::new(0.0, k as f64);
        for alpha in 0..m {
            // [[0, -ik], [ik, 0]] (xn, xt) = (hn, ht)
            let hn = h_plus.coeff(alpha, k);
            let ht = h_plus.coeff(m + alpha, k);
            x.set_coeff(alpha, k, ht / ik);
            x.set_coeff(m + alpha, k, -hn / ik);
        }
    }
    // project onto the plus potential subspace so exp(-t L~) decays on it
    let tp = ctx.handle.apply_d0_tilde(linalg::ScalarFn::ChiPlus)?;
    let v = &tp * x.as_vector();
    // D(tp x) = ep (D x) = ep h = h when h is already a plus-part trace
    Ok(Some(BoundarySection::from_vector(m, k_max, v)))
}

fn build_solution(
    ctx: &SolverContext,
    problem: Problem,
    f: Vec<CVec>,
    h_plus: BoundarySection,
    h_tilde: Option<BoundarySection>,
    report: SolveReport,
    opts: &SolveOptions,
) -> Result<BvpSolution> {
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    let radii = opts.radii.clone().unwrap_or_else(|| default_radii(ctx));
    let n_theta = opts.n_theta.max(2 * k_max + 1);

    let f_traj = Trajectory::from_vectors(
        ctx.grid.clone(),
        m,
        k_max,
        f.clone(),
        TrajectoryKind::ConormalF,
    );

    // potential trajectory v = exp(-t L~) h~+ + S~ f
    let ht_vec = h_tilde
        .as_ref()
        .map(|h| h.as_vector().clone())
        .unwrap_or_else(|| CVec::zeros(ctx.dim()));
    let mut v_nodes = ctx.semigroup_seed_tilde(&ht_vec);
    let sat = ctx.apply_sa_tilde(&f)?;
    for (v, s) in v_nodes.iter_mut().zip(&sat) {
        *v += s;
    }
    let v_traj = Trajectory::from_vectors(
        ctx.grid.clone(),
        m,
        k_max,
        v_nodes,
        TrajectoryKind::PotentialV,
    );

    // boundary traces: f0 = h+ + h-, v0 = h~+ + h~-
    let h_minus = ctx.h_minus(&f)?;
    let f0 = BoundarySection::from_vector(m, k_max, h_plus.as_vector() + &h_minus);
    let hmt = ctx.h_minus_tilde(&f)?;
    let v0 = BoundarySection::from_vector(m, k_max, &ht_vec + &hmt);

    // g1 = (B0 f0)_perp n + (f0)_par
    let b0f0 = operators::assemble_mult(&ctx.handle.b0, k_max).apply(&f0)?;
    let mut g1 = f0.clone();
    for k in -(k_max as i64)..=(k_max as i64) {
        for alpha in 0..m {
            g1.set_coeff(alpha, k, b0f0.coeff(alpha, k));
        }
    }

    // evaluate v and f pointwise at every output radius
    let sigma = ctx.handle.sigma;
    let mut u = PolarGridFunction::new(radii.clone(), n_theta, m)?;
    let mut grad = PolarGridFunction::new(radii.clone(), n_theta, 2 * m)?;
    let mut conj = PolarGridFunction::new(radii.clone(), n_theta, m)?;
    // the mean (k = 0) modes of u must be recovered by radial integration of
    // the gradient when no potential trace is available; with the potential
    // trajectory at hand they come along for free as (v_t)_perp
    for (ri, &rad) in radii.iter().enumerate() {
        let t = -(rad.ln());
        let v_t = if t <= 0.0 {
            v0.as_vector().clone()
        } else {
            let mut v = ctx.eval_semigroup_tilde(&ht_vec, t);
            v += ctx.eval_sa_tilde(&f, t)?;
            v
        };
        let v_sec = BoundarySection::from_vector(m, k_max, v_t);
        let scale = rad.powf(-sigma);
        let u_vals = v_sec.synthesize(n_theta)?;
        for alpha in 0..m {
            for (ti, z) in u_vals[alpha].iter().enumerate() {
                u.values[alpha][ri][ti] = z * Complex64::new(scale, 0.0);
            }
        }
        for alpha in 0..m {
            for (ti, z) in u_vals[m + alpha].iter().enumerate() {
                conj.values[alpha][ri][ti] = z * Complex64::new(scale, 0.0);
            }
        }

        let f_t = if t <= 0.0 {
            f0.as_vector().clone()
        } else {
            let mut x = ctx.eval_semigroup(h_plus.as_vector(), t);
            x += ctx.eval_sa(&f, t)?;
            x
        };
        let f_sec = BoundarySection::from_vector(m, k_max, f_t);
        // B at this radius
        let node = nearest_node(&ctx.grid, t);
        let bt = if let Some(e) = &ctx.e_mults[node] {
            let mb = operators::assemble_mult(&ctx.handle.b0, k_max).entries - e;
            BoundarySection::from_vector(m, k_max, mb * f_sec.as_vector())
        } else {
            operators::assemble_mult(&ctx.handle.b0, k_max).apply(&f_sec)?
        };
        let gscale = rad.powf(-(1.0 + 2.0 * sigma + 1.0) / 2.0); // r^{-(n+1)/2}, n = 1 + 2 sigma
        let g_normal = bt.synthesize(n_theta)?;
        let g_tang = f_sec.synthesize(n_theta)?;
        for alpha in 0..m {
            for ti in 0..n_theta {
                grad.values[alpha][ri][ti] = g_normal[alpha][ti] * Complex64::new(gscale, 0.0);
                grad.values[m + alpha][ri][ti] =
                    g_tang[m + alpha][ti] * Complex64::new(gscale, 0.0);
            }
        }
    }

    Ok(BvpSolution {
        problem,
        u,
        grad,
        conjugate: conj,
        trace_u1: v0.normal_half(),
        trace_g1: g1,
        f_traj,
        v_traj,
        h_plus,
        h_plus_tilde: h_tilde,
        report,
    })
}

fn nearest_node(grid: &TimeGrid, t: f64) -> usize {
    let mut best = 0usize;
    let mut dist = f64::INFINITY;
    for (i, &n) in grid.nodes.iter().enumerate() {
        let d = (n - t).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    best
}

/// Split the conormal and potential trajectories of a solved problem into
/// their semigroup parts and remainders, with consistency diagnostics.
pub struct ConjugatePairReport {
    /// max over nodes of ||D v_t - f_t|| relative to ||f_t||
    pub dv_minus_f: f64,
    /// fitted growth exponent of ||v_t - v_0|| over the small-time nodes
    pub growth_exponent: f64,
    /// remainder trajectories (conormal and potential level)
    pub w: Trajectory,
    pub w_tilde: Trajectory,
}

pub fn conjugate_pair(ctx: &SolverContext, sol: &BvpSolution) -> Result<ConjugatePairReport> {
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    let f = sol.f_traj.vectors();
    let v = sol.v_traj.vectors();
    let d = &ctx.handle.d;
    // normalize by the trajectory scale: the pointwise scale is meaningless
    // at the decayed tail where v keeps its constant component
    let f_scale = f.iter().map(|x| x.norm()).fold(1e-300, f64::max);
    let mut dv_minus_f: f64 = 0.0;
    for (fi, vi) in f.iter().zip(&v) {
        let dv = d * vi;
        dv_minus_f = dv_minus_f.max((&dv - fi).norm() / f_scale);
    }
    // remainders: w = S_A f - exp(-t L) h^-, w~ = S~_A f - exp(-t L~) h~^-
    let hm = ctx.h_minus(&f)?;
    let hmt = ctx.h_minus_tilde(&f)?;
    let sa = ctx.apply_sa(&f)?;
    let sat = ctx.apply_sa_tilde(&f)?;
    let mut w_nodes = Vec::with_capacity(f.len());
    let mut wt_nodes = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        let t = ctx.grid.nodes[i];
        let em = ctx.eval_semigroup(&hm, t);
        let emt = ctx.eval_semigroup_tilde(&hmt, t);
        w_nodes.push(&sa[i] - em);
        wt_nodes.push(&sat[i] - emt);
    }
    // growth of ||v_t - v_0|| near the boundary
    let v0 = {
        let ht = sol
            .h_plus_tilde
            .as_ref()
            .map(|h| h.as_vector().clone())
            .unwrap_or_else(|| CVec::zeros(ctx.dim()));
        ht + &hmt
    };
    let mut pts = Vec::new();
    for i in 0..f.len() {
        let t = ctx.grid.nodes[i];
        if t > 0.5 {
            break;
        }
        let diff = (&v[i] - &v0).norm();
        if diff > 1e-13 {
            pts.push((t.ln(), diff.ln()));
        }
    }
    let growth_exponent = if pts.len() >= 3 {
        // least squares slope
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::NAN
    };
    Ok(ConjugatePairReport {
        dv_minus_f,
        growth_exponent,
        w: Trajectory::from_vectors(ctx.grid.clone(), m, k_max, w_nodes, TrajectoryKind::ConormalF),
        w_tilde: Trajectory::from_vectors(
            ctx.grid.clone(),
            m,
            k_max,
            wt_nodes,
            TrajectoryKind::PotentialV,
        ),
    })
}

/// The solution semigroup on boundary data: the matrix of `datum -> u_r` on
/// normal-datum coordinates, for radially independent coefficients.
pub fn semigroup_pr(ctx: &SolverContext, r: f64) -> Result<CMat> {
    let map = wellposedness_map(ctx, Problem::Dirichlet)?;
    semigroup_pr_with_map(ctx, &map, r)
}

/// Same with a prebuilt Dirichlet boundary map, for evaluating a family of
/// radii without reassembling it.
pub fn semigroup_pr_with_map(
    ctx: &SolverContext,
    map: &WellPosednessMap,
    r: f64,
) -> Result<CMat> {
    if !(0.0 < r && r <= 1.0) {
        return Err(Error::BadDatum("radius must lie in (0, 1]".into()));
    }
    let (m, k_max) = (ctx.handle.m, ctx.handle.k_max);
    let idx = map.datum_indices.clone();
    let nd = idx.len();
    let t = -(r.ln());
    let mut p = CMat::zeros(nd, nd);
    for j in 0..nd {
        let mut datum = BoundarySection::zero(m, k_max);
        {
            let v = datum.as_vector().clone();
            let mut v = v;
            v[idx[j]] = ONE;
            datum = BoundarySection::from_vector(m, k_max, v);
        }
        let h_tilde = map.solve(&datum)?;
        let v_t = if ctx.is_radially_independent() {
            ctx.eval_semigroup_tilde(h_tilde.as_vector(), t)
        } else {
            return Err(Error::BadDatum(
                "the solution semigroup requires radially independent coefficients".into(),
            ));
        };
        let scale = Complex64::new(r.powf(-ctx.handle.sigma), 0.0);
        for (i, &gi) in idx.iter().enumerate() {
            p[(i, j)] = v_t[gi] * scale;
        }
    }
    Ok(p)
}
