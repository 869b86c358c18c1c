//! The verification battery: every operator identity, norm equivalence and
//! oracle comparison exercised by the crate, run over seeded random
//! configurations and collected into a machine-readable ledger.

use crate::calculus::CalculusHandle;
use crate::coeff::{self, Discrepancy};
use crate::error::Result;
use crate::fd;
use crate::fourier::{BoundarySection, CoefficientField};
use crate::linalg::{self, CMat, CVec, ScalarFn};
use crate::norms;
use crate::operators;
use crate::solver::{self, SolveOptions, SolverContext, TimeGrid};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Identities,
    Norms,
    Oracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub suite: Suite,
    pub m: usize,
    pub k_max: usize,
    pub sigma: f64,
    pub seed: u64,
    pub samples: usize,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            suite: Suite::Identities,
            m: 1,
            k_max: 6,
            sigma: 0.0,
            seed: 7,
            samples: 4,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
    pub details: String,
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ledger {
    pub suite: Suite,
    pub config: BatteryConfig,
    pub checks: Vec<CheckResult>,
    pub failures: usize,
}

impl Ledger {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn random_accretive_field(
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

/// A fixed-matrix discrepancy bump supported below `t_hi`, scaled by `eps`.
pub fn bump_discrepancy(
    b0: &CoefficientField,
    grid: &TimeGrid,
    eps: f64,
    t_hi: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Discrepancy> {
    let m = b0.m();
    let mut dev = CMat::zeros(2 * m, 2 * m);
    for r in 0..2 * m {
        for c in 0..2 * m {
            dev[(r, c)] = Complex64::new(
                eps * (rng.random::<f64>() - 0.5),
                eps * (rng.random::<f64>() - 0.5),
            );
        }
    }
    let fields: Vec<CoefficientField> = grid
        .nodes
        .iter()
        .map(|&t| {
            if t < t_hi {
                let mut f = b0.clone();
                for r in 0..2 * m {
                    for c in 0..2 * m {
                        let cur = f.entry(r, c, 0);
                        f.set_entry(r, c, 0, cur - dev[(r, c)]);
                    }
                }
                f
            } else {
                b0.clone()
            }
        })
        .collect();
    Discrepancy::from_transformed_samples(b0.clone(), grid.nodes.clone(), &fields)
}

fn check(name: &str, observed: f64, tolerance: f64, seed: u64, details: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: observed <= tolerance,
        observed,
        tolerance,
        details,
        seed,
    }
}

/// Lower-is-better check where the observation must exceed a floor.
fn check_at_least(name: &str, observed: f64, floor: f64, seed: u64, details: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: observed >= floor,
        observed,
        tolerance: floor,
        details,
        seed,
    }
}

pub fn run_suite(cfg: &BatteryConfig) -> Result<Ledger> {
    let checks = match cfg.suite {
        Suite::Identities => identities_suite(cfg)?,
        Suite::Norms => norms_suite(cfg)?,
        Suite::Oracle => oracle_suite(cfg)?,
    };
    let failures = checks.iter().filter(|c| !c.passed).count();
    Ok(Ledger {
        suite: cfg.suite,
        config: cfg.clone(),
        checks,
        failures,
    })
}

fn identities_suite(cfg: &BatteryConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let (m, k) = (cfg.m, cfg.k_max);

    // exact operator algebra
    let d = operators::assemble_d(m, k).entries;
    let n = operators::assemble_n(m, k).entries;
    out.push(check(
        "reflection_squares_to_identity",
        linalg::spectral_norm(&(&n * &n - CMat::identity(n.nrows(), n.ncols()))),
        1e-14,
        cfg.seed,
        "N^2 = I".into(),
    ));
    out.push(check(
        "reflection_anticommutes_with_derivative",
        linalg::spectral_norm(&(&n * &d + &d * &n)),
        1e-14,
        cfg.seed,
        "N D = -D N".into(),
    ));

    // transform involutions
    let mut worst_hat: f64 = 0.0;
    let mut worst_conj: f64 = 0.0;
    for _ in 0..cfg.samples {
        let a = random_accretive_field(m, k, 3, 0.3 / m as f64, &mut rng);
        let hh = coeff::hat_transform(&coeff::hat_transform(&a)?)?;
        worst_hat = worst_hat.max(hh.grid_distance_to(&a, 128)?);
        let cc = coeff::conjugate_coefficients(&coeff::conjugate_coefficients(&a)?)?;
        worst_conj = worst_conj.max(cc.grid_distance_to(&a, 128)?);
    }
    out.push(check(
        "block_transform_involution",
        worst_hat,
        1e-11,
        cfg.seed,
        format!("{} random accretive fields", cfg.samples),
    ));
    out.push(check(
        "conjugate_involution",
        worst_conj,
        1e-11,
        cfg.seed,
        format!("{} random accretive fields", cfg.samples),
    ));

    // accretivity transport under the transform
    let mut min_kappa = f64::INFINITY;
    for _ in 0..cfg.samples {
        let a = random_accretive_field(m, k, 2, 0.3 / m as f64, &mut rng);
        let b = coeff::hat_transform(&a)?;
        min_kappa = min_kappa.min(coeff::accretivity_garding(&b)?);
    }
    out.push(check_at_least(
        "accretivity_transport",
        min_kappa,
        1e-3,
        cfg.seed,
        "form constant of transformed fields stays positive".into(),
    ));

    // calculus identities on a random handle
    let b0 = random_accretive_field(m, k, 2, 0.3 / m as f64, &mut rng);
    let handle = CalculusHandle::new(&b0, k, cfg.sigma)?;
    let (ep, em, tp, tm) = handle.extended_hardy()?;
    let id = CMat::identity(handle.dim, handle.dim);
    out.push(check(
        "hardy_projection_idempotence",
        linalg::spectral_norm(&(&ep * &ep - &ep))
            .max(linalg::spectral_norm(&(&tp * &tp - &tp))),
        1e-10,
        cfg.seed,
        "(E0+)^2 = E0+, (E0~+)^2 = E0~+".into(),
    ));
    out.push(check(
        "hardy_projection_complementarity",
        linalg::spectral_norm(&(&ep + &em - &id))
            .max(linalg::spectral_norm(&(&tp + &tm - &id))),
        1e-12,
        cfg.seed,
        "E0+ + E0- = I".into(),
    ));
    out.push(check(
        "intertwining",
        handle.intertwine_residual()?,
        1e-10,
        cfg.seed,
        "E0+- D = D E0~+-, D0 D = D D0~".into(),
    ));
    let e1 = handle.apply_d0(ScalarFn::ExpAbs(0.4))?;
    let e2 = handle.apply_d0(ScalarFn::ExpAbs(0.6))?;
    let e3 = handle.apply_d0(ScalarFn::ExpAbs(1.0))?;
    out.push(check(
        "decay_semigroup_law",
        linalg::spectral_norm(&(&e1 * &e2 - &e3)),
        1e-10,
        cfg.seed,
        "exp(-s|D0|) exp(-t|D0|) = exp(-(s+t)|D0|)".into(),
    ));
    let sgn = handle.apply_d0(ScalarFn::Sgn)?;
    let abs = handle.apply_d0(ScalarFn::Abs)?;
    out.push(check(
        "sign_abs_recovers_generator",
        linalg::spectral_norm(&(&sgn * &abs * &handle.hodge.p1.entries
            - &handle.d0 * &handle.hodge.p1.entries))
            / linalg::spectral_norm(&handle.d0),
        1e-9,
        cfg.seed,
        "sgn(D0) |D0| = D0 on the invariant part".into(),
    ));
    let bt = handle.apply_d0_tilde(ScalarFn::ExpAbs(0.5))?;
    let bb = handle.apply_d0(ScalarFn::ExpAbs(0.5))?;
    out.push(check(
        "similarity_of_the_two_calculi",
        linalg::spectral_norm(
            &(&bt * &handle.hodge.p1_tilde.entries - &handle.mb0 * &bb * handle.binv_p1t()),
        ),
        1e-9,
        cfg.seed,
        "b(M D) = M b(D M) M^{-1} on the image splitting".into(),
    ));

    // Rellich identity for Hermitian boundary coefficients (sigma = 0)
    let mut worst_rellich: f64 = 0.0;
    for _ in 0..cfg.samples {
        let raw = random_accretive_field(m, k, 2, 0.3 / m as f64, &mut rng);
        let a1 = raw.add(&raw.adjoint())?.scale(Complex64::new(0.5, 0.0));
        let b0h = coeff::hat_transform(&a1)?.resize_modes(2 * k);
        let h = CalculusHandle::new(&b0h, 2 * k, 0.0)?;
        let (ep, _, _, _) = h.extended_hardy()?;
        let nmat = operators::assemble_n(m, 2 * k).entries;
        let mb = operators::assemble_mult(&b0h, 2 * k).entries;
        for _ in 0..5 {
            let hp = BoundarySection::from_vector(
                m,
                2 * k,
                &ep * operators::assemble_p_meanzero(m, 2 * k).entries
                    * random_section(m, 2 * k, &mut rng).as_vector(),
            );
            let lhs = BoundarySection::from_vector(m, 2 * k, &nmat * hp.as_vector())
                .inner_product(&BoundarySection::from_vector(
                    m,
                    2 * k,
                    &mb * hp.as_vector(),
                ))?;
            let n2 = hp.norm().powi(2);
            if n2 > 1e-12 {
                worst_rellich = worst_rellich.max(lhs.norm() / n2);
            }
        }
    }
    out.push(check(
        "rellich_identity_hermitian",
        worst_rellich,
        1e-9,
        cfg.seed,
        "(N h+, B0 h+) = 0 for Hermitian boundary coefficients".into(),
    ));

    // block anticommutator identity at sigma = 1
    {
        let mut blk = CoefficientField::identity(m, k);
        for alpha in 0..m {
            for beta in 0..m {
                for kk in 1..=2i64 {
                    let zh = Complex64::new(0.25 * (rng.random::<f64>() - 0.5), 0.0);
                    let zc = Complex64::new(0.25 * (rng.random::<f64>() - 0.5), 0.0);
                    blk.set_entry(alpha, beta, kk, zh);
                    blk.set_entry(alpha, beta, -kk, zh.conj());
                    blk.set_entry(m + alpha, m + beta, kk, zc);
                    blk.set_entry(m + alpha, m + beta, -kk, zc.conj());
                }
            }
        }
        let sigma = 1.0;
        let h1 = CalculusHandle::new(&blk, k, sigma)?;
        let e0 = h1.apply_d0(ScalarFn::Sgn)?;
        let nmat = operators::assemble_n(m, k).entries;
        let h0 = CalculusHandle::new(&blk, k, 0.0)?;
        let inv_sqrt = h0.apply_d0(ScalarFn::InvSqrtShift(sigma))?;
        let idx = operators::meanzero_indices(m, k);
        let lhs = operators::restrict(
            &((&e0 * &nmat + &nmat * &e0) * Complex64::new(0.5, 0.0)),
            &idx,
        );
        let rhs = operators::restrict(&(&inv_sqrt * Complex64::new(sigma, 0.0)), &idx);
        out.push(check(
            "block_anticommutator",
            linalg::spectral_norm(&(lhs - rhs)),
            1e-8,
            cfg.seed,
            "(E0 N + N E0)/2 = sigma ((D B0)^2 + sigma^2)^{-1/2} on block coefficients".into(),
        ));
    }

    // duality between the perturbed projections of adjoint problems
    {
        let b0 = random_accretive_field(m, k.min(4), 2, 0.25 / m as f64, &mut rng);
        let kk = k.min(4);
        let handle = CalculusHandle::new(&b0, kk, 0.0)?;
        let grid = TimeGrid::for_handle(&handle, 1e-3, 2f64.powf(0.25), 1e-12);
        let disc = bump_discrepancy(&b0, &grid, 0.04, 0.5, &mut rng)?;
        let ctx = SolverContext::new(handle, grid.clone(), disc.clone())?;
        let disc_adj = disc.adjoint_reflected()?;
        let handle_adj = CalculusHandle::new(&disc_adj.base, kk, 0.0)?;
        let ctx_adj = SolverContext::new(handle_adj, grid, disc_adj)?;
        let (ea_plus, _) = solver::perturbed_hardy_matrices(&ctx)?;
        let (_, eat_adj) = solver::perturbed_hardy_matrices(&ctx_adj)?;
        let dim = ea_plus.nrows();
        let nmat = operators::assemble_n(m, kk).entries;
        let ea_minus = CMat::identity(dim, dim) - &ea_plus;
        let resid =
            linalg::spectral_norm(&(ea_minus.adjoint() - &nmat * &eat_adj * &nmat));
        out.push(check(
            "perturbed_hardy_duality",
            resid,
            1e-7,
            cfg.seed,
            "(E_A^-)^* equals the reflected potential projection of the adjoint problem".into(),
        ));
    }

    // resolvent bound on the imaginary axis with a fitted constant
    {
        let b0 = random_accretive_field(m, k, 2, 0.3 / m as f64, &mut rng);
        let fit = |kk: usize| -> Result<f64> {
            let b = b0.resize_modes(kk);
            let (d0, _) = operators::assemble_d0(&b, kk, cfg.sigma);
            let idx = operators::meanzero_indices(m, kk);
            let dh = operators::restrict(&d0.entries, &idx);
            let mut c: f64 = 0.0;
            for &y in &[0.5f64, 1.0, 2.0, 5.0] {
                let a = CMat::identity(idx.len(), idx.len()) * Complex64::new(0.0, y) - &dh;
                let x = linalg::solve(&a, &CMat::identity(idx.len(), idx.len()))?;
                c = c.max(linalg::spectral_norm(&x) * (y * y + cfg.sigma * cfg.sigma).sqrt());
            }
            Ok(c)
        };
        let c1 = fit(k)?;
        let c2 = fit(2 * k)?;
        out.push(check(
            "resolvent_bound_stability",
            (c1 - c2).abs() / c1,
            0.10,
            cfg.seed,
            format!("fitted axis constant {c1:.4} -> {c2:.4} under refinement"),
        ));
    }

    Ok(out)
}

fn norms_suite(cfg: &BatteryConfig) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let (m, k) = (cfg.m, cfg.k_max);

    // two-sided square function bounds, stable under refinement; the
    // extremes converge like a Galerkin compression, so the sample family
    // keeps a moderate amplitude and starts from a resolved truncation
    {
        let k = k.max(8);
        let b0 = random_accretive_field(m, k, 2, 0.15 / m as f64, &mut rng);
        let h1 = CalculusHandle::new(&b0, k, cfg.sigma)?;
        let (lo1, hi1) = h1.sf_ratio_bounds()?;
        let h2 = CalculusHandle::new(&b0.resize_modes(2 * k), 2 * k, cfg.sigma)?;
        let (lo2, hi2) = h2.sf_ratio_bounds()?;
        let c1 = hi1.max(1.0 / lo1);
        let c2 = hi2.max(1.0 / lo2);
        out.push(check_at_least(
            "square_function_lower_bound",
            lo1,
            1e-6,
            cfg.seed,
            "two-sided bounds require a positive floor".into(),
        ));
        out.push(check(
            "square_function_refinement_stability",
            (c1 - c2).abs() / c1,
            0.10,
            cfg.seed,
            format!("ratio extreme {c1:.4} -> {c2:.4} when doubling the truncation"),
        ));
    }

    // Carleson monotonicity in the truncation parameter
    {
        let base = CoefficientField::identity(m, k);
        let grid = TimeGrid::geometric(1e-3, 8.0, 2f64.powf(0.25));
        let disc = bump_discrepancy(&base, &grid, 0.2, 5.0, &mut rng)?;
        let taus = [0.01, 0.05, 0.2, 1.0, 4.0];
        let rep = coeff::carleson_norm(&disc, 64, &taus)?;
        let mono = rep
            .truncated
            .windows(2)
            .all(|w| w[0].1 <= w[1].1 + 1e-13);
        out.push(CheckResult {
            name: "carleson_truncation_monotone".into(),
            passed: mono,
            observed: rep.norm,
            tolerance: f64::INFINITY,
            details: format!("truncated norms {:?}", rep.truncated),
            seed: cfg.seed,
        });
    }

    // a priori NT bound for solved Dirichlet problems, refinement stable
    {
        let b0 = random_accretive_field(1, 4, 2, 0.25, &mut rng);
        let constant_for = |ratio_exp: f64, n_theta: usize, rng: &mut ChaCha8Rng| -> Result<f64> {
            let handle = CalculusHandle::new(&b0, 4, 0.0)?;
            let grid = TimeGrid::for_handle(&handle, 1e-3, 2f64.powf(ratio_exp), 1e-12);
            let disc = bump_discrepancy(&b0, &grid, 0.05, 0.5, rng)?;
            let ctx = SolverContext::new(handle, grid, disc)?;
            let mut datum = random_section(1, 4, rng).normal_half();
            // keep the datum real-valued for variety
            datum.set_coeff(0, 0, Complex64::new(datum.coeff(0, 0).re, 0.0));
            let opts = SolveOptions {
                n_theta,
                ..Default::default()
            };
            let sol = solver::solve_dirichlet(&ctx, &datum, &opts)?;
            let samples = norms::CylinderSamples::from_trajectory(
                &crate::solver::Trajectory {
                    grid: sol.v_traj.grid.clone(),
                    sections: sol
                        .v_traj
                        .sections
                        .iter()
                        .map(|s| s.normal_half())
                        .collect(),
                    kind: crate::solver::TrajectoryKind::PotentialV,
                },
                n_theta,
            )?;
            let (_, nt) = norms::nt_maximal(&samples, n_theta);
            let y2 = norms::grad_y_norm_squared(&ctx, &sol.f_traj)?;
            let mean_u1 = sol.trace_u1.coeff(0, 0).norm() * 2.0 * std::f64::consts::PI;
            Ok(nt * nt / (y2 + mean_u1 * mean_u1))
        };
        let mut r1 = ChaCha8Rng::seed_from_u64(cfg.seed + 1);
        let mut r2 = ChaCha8Rng::seed_from_u64(cfg.seed + 1);
        let c_coarse = constant_for(0.25, 48, &mut r1)?;
        let c_fine = constant_for(0.125, 96, &mut r2)?;
        out.push(check(
            "nt_apriori_constant_stability",
            (c_coarse - c_fine).abs() / c_coarse,
            0.15,
            cfg.seed,
            format!("observed constant {c_coarse:.4} -> {c_fine:.4} under grid refinement"),
        ));
    }

    // trace rate for a gradient-controlled solution: ||u_r - u_1|| <= C (1-r)
    {
        let handle = CalculusHandle::new(&CoefficientField::identity(1, 6), 6, 0.0)?;
        let grid = TimeGrid::for_handle(&handle, 1e-4, 2f64.powf(0.25), 1e-12);
        let ctx = SolverContext::radially_independent(handle, grid);
        let mut datum = BoundarySection::zero(1, 6);
        datum.set_coeff(0, 1, Complex64::new(0.5, 0.0));
        datum.set_coeff(0, -1, Complex64::new(0.5, 0.0));
        datum.set_coeff(0, 3, Complex64::new(0.1, 0.0));
        datum.set_coeff(0, -3, Complex64::new(0.1, 0.0));
        let radii = vec![0.9, 0.95, 0.99, 0.999, 1.0];
        let opts = SolveOptions {
            radii: Some(radii.clone()),
            n_theta: 64,
            ..Default::default()
        };
        let sol = solver::solve_dirichlet(&ctx, &datum, &opts)?;
        let nt = sol.u.angles.len() as f64;
        let ring_l2 = |ri: usize| -> f64 {
            (0..sol.u.angles.len())
                .map(|ti| {
                    (sol.u.values[0][ri][ti] - sol.u.values[0][radii.len() - 1][ti]).norm_sqr()
                })
                .sum::<f64>()
                .sqrt()
                * (2.0 * std::f64::consts::PI / nt).sqrt()
        };
        let mut worst_c: f64 = 0.0;
        for (ri, &r) in radii.iter().enumerate().take(radii.len() - 1) {
            worst_c = worst_c.max(ring_l2(ri) / (1.0 - r));
        }
        out.push(check(
            "trace_rate_linear",
            worst_c,
            10.0 * datum.norm(),
            cfg.seed,
            "||u_r - u_1|| / (1 - r) stays bounded".into(),
        ));
    }

    Ok(out)
}

fn oracle_suite(cfg: &BatteryConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();

    // harmonic baseline of the finite-difference oracle with observed order
    {
        let id = CoefficientField::identity(1, 2);
        let mut datum = BoundarySection::zero(1, 2);
        datum.set_coeff(0, 1, Complex64::new(0.5, 0.0));
        datum.set_coeff(0, -1, Complex64::new(0.5, 0.0));
        let err_at = |n_r: usize, n_t: usize| -> Result<f64> {
            let fc = fd::FieldCoefficients::new(&id, n_t)?;
            let u = fd::fd_dirichlet(&fc, &datum, n_r, n_t)?;
            let mut worst: f64 = 0.0;
            for (ri, &r) in u.radii.iter().enumerate() {
                for (ti, &theta) in u.angles.iter().enumerate() {
                    worst = worst
                        .max((u.values[0][ri][ti] - Complex64::new(r * theta.cos(), 0.0)).norm());
                }
            }
            Ok(worst)
        };
        let e1 = err_at(64, 128)?;
        let e2 = err_at(128, 256)?;
        out.push(check(
            "fd_harmonic_error",
            e2,
            1e-4,
            cfg.seed,
            format!("max error {e1:.3e} -> {e2:.3e} under refinement"),
        ));
        out.push(check(
            "fd_harmonic_order",
            e2 / e1,
            0.35,
            cfg.seed,
            "error ratio consistent with second order".into(),
        ));
    }

    // spectral vs finite-difference solutions for smooth real coefficients
    {
        let k = 12usize;
        let mut a = CoefficientField::identity(1, k);
        a.set_entry(0, 0, 1, Complex64::new(0.15, 0.0));
        a.set_entry(0, 0, -1, Complex64::new(0.15, 0.0));
        let b0 = coeff::hat_transform(&a)?.resize_modes(k);
        let handle = CalculusHandle::new(&b0, k, 0.0)?;
        let grid = TimeGrid::for_handle(&handle, 1e-3, 2f64.powf(0.25), 1e-12);
        let ctx = SolverContext::radially_independent(handle, grid);
        let mut datum = BoundarySection::zero(1, k);
        datum.set_coeff(0, 1, Complex64::new(0.5, 0.0));
        datum.set_coeff(0, -1, Complex64::new(0.5, 0.0));
        let (n_r, n_t) = (64usize, 128usize);
        let radii: Vec<f64> = (1..=n_r).map(|i| i as f64 / n_r as f64).collect();
        let opts = SolveOptions {
            radii: Some(radii),
            n_theta: n_t,
            ..Default::default()
        };
        let sol = solver::solve_dirichlet(&ctx, &datum, &opts)?;
        let fc = fd::FieldCoefficients::new(&a, n_t)?;
        let fd_u = fd::fd_dirichlet(&fc, &datum, n_r, n_t)?;
        let rel = fd::relative_l2_distance(&sol.u, &fd_u)?;
        out.push(check(
            "oracle_equivalence_variable_coefficients",
            rel,
            5e-3,
            cfg.seed,
            format!("relative L2 distance at {n_r}x{n_t}"),
        ));
    }

    // interior higher-integrability diagnostic at a fixed exponent
    {
        let handle = CalculusHandle::new(&CoefficientField::identity(1, 8), 8, 0.0)?;
        let grid = TimeGrid::for_handle(&handle, 1e-3, 2f64.powf(0.25), 1e-12);
        let ctx = SolverContext::radially_independent(handle, grid);
        let mut datum = BoundarySection::zero(1, 8);
        datum.set_coeff(0, 2, Complex64::new(0.4, 0.1));
        datum.set_coeff(0, -2, Complex64::new(0.4, -0.1));
        datum.set_coeff(0, 5, Complex64::new(0.2, 0.0));
        datum.set_coeff(0, -5, Complex64::new(0.2, 0.0));
        let n_t = 96usize;
        let radii: Vec<f64> = (1..=60).map(|i| i as f64 / 60.0).collect();
        let opts = SolveOptions {
            radii: Some(radii),
            n_theta: n_t,
            ..Default::default()
        };
        let sol = solver::solve_dirichlet(&ctx, &datum, &opts)?;
        // |grad u| on the polar grid
        let g2 = |ri: usize, ti: usize| -> f64 {
            sol.grad.values[0][ri][ti].norm_sqr() + sol.grad.values[1][ri][ti].norm_sqr()
        };
        let p = 2.5f64;
        let mut worst_c: f64 = 0.0;
        let balls: [(f64, f64, f64); 3] = [(0.3, 1.0, 0.15), (0.5, 3.5, 0.2), (0.2, 5.0, 0.1)];
        for &(rc, tc, rad) in &balls {
            let ball = |factor: f64, pow: f64| -> f64 {
                let mut acc = 0.0;
                let mut area = 0.0;
                for (ri, &r) in sol.grad.radii.iter().enumerate() {
                    for (ti, &th) in sol.grad.angles.iter().enumerate() {
                        let dx = r * th.cos() - rc * tc.cos();
                        let dy = r * th.sin() - rc * tc.sin();
                        if dx * dx + dy * dy < (factor * rad).powi(2) {
                            acc += g2(ri, ti).powf(pow / 2.0) * r;
                            area += r;
                        }
                    }
                }
                (acc / area.max(1e-300)).powf(1.0 / pow)
            };
            let lhs = ball(1.0, p);
            let rhs = ball(2.0, 2.0);
            if rhs > 0.0 {
                worst_c = worst_c.max(lhs / rhs);
            }
        }
        out.push(check(
            "reverse_holder_diagnostic",
            worst_c,
            25.0,
            cfg.seed,
            format!("interior L^{p} vs L^2 gradient averages over test balls"),
        ));
    }

    Ok(out)
}
