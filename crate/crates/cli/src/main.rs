//! Command-line front end: coefficient transforms, spectra, boundary value
//! solves, the verification battery and oracle comparisons, with versioned
//! JSON/CSV artifacts.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use diskbvp::battery::{BatteryConfig, Suite};
use diskbvp::calculus::CalculusHandle;
use diskbvp::coeff;
use diskbvp::fd;
use diskbvp::serial::{self, FieldDoc, SectionDoc};
use diskbvp::solver::{self, Problem, SolveOptions, SolverContext, TimeGrid};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "diskbvp", about = "Spectral boundary value solver on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Dirichlet,
    Neumann,
    Regularity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Identities,
    Norms,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Transform coefficients: writes the block transform, the conjugate
    /// coefficients and accretivity constants.
    Transform {
        #[arg(long)]
        coeff: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Eigenvalues of the generator with the fitted hyperbola opening.
    Spectrum {
        #[arg(long)]
        coeff: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a boundary value problem and write the solution grids.
    Solve {
        #[arg(long, value_enum)]
        problem: ProblemArg,
        #[arg(long)]
        coeff: PathBuf,
        #[arg(long)]
        datum: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// curvature parameter of the generator; 0 is the disk
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 64)]
        n_theta: usize,
        #[arg(long, default_value_t = 1e-3)]
        t_min: f64,
    },
    /// Run a verification suite and write the ledger; exits nonzero on any
    /// failed check.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve with the spectral pipeline and the finite-difference oracle and
    /// report their distance.
    CompareOracle {
        #[arg(long)]
        coeff: PathBuf,
        #[arg(long)]
        datum: PathBuf,
        /// oracle grid as RADIALxANGULAR, e.g. 128x256
        #[arg(long, default_value = "64x128")]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config_hash(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex_of(&h.finalize())
}

fn hex_of(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[derive(Serialize)]
struct WithMeta<T: Serialize> {
    artifact_version: u32,
    config_hash: String,
    #[serde(flatten)]
    payload: T,
}

fn with_meta<T: Serialize>(hash: &str, payload: T) -> WithMeta<T> {
    WithMeta {
        artifact_version: serial::FORMAT_VERSION,
        config_hash: hash.to_string(),
        payload,
    }
}

fn read_coeff(path: &Path) -> Result<coeff::RadialCoefficient> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serial::parse_coefficient_json(&text)?)
}

fn read_datum(path: &Path) -> Result<diskbvp::fourier::BoundarySection> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: SectionDoc = serde_json::from_str(&text)?;
    Ok(doc.to_section()?)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            let err = serde_json::json!({
                "error": format!("{e:#}"),
                "module": classify(&e),
            });
            eprintln!("{}", serde_json::to_string_pretty(&err).unwrap());
            std::process::exit(2);
        }
    }
}

fn classify(e: &anyhow::Error) -> &'static str {
    if let Some(de) = e.downcast_ref::<diskbvp::Error>() {
        use diskbvp::Error::*;
        match de {
            DegenerateCoefficient { .. } | SingularJacobian { .. } => "coefficient-algebra",
            IllConditioned { .. } | NearSingular(_) | SchurFailed | EigenResidual { .. } => {
                "boundary-operators"
            }
            SpectralGap { .. } | QuadratureDrift(_) => "functional-calculus",
            NonConvergence(_) | BadDatum(_) | IllPosed(_) => "bvp-solver",
            IndefiniteOperator => "verification-harness",
            _ => "core",
        }
    } else {
        "cli"
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Transform { coeff, out } => {
            let hash = config_hash(&["transform".into(), format!("{coeff:?}")]);
            let a = read_coeff(&coeff)?;
            fs::create_dir_all(&out)?;
            let hat = coeff::hat_transform(&a.boundary)?;
            let conj = coeff::conjugate_coefficients(&a.boundary)?;
            let kappa_g = coeff::accretivity_garding(&a.boundary)?;
            let kappa_p = coeff::accretivity_pointwise(&a.boundary)?;
            let sup = a.boundary.sup_norm(0)?;
            write_json(
                &out.join("transform.json"),
                &with_meta(
                    &hash,
                    serde_json::json!({
                        "hat": FieldDoc::from_field(&hat),
                        "conjugate": FieldDoc::from_field(&conj),
                        "constants": {
                            "kappa_garding": kappa_g,
                            "kappa_pointwise": kappa_p,
                            "sup_norm": sup,
                            "hat_truncation_residual": hat.truncation_residual,
                        },
                    }),
                ),
            )?;
            println!("wrote {}", out.join("transform.json").display());
            Ok(0)
        }
        Command::Spectrum {
            coeff,
            sigma,
            k,
            out,
        } => {
            let hash = config_hash(&[
                "spectrum".into(),
                format!("{coeff:?}"),
                sigma.to_string(),
                k.to_string(),
            ]);
            let a = read_coeff(&coeff)?;
            let b0 = coeff::hat_transform(&a.boundary)?.resize_modes(k);
            let (d0, _) = diskbvp::operators::assemble_d0(&b0, k, sigma);
            let rep = diskbvp::operators::spectrum(&d0)?;
            fs::create_dir_all(&out)?;
            fs::write(
                out.join("eigenvalues.csv"),
                serial::spectrum_csv(&rep.eigenvalues, &hash),
            )?;
            write_json(
                &out.join("spectrum.json"),
                &with_meta(
                    &hash,
                    serde_json::json!({
                        "omega": rep.omega,
                        "violations": rep.violations,
                        "gap": rep.gap,
                        "count": rep.eigenvalues.len(),
                    }),
                ),
            )?;
            println!(
                "omega = {:.6}, violations = {}, gap = {:.6}",
                rep.omega, rep.violations, rep.gap
            );
            Ok(0)
        }
        Command::Solve {
            problem,
            coeff,
            datum,
            out,
            sigma,
            n_theta,
            t_min,
        } => {
            let hash = config_hash(&[
                "solve".into(),
                format!("{problem:?}", problem = problem as u8),
                format!("{coeff:?}"),
                format!("{datum:?}"),
                sigma.to_string(),
                n_theta.to_string(),
                t_min.to_string(),
            ]);
            let a = read_coeff(&coeff)?;
            let phi = read_datum(&datum)?;
            let k = phi.k_max().max(a.boundary.k_max());
            let b0 = coeff::hat_transform(&a.boundary)?.resize_modes(k);
            let handle = CalculusHandle::new(&b0, k, sigma)?;
            let grid = TimeGrid::for_handle(&handle, t_min, 2f64.powf(0.25), 1e-12);
            let ctx = if a.samples.is_empty() {
                SolverContext::radially_independent(handle, grid)
            } else {
                let disc = coeff::Discrepancy::from_radial(&a, &grid.nodes)?;
                let disc = coeff::Discrepancy {
                    base: disc.base.resize_modes(k),
                    times: disc.times,
                    samples: disc
                        .samples
                        .iter()
                        .map(|s| s.resize_modes(k))
                        .collect(),
                    carleson_norm: None,
                    sup_norm: None,
                };
                SolverContext::new(handle, grid, disc)?
            };
            let phi = diskbvp::fourier::BoundarySection::from_vector(
                phi.m(),
                k,
                phi.resize_modes(k).into_vector(),
            );
            let opts = SolveOptions {
                n_theta,
                ..Default::default()
            };
            let sol = match problem {
                ProblemArg::Dirichlet => solver::solve_dirichlet(&ctx, &phi, &opts)?,
                ProblemArg::Neumann => solver::solve_neumann(&ctx, &phi, &opts)?,
                ProblemArg::Regularity => solver::solve_regularity(&ctx, &phi, &opts)?,
            };
            fs::create_dir_all(&out)?;
            fs::write(out.join("u_grid.csv"), serial::polar_csv(&sol.u, &hash))?;
            fs::write(out.join("grad_grid.csv"), serial::polar_csv(&sol.grad, &hash))?;
            fs::write(
                out.join("conjugate_grid.csv"),
                serial::polar_csv(&sol.conjugate, &hash),
            )?;
            write_json(
                &out.join("solution.json"),
                &with_meta(
                    &hash,
                    serde_json::json!({
                        "problem": match sol.problem {
                            Problem::Dirichlet => "dirichlet",
                            Problem::Neumann => "neumann",
                            Problem::Regularity => "regularity",
                        },
                        "trace_u1": SectionDoc::from_section(&sol.trace_u1),
                        "trace_g1": SectionDoc::from_section(&sol.trace_g1),
                        "solve": {
                            "iterations": sol.report.iterations,
                            "contraction": sol.report.contraction,
                            "residual": sol.report.residual,
                            "used_dense": sol.report.used_dense,
                        },
                    }),
                ),
            )?;
            println!("wrote solution artifacts to {}", out.display());
            Ok(0)
        }
        Command::Verify { suite, config, out } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<BatteryConfig>(&text)
                        .with_context(|| "parsing battery config")?
                }
                None => BatteryConfig::default(),
            };
            cfg.suite = match suite {
                SuiteArg::Identities => Suite::Identities,
                SuiteArg::Norms => Suite::Norms,
                SuiteArg::Oracle => Suite::Oracle,
            };
            let hash = config_hash(&["verify".into(), serde_json::to_string(&cfg)?]);
            let ledger = diskbvp::battery::run_suite(&cfg)?;
            fs::create_dir_all(&out)?;
            write_json(&out.join("ledger.json"), &with_meta(&hash, &ledger))?;
            // plot-ready CSV of the checks
            let mut csv = String::from("name,passed,observed,tolerance\n");
            for c in &ledger.checks {
                csv.push_str(&format!(
                    "{},{},{:.16e},{:.16e}\n",
                    c.name, c.passed as u8, c.observed, c.tolerance
                ));
            }
            fs::write(out.join("ledger.csv"), csv)?;
            for c in &ledger.checks {
                println!(
                    "{}: {} (observed {:.3e}, tolerance {:.3e})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.observed,
                    c.tolerance
                );
            }
            Ok(if ledger.passed() { 0 } else { 1 })
        }
        Command::CompareOracle {
            coeff,
            datum,
            grid,
            out,
        } => {
            let (n_r, n_t) = parse_grid(&grid)?;
            let hash = config_hash(&[
                "compare-oracle".into(),
                format!("{coeff:?}"),
                format!("{datum:?}"),
                grid.clone(),
            ]);
            let a = read_coeff(&coeff)?;
            if !a.samples.is_empty() {
                bail!("the oracle comparison expects radially independent coefficients");
            }
            let phi = read_datum(&datum)?;
            let k = phi.k_max().max(a.boundary.k_max()).max(8);
            let b0 = coeff::hat_transform(&a.boundary)?.resize_modes(k);
            let handle = CalculusHandle::new(&b0, k, 0.0)?;
            let tg = TimeGrid::for_handle(&handle, 1e-3, 2f64.powf(0.25), 1e-12);
            let ctx = SolverContext::radially_independent(handle, tg);
            let phi_k = diskbvp::fourier::BoundarySection::from_vector(
                phi.m(),
                k,
                phi.resize_modes(k).into_vector(),
            );
            let radii: Vec<f64> = (1..=n_r).map(|i| i as f64 / n_r as f64).collect();
            let opts = SolveOptions {
                radii: Some(radii),
                n_theta: n_t,
                ..Default::default()
            };
            let sol = solver::solve_dirichlet(&ctx, &phi_k, &opts)?;
            let fc = fd::FieldCoefficients::new(&a.boundary, n_t)?;
            let fd_u = fd::fd_dirichlet(&fc, &phi_k, n_r, n_t)?;
            let rel = fd::relative_l2_distance(&sol.u, &fd_u)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("spectral_u.csv"), serial::polar_csv(&sol.u, &hash))?;
            fs::write(out.join("oracle_u.csv"), serial::polar_csv(&fd_u, &hash))?;
            write_json(
                &out.join("comparison.json"),
                &with_meta(
                    &hash,
                    serde_json::json!({
                        "relative_l2_distance": rel,
                        "grid": format!("{n_r}x{n_t}"),
                    }),
                ),
            )?;
            println!("relative L2 distance: {rel:.6e}");
            Ok(0)
        }
    }
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 2 {
        bail!("grid must look like 64x128");
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}
