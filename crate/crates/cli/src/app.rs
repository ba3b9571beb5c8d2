//! Command-line definitions and dispatch.

use std::fs::File;
use std::io::{self as stdio, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sphere_oep::estimates::{
    associated_triple, component_tau, default_gradient_slack, verify_curvature_estimates, verify_gradient_estimate,
    verify_length_estimate, CurvatureOptions,
};
use sphere_oep::io;
use sphere_oep::levelset::{extract_level_curves, radial_graph_grid, radial_graph_profile};
use sphere_oep::pde::{fit_model_to_annulus, solve_dirichlet, DomainSpec, Guess, Perturbation, SolveOptions};
use sphere_oep::profiles::{solve_annulus_profile, solve_disk_profile, Branch};
use sphere_oep::tau::{build_tau_curve, default_grid, expected_critical_height, geometric_tail};
use sphere_oep::{ComparisonTriple, GridSolution, Nonlinearity, NonlinearityDesc};

use crate::golden::GoldenStore;
use crate::params::{parse_branch, parse_list, parse_nonlinearity, parse_param, parse_perturbation, parse_values};
use crate::sweep::run_sweep;
use crate::verify_all::{verify_all, VerifyConfig};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "sphere-oep", version, about = "Model solutions and comparison estimates for Δu + f(u) = 0 on spherical annuli")]
pub struct Cli {
    /// Nonlinearity, `affine:a,b` or `linear:a`.
    #[arg(long = "f", global = true, default_value = "affine:2,0", value_parser = parse_nonlinearity)]
    pub f: NonlinearityDesc,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Annular model profile `U_{R,M}`: CSV table plus a JSON sidecar.
    Profile {
        #[arg(long = "R", allow_hyphen_values = true)]
        height: f64,
        #[arg(long = "M")]
        max_value: f64,
    },
    /// Disk profile `V_M` and `h(M)`.
    Disk {
        #[arg(long = "M")]
        max_value: f64,
    },
    /// τ̄ table `R,tau1,tau2`.
    Tau {
        #[arg(long = "M", default_value_t = 1.0)]
        max_value: f64,
        /// `default`, a comma list or `a:b:step`.
        #[arg(long, default_value = "default")]
        grid: String,
        /// Append `1 - 2^-k` for `k` in `k0..=k1`.
        #[arg(long)]
        tail: Option<String>,
    },
    /// Expected critical height for a τ̄ value.
    InvertTau {
        #[arg(long)]
        value: f64,
        #[arg(long = "M", default_value_t = 1.0)]
        max_value: f64,
        #[arg(long, default_value = "default")]
        grid: String,
        #[arg(long)]
        tail: Option<String>,
    },
    /// Dirichlet solve on a (perturbed) annulus, written as a grid-solution file.
    Solve(SolveArgs),
    /// Model parameters `(R, M)` whose zero set is the annulus `s1 < s < s2`.
    Fit {
        #[arg(long)]
        s1: f64,
        #[arg(long)]
        s2: f64,
    },
    /// Check an estimate on a solved grid.
    Verify {
        #[arg(value_enum)]
        estimate: Estimate,
        /// Grid-solution file.
        #[arg(long)]
        solution: PathBuf,
        /// `auto` or `R,M,branch`.
        #[arg(long, default_value = "auto")]
        triple: String,
        /// `upper`, `lower` or `both`.
        #[arg(long, default_value = "both")]
        side: String,
        /// Allowance for the inequality; defaults to `C·h²`.
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Run `profile`, `disk` or `tau` over a parameter grid.
    Sweep {
        template: String,
        /// `name=values`, repeatable, e.g. `R=0:0.9:0.1`.
        #[arg(long = "param", value_parser = parse_param, required = true)]
        params: Vec<(String, Vec<f64>)>,
    },
    /// Level curves of a grid solution, one CSV per curve plus a JSON index.
    Levels {
        #[arg(long)]
        solution: PathBuf,
        /// Comma-separated levels.
        #[arg(long)]
        values: String,
    },
    /// Radial graph `(1 + M - u)·p` with normals and contact cosines.
    RadialGraph {
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long = "R", allow_hyphen_values = true)]
        height: Option<f64>,
        #[arg(long = "M")]
        max_value: Option<f64>,
        #[arg(long, default_value_t = 64)]
        n_theta: usize,
    },
    /// Full invariant suite; exit status 0 iff every check passes.
    VerifyAll {
        /// JSON config; the default suite when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Refuse to run against an empty golden store.
        #[arg(long)]
        ci: bool,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub s1: Option<f64>,
    #[arg(long)]
    pub s2: Option<f64>,
    /// Use the annulus of the model `R,M` instead of `--s1/--s2`.
    #[arg(long, allow_hyphen_values = true)]
    pub model: Option<String>,
    /// `amp,mode`, applied to both walls.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_perturbation)]
    pub perturb: Option<(f64, u32)>,
    #[arg(long = "n_s", alias = "n-s", default_value_t = 64)]
    pub n_s: usize,
    #[arg(long = "n_theta", alias = "n-theta", default_value_t = 64)]
    pub n_theta: usize,
    /// Radial clustering of the grid, at most 1/11.
    #[arg(long)]
    pub stretch: Option<f64>,
    /// Start from zeros instead of the fitted model profile.
    #[arg(long)]
    pub zero_guess: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimate {
    Gradient,
    Curvature,
    Length,
}

fn sink(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(stdio::stdout())),
    })
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn tau_grid(grid: &str, tail: &Option<String>) -> CliResult<Vec<f64>> {
    let mut g = if grid == "default" { default_grid() } else { parse_values(grid).map_err(CliError)? };
    if let Some(t) = tail {
        let k = parse_list(t).map_err(CliError)?;
        if k.len() != 2 {
            return Err(CliError("--tail takes k0,k1".into()));
        }
        g.extend(geometric_tail::<f64>(k[0] as u32, k[1] as u32));
    }
    Ok(g)
}

fn read_solution(path: &Path) -> CliResult<GridSolution> {
    let file = File::open(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    Ok(io::read_grid_solution(BufReader::new(file))?.1)
}

fn sides(side: &str) -> CliResult<Vec<Branch>> {
    match side {
        "both" => Ok(vec![Branch::Upper, Branch::Lower]),
        s => Ok(vec![parse_branch(s).map_err(CliError)?]),
    }
}

fn triple_for(sol: &GridSolution, side: Branch, arg: &str) -> CliResult<ComparisonTriple> {
    if arg == "auto" {
        return Ok(associated_triple(sol, side)?);
    }
    let parts: Vec<&str> = arg.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError(format!("--triple takes auto or R,M,branch (got {arg:?})")));
    }
    let r: f64 = parts[0].trim().parse().map_err(|e| CliError(format!("R: {e}")))?;
    let m: f64 = parts[1].trim().parse().map_err(|e| CliError(format!("M: {e}")))?;
    let branch = parse_branch(parts[2]).map_err(CliError)?;
    let profile = solve_annulus_profile(sol.nonlinearity(), r, m, 1e-10)?;
    let (_, tau) = component_tau(sol, side)?;
    Ok(ComparisonTriple::new(profile, branch, tau)?)
}

#[derive(Serialize)]
struct VerifyOutput<R: Serialize> {
    estimate: String,
    solution: String,
    pass: bool,
    reports: Vec<R>,
}

fn verify(cli: &Cli, estimate: Estimate, path: &Path, triple: &str, side: &str, slack: Option<f64>) -> CliResult<i32> {
    let sol = read_solution(path)?;
    let slack = slack.unwrap_or_else(|| default_gradient_slack(&sol));
    let mut pass = true;
    let mut reports = Vec::new();
    for side in sides(side)? {
        let t = triple_for(&sol, side, triple)?;
        let value = match estimate {
            Estimate::Gradient => {
                let r = verify_gradient_estimate(&sol, side, &t, slack, 1e-3)?;
                pass &= r.pass;
                serde_json::to_value(r)?
            }
            Estimate::Curvature => {
                let r = verify_curvature_estimates(&sol, side, &t, &CurvatureOptions::for_solution(&sol))?;
                pass &= r.pass;
                serde_json::to_value(r)?
            }
            Estimate::Length => {
                let r = verify_length_estimate(&sol, side, &t, slack, 1e-2, 1e-3)?;
                pass &= r.pass;
                serde_json::to_value(r)?
            }
        };
        reports.push(value);
    }
    let name = format!("{estimate:?}").to_lowercase();
    emit_json(&cli.out, &VerifyOutput { estimate: name, solution: path.display().to_string(), pass, reports })?;
    eprintln!("{}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn solve(cli: &Cli, f: &Nonlinearity, a: &SolveArgs) -> CliResult<i32> {
    let (s1, s2, model) = match (&a.model, a.s1, a.s2) {
        (Some(arg), _, _) => {
            let v = parse_list(arg).map_err(CliError)?;
            if v.len() != 2 {
                return Err(CliError("--model takes R,M".into()));
            }
            let p = solve_annulus_profile(f, v[0], v[1], cli.tol)?;
            (p.r2().acos(), p.r1().acos(), Some(p))
        }
        (None, Some(s1), Some(s2)) => {
            let model = if a.zero_guess {
                None
            } else {
                fit_model_to_annulus(s1, s2, f, 1e-6).ok().and_then(|(r, m)| solve_annulus_profile(f, r, m, cli.tol).ok())
            };
            (s1, s2, model)
        }
        _ => return Err(CliError("solve needs --s1 and --s2, or --model R,M".into())),
    };
    let pert = a.perturb.map_or(Perturbation::none(), |(amp, mode)| Perturbation::new(amp, mode));
    let mut domain = DomainSpec::perturbed(s1, s2, pert, pert, a.n_s, a.n_theta)?;
    if let Some(st) = a.stretch {
        domain = domain.with_stretch(st)?;
    }
    let guess = match (&model, a.zero_guess) {
        (Some(p), false) => Guess::Profile(p),
        _ => Guess::Zeros,
    };
    let sol = solve_dirichlet(&domain, f, guess, &SolveOptions::with_tol(cli.tol))?;
    eprintln!(
        "residual {:e} after {} iteration(s), route {:?}, max {}",
        sol.residual(),
        sol.iterations(),
        sol.route(),
        sol.node_max()
    );
    let mut w = sink(&cli.out)?;
    io::write_grid_solution(&sol, &mut w)?;
    w.flush()?;
    Ok(0)
}

fn levels(cli: &Cli, path: &Path, values: &[f64]) -> CliResult<i32> {
    let sol = read_solution(path)?;
    let dir = cli.out.clone().ok_or_else(|| CliError("levels needs --out <directory>".into()))?;
    std::fs::create_dir_all(&dir)?;
    let mut index = Vec::new();
    for (k, c) in values.iter().enumerate() {
        for (n, curve) in extract_level_curves(&sol, *c)?.iter().enumerate() {
            let name = format!("level_{k}_{n}.csv");
            io::write_level_curve_csv(curve, File::create(dir.join(&name))?)?;
            index.push(io::level_curve_entry(curve, name));
        }
    }
    let mut w = BufWriter::new(File::create(dir.join("index.json"))?);
    serde_json::to_writer_pretty(&mut w, &index)?;
    w.flush()?;
    Ok(0)
}

/// Runs one command and returns the process exit status.
pub fn run(cli: &Cli) -> CliResult<i32> {
    let f: Nonlinearity = cli.f.build();
    match &cli.command {
        Command::Profile { height, max_value } => {
            let p = solve_annulus_profile(&f, *height, *max_value, cli.tol)?;
            let side = io::profile_sidecar(&p)?;
            match cli.format {
                Format::Csv => {
                    io::write_profile_csv(&p, sink(&cli.out)?)?;
                    match &cli.out {
                        Some(path) => emit_json(&Some(path.with_extension("json")), &side)?,
                        None => eprintln!("{}", serde_json::to_string(&side)?),
                    }
                }
                Format::Json => {
                    emit_json(&cli.out, &serde_json::json!({ "sidecar": side, "samples": p.samples() }))?;
                }
            }
        }
        Command::Disk { max_value } => {
            let d = solve_disk_profile(&f, *max_value, cli.tol)?;
            match cli.format {
                Format::Csv => {
                    io::write_disk_csv(&d, sink(&cli.out)?)?;
                    eprintln!("h = {} s_M = {}", d.h(), d.s_m());
                }
                Format::Json => emit_json(&cli.out, &serde_json::json!({ "M": max_value, "h": d.h(), "s_M": d.s_m(), "samples": d.samples() }))?,
            }
        }
        Command::Tau { max_value, grid, tail } => {
            let c = build_tau_curve(&f, *max_value, &tau_grid(grid, tail)?)?;
            if !c.is_monotone() {
                eprintln!("warning: {} monotonicity violation(s); tighten --tol", c.violations().len());
            }
            match cli.format {
                Format::Csv => io::write_tau_csv(&c, sink(&cli.out)?)?,
                Format::Json => emit_json(
                    &cli.out,
                    &serde_json::json!({
                        "M": max_value, "tau0": c.tau0(), "h": c.h(), "R": c.grid(),
                        "tau1": c.tau1(), "tau2": c.tau2(), "violations": c.violations(),
                    }),
                )?,
            }
        }
        Command::InvertTau { value, max_value, grid, tail } => {
            let c = build_tau_curve(&f, *max_value, &tau_grid(grid, tail)?)?;
            let hit = expected_critical_height(&c, *value)?;
            match cli.format {
                Format::Csv => {
                    let mut w = sink(&cli.out)?;
                    writeln!(w, "R_bar,branch")?;
                    writeln!(w, "{},{}", hit.r_bar, serde_json::to_value(hit.branch)?.as_str().unwrap_or(""))?;
                    w.flush()?;
                }
                Format::Json => emit_json(&cli.out, &hit)?,
            }
        }
        Command::Solve(a) => return solve(cli, &f, a),
        Command::Fit { s1, s2 } => {
            let (r, m) = fit_model_to_annulus(*s1, *s2, &f, cli.tol.max(1e-12))?;
            match cli.format {
                Format::Csv => {
                    let mut w = sink(&cli.out)?;
                    writeln!(w, "R,M")?;
                    writeln!(w, "{r},{m}")?;
                    w.flush()?;
                }
                Format::Json => emit_json(&cli.out, &serde_json::json!({ "R": r, "M": m, "pinned_M": f.is_homogeneous_linear() }))?,
            }
        }
        Command::Verify { estimate, solution, triple, side, slack } => return verify(cli, *estimate, solution, triple, side, *slack),
        Command::Sweep { template, params } => {
            let table = run_sweep(template, &cli.f, params, cli.tol)?;
            match cli.format {
                Format::Csv => table.write_csv(sink(&cli.out)?)?,
                Format::Json => emit_json(&cli.out, &table)?,
            }
            if table.failures() > 0 {
                eprintln!("{} of {} points failed", table.failures(), table.rows.len());
            }
        }
        Command::Levels { solution, values } => return levels(cli, solution, &parse_list(values).map_err(CliError)?),
        Command::RadialGraph { solution, height, max_value, n_theta } => {
            let graph = match (solution, height, max_value) {
                (Some(path), _, _) => radial_graph_grid(&read_solution(path)?),
                (None, Some(r), Some(m)) => radial_graph_profile(&solve_annulus_profile(&f, *r, *m, cli.tol)?, *n_theta),
                _ => return Err(CliError("radial-graph needs --solution or --R and --M".into())),
            };
            match cli.format {
                Format::Csv => {
                    io::write_radial_graph_csv(&graph, sink(&cli.out)?)?;
                    eprintln!("{}", serde_json::to_string(&graph.stats)?);
                }
                Format::Json => emit_json(&cli.out, &graph)?,
            }
        }
        Command::VerifyAll { config, ci } => {
            let config: VerifyConfig = match config {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => VerifyConfig::default(),
            };
            let store = GoldenStore::from_env()?;
            let summary = verify_all(&config, &store, *ci)?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for c in summary.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {} [{}] {}", c.name, c.subject, c.detail);
            }
            eprintln!("{} passed, {} failed", summary.passed, summary.failed);
            emit_json(&cli.out, &summary)?;
            return Ok(summary.exit_code());
        }
    }
    Ok(0)
}
