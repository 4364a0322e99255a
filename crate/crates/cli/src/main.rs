//! gencalc: generalized-derivative calculus from the command line.
//!
//! Subcommands: `deriv` (limit/lift evaluation), `sl` (eigenvalues and
//! eigenfunctions), `simulate` (central-force, gravity, drag, n-body),
//! `units` (alpha-second conversions), `verify` (the fixture battery).
//! Structured results go to stdout as JSON; sampled curves to CSV via
//! `--out`. Identical inputs produce bit-identical outputs.

mod config;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use gencalc_core::deriv::{self, LimitOutcome, Method};
use gencalc_core::func::RealFunction;
use gencalc_core::interval::Interval;
use gencalc_core::mechanics;
use gencalc_core::pmap::{PMap, PMapFamily, PMapSpec};
use gencalc_core::sl;
use gencalc_core::units;

use config::{
    linspace, sigma_default, CentralForceFile, DragFile, GravityFile, NBodyFile, SlConfig,
};

#[derive(Parser)]
#[command(name = "gencalc", version, about = "Generalized and fractional derivative toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a generalized derivative at a point
    Deriv(DerivArgs),
    /// Solve a Sturm-Liouville eigenvalue problem
    Sl(SlArgs),
    /// Run a mechanics simulation
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Convert velocities/accelerations to fractional-time units
    Units(UnitsArgs),
    /// Run the built-in verification fixtures
    Verify,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Limit,
    Lift,
}

#[derive(Args)]
struct PMapArgs {
    /// p-map family: classical, khalil, katugampola, symmetric_abs,
    /// sign_map, quadratic, cubic
    #[arg(long)]
    pmap: Option<String>,
    /// fractional order in (0, 1], required for the fractional families
    #[arg(long)]
    alpha: Option<f64>,
    /// p-map domain [lo, hi]
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    domain: Option<Vec<f64>>,
}

impl PMapArgs {
    fn build(&self, fallback_domain: Option<(f64, f64)>) -> Result<PMap> {
        let family = self
            .pmap
            .as_deref()
            .ok_or_else(|| anyhow!("--pmap is required (or use --config)"))?;
        let family = PMapFamily::parse(family)?;
        let (lo, hi) = match (&self.domain, fallback_domain) {
            (Some(d), _) => (d[0], d[1]),
            (None, Some(d)) => d,
            (None, None) => bail!("--domain LO HI is required"),
        };
        // the fractional families exclude t = 0; clip a touching endpoint
        let lo = if matches!(family, PMapFamily::Khalil | PMapFamily::Katugampola) && lo <= 0.0 {
            1e-10
        } else {
            lo
        };
        let spec = PMapSpec { family, alpha: self.alpha, domain: Interval::new(lo, hi)? };
        Ok(spec.build()?)
    }
}

#[derive(Args)]
struct DerivArgs {
    #[command(flatten)]
    pmap: PMapArgs,
    /// built-in function name (t, t2, t3, sin, cos, exp, abs, ...)
    #[arg(long = "fn")]
    fn_name: Option<String>,
    /// evaluation point
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, value_enum, default_value = "limit")]
    method: MethodArg,
    /// JSON config alternative to the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivFile {
    pmap: PMapSpec,
    #[serde(rename = "fn")]
    fn_name: String,
    t: f64,
    #[serde(default)]
    method: Option<String>,
}

#[derive(Args)]
struct SlArgs {
    #[command(flatten)]
    pmap: PMapArgs,
    /// problem interval [a, b]
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// boundary conditions: dirichlet or neumann
    #[arg(long, default_value = "dirichlet")]
    bc: String,
    /// eigenvalues to compute per side
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// export the k-th (1-based) positive eigenfunction as CSV (t, y, Dy)
    #[arg(long)]
    eigenfunction: Option<usize>,
    /// CSV output path for --eigenfunction
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pruefer-angle integration tolerance
    #[arg(long, default_value_t = 1e-11)]
    ode_rtol: f64,
    /// clock tabulation density
    #[arg(long, default_value_t = 4096)]
    n_grid: usize,
    /// JSON problem description alternative to the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Planar motion under F = -m k^2 r
    CentralForce(SimArgs),
    /// Projectile under constant gravity
    Gravity(SimArgs),
    /// Vertical fall against quadratic drag
    Drag(SimArgs),
    /// Gravitational n-body in the tau frame
    Nbody(SimArgs),
}

#[derive(Args)]
struct SimArgs {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// CSV output path for the sampled trajectory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UnitsArgs {
    /// magnitude in classical SI units
    #[arg(long, allow_negative_numbers = true)]
    value: f64,
    /// source unit: m/s or m/s2
    #[arg(long)]
    unit: String,
    /// fractional order in (0, 1]
    #[arg(long)]
    alpha: f64,
    /// cosmic-time factor; defaults to GENCALC_SIGMA or the cesium count
    #[arg(long)]
    sigma: Option<f64>,
}

/// Failures split into configuration problems (exit 2) and numerical ones
/// (exit 1, diagnostic JSON on stdout).
enum CliError {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Config(e.into())
}

fn numeric_err<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Numerical(e.into())
}

fn read_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(config_err)?;
    serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(config_err)
}

fn write_out(path: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    if let Some(p) = path {
        fs::write(p, contents)
            .with_context(|| format!("cannot write {}", p.display()))
            .map_err(config_err)?;
    }
    Ok(())
}

fn cmd_deriv(args: DerivArgs) -> Result<(), CliError> {
    let (pm, f, t, method) = if let Some(path) = &args.config {
        let file: DerivFile = read_config(path)?;
        let pm = file.pmap.build().map_err(config_err)?;
        let f = RealFunction::by_name(&file.fn_name)
            .ok_or_else(|| anyhow!("unknown function '{}'", file.fn_name))
            .map_err(config_err)?;
        let method = match file.method.as_deref() {
            None | Some("limit") => MethodArg::Limit,
            Some("lift") => MethodArg::Lift,
            Some(other) => return Err(config_err(anyhow!("unknown method '{other}'"))),
        };
        (pm, f, file.t, method)
    } else {
        let pm = args.pmap.build(None).map_err(config_err)?;
        let name = args
            .fn_name
            .as_deref()
            .ok_or_else(|| anyhow!("--fn is required"))
            .map_err(config_err)?;
        let f = RealFunction::by_name(name)
            .ok_or_else(|| anyhow!("unknown function '{name}'"))
            .map_err(config_err)?;
        let t = args.t.ok_or_else(|| anyhow!("--t is required")).map_err(config_err)?;
        (pm, f, t, args.method)
    };

    let out = match method {
        MethodArg::Limit => match deriv::gd_limit(&pm, &f, t).map_err(numeric_err)? {
            LimitOutcome::Value(r) => json!({
                "value": r.value,
                "error": r.estimated_error,
                "method": "limit",
                "p_differentiable": true,
            }),
            LimitOutcome::NotPDifferentiable { left, right } => json!({
                "value": null,
                "error": null,
                "method": "limit",
                "p_differentiable": false,
                "one_sided": {"left": left, "right": right},
            }),
        },
        MethodArg::Lift => {
            let r = deriv::gd_lift(&pm, &f, t).map_err(numeric_err)?;
            debug_assert!(matches!(r.method, Method::Lift));
            json!({
                "value": r.value,
                "error": r.estimated_error,
                "method": "lift",
                "p_differentiable": true,
            })
        }
    };
    println!("{out}");
    Ok(())
}

fn cmd_sl(args: SlArgs) -> Result<(), CliError> {
    let (prob, n) = if let Some(path) = &args.config {
        let file: SlConfig = read_config(path)?;
        (file.build().map_err(config_err)?, file.n)
    } else {
        let iv = args
            .interval
            .as_ref()
            .ok_or_else(|| anyhow!("--interval A B is required"))
            .map_err(config_err)?;
        let interval = Interval::new(iv[0], iv[1]).map_err(config_err)?;
        let pm = args.pmap.build(Some((iv[0], iv[1]))).map_err(config_err)?;
        let (mu, nu) = match args.bc.as_str() {
            "dirichlet" => (0.0, 0.0),
            "neumann" => (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            other => return Err(config_err(anyhow!("unknown bc preset '{other}'"))),
        };
        let prob = sl::SLProblem::builder(pm, interval)
            .angles(mu, nu)
            .build()
            .map_err(config_err)?;
        (prob, args.n)
    };

    let options = sl::ShootOptions {
        ode_rtol: args.ode_rtol,
        ode_atol: args.ode_rtol,
        n_grid: args.n_grid,
    };
    let spec = sl::shoot_eigenvalues_opts(&prob, n, &options).map_err(numeric_err)?;
    let out = json!({
        "lambda_plus": spec.lambda_plus,
        "lambda_minus": spec.lambda_minus,
        "oscillation_plus": spec.oscillation_plus,
        "oscillation_minus": spec.oscillation_minus,
        "asymptotic": {
            "denominator_plus": spec.asymptotic_denominator_plus,
            "denominator_minus": spec.asymptotic_denominator_minus,
        },
    });
    println!("{out}");

    if let Some(k) = args.eigenfunction {
        if k == 0 || k > spec.lambda_plus.len() {
            return Err(config_err(anyhow!(
                "--eigenfunction index {k} outside 1..={}",
                spec.lambda_plus.len()
            )));
        }
        let lambda = spec.lambda_plus[k - 1];
        let n_samples = 2000usize.max((lambda.abs().sqrt() * 400.0) as usize);
        let ef = sl::eigenfunction(&prob, lambda, n_samples).map_err(numeric_err)?;
        let mut csv = String::from("t,y,Dy\n");
        for i in 0..ef.ts.len() {
            csv.push_str(&format!("{},{},{}\n", ef.ts[i], ef.z[i], ef.dz[i]));
        }
        write_out(&args.out, &csv)?;
    }
    Ok(())
}

fn cmd_simulate(cmd: SimulateCmd) -> Result<(), CliError> {
    match cmd {
        SimulateCmd::CentralForce(args) => {
            let file: CentralForceFile = read_config(&args.config)?;
            let (cfg, ts) = file.build().map_err(config_err)?;
            let (traj, consts) =
                mechanics::central_force_solve(&cfg, &ts).map_err(numeric_err)?;
            let residual = mechanics::ellipse_invariant(&traj, &consts).map_err(numeric_err)?;
            write_out(&args.out, &traj.to_csv())?;
            let last = traj.states.last().unwrap();
            println!(
                "{}",
                json!({
                    "constants": consts,
                    "ellipse_residual": residual,
                    "samples": traj.len(),
                    "final": {"t": traj.times.last(), "x": last[0], "y": last[1]},
                })
            );
        }
        SimulateCmd::Gravity(args) => {
            let file: GravityFile = read_config(&args.config)?;
            let pm = file.pmap.build().map_err(config_err)?;
            if !(file.t_end > file.t_start) {
                return Err(config_err(anyhow!("t_end must exceed t_start")));
            }
            let ts = linspace(file.t_start, file.t_end, file.samples);
            let traj =
                mechanics::gravity_solve(&pm, file.x0, file.u0, file.y0, file.v0, file.g, &ts)
                    .map_err(numeric_err)?;
            write_out(&args.out, &traj.to_csv())?;
            let last = traj.states.last().unwrap();
            println!(
                "{}",
                json!({
                    "samples": traj.len(),
                    "final": {"t": traj.times.last(), "x": last[0], "y": last[1],
                              "Dx": last[2], "Dy": last[3]},
                    "tau_end": traj.taus.last(),
                })
            );
        }
        SimulateCmd::Drag(args) => {
            let file: DragFile = read_config(&args.config)?;
            let sigma = sigma_default().map_err(config_err)?;
            let cfg = file.build(sigma);
            cfg.validate().map_err(config_err)?;
            if !(file.t_end > 0.0) {
                return Err(config_err(anyhow!("t_end must be positive")));
            }
            let ts = linspace(file.t_end / file.samples as f64, file.t_end, file.samples);
            let traj = mechanics::drag_solve(&cfg, &ts).map_err(numeric_err)?;
            write_out(&args.out, &traj.to_csv())?;
            let v_last = traj.states.last().unwrap()[0];
            println!(
                "{}",
                json!({
                    "v_term": cfg.v_term(),
                    "matching_constant": cfg.c_const(),
                    "final_velocity": v_last,
                    "terminal_gap": (cfg.v_term() - v_last).abs(),
                    "samples": traj.len(),
                })
            );
        }
        SimulateCmd::Nbody(args) => {
            let file: NBodyFile = read_config(&args.config)?;
            let (sys, pm) = file.build().map_err(config_err)?;
            let run = mechanics::nbody_integrate(&sys, &pm, file.t_end, file.dt_tau)
                .map_err(numeric_err)?;
            write_out(&args.out, &run.traj_t.to_csv())?;
            let n = sys.masses.len();
            let positions = |traj: &mechanics::Trajectory| -> Vec<Vec<f64>> {
                traj.states.iter().map(|s| s[0..3 * n].to_vec()).collect()
            };
            let hausdorff = mechanics::hausdorff_distance(
                &positions(&run.traj_t),
                &positions(&run.traj_tau),
            );
            println!(
                "{}",
                json!({
                    "energy_initial": run.energy_initial,
                    "max_energy_drift": run.max_energy_drift,
                    "max_angular_momentum_drift": run.max_angular_momentum_drift,
                    "path_hausdorff_t_vs_tau": hausdorff,
                    "steps": run.traj_tau.len() - 1,
                    "tau_end": run.traj_tau.times.last(),
                    "t_end": run.traj_t.times.last(),
                })
            );
        }
    }
    Ok(())
}

fn cmd_units(args: UnitsArgs) -> Result<(), CliError> {
    let sigma = match args.sigma {
        Some(s) => s,
        None => sigma_default().map_err(config_err)?,
    };
    let q = match args.unit.as_str() {
        "m/s" | "m/sec" => units::convert_velocity(args.value, args.alpha, sigma),
        "m/s2" | "m/s^2" | "m/sec2" | "m/sec^2" => {
            units::convert_acceleration(args.value, args.alpha, sigma)
        }
        other => return Err(config_err(anyhow!("unsupported unit '{other}' (use m/s or m/s2)"))),
    }
    .map_err(config_err)?;
    println!(
        "{}",
        json!({
            "magnitude": q.magnitude,
            "unit_string": q.unit_string(),
            "alpha": q.alpha,
            "sigma": sigma,
        })
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Deriv(args) => cmd_deriv(args),
        Command::Sl(args) => cmd_sl(args),
        Command::Simulate(cmd) => cmd_simulate(cmd),
        Command::Units(args) => cmd_units(args),
        Command::Verify => {
            let failures = verify::run_all();
            if failures > 0 {
                Err(CliError::Numerical(anyhow!("{failures} fixture(s) failed")))
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(e)) => {
            println!("{}", json!({"error": format!("{e:#}")}));
            ExitCode::from(1)
        }
    }
}
