//! Command-line front end: `simulate`, `riemann`, `converge` and `check`.
//!
//! Exit codes: 0 on success, 1 on a numerical failure, 2 on a usage or
//! input error (bad flags, unreadable or invalid config).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nsk_core::harness::ConditionH;
use nsk_core::io::{
    fmt_f64, load_config, output_dir, read_trajectory_dir, to_json_string, write_convergence_csv, write_json,
    write_trajectory_dir,
};
use nsk_core::{
    convergence_study, initial_data_condition_h, solve_riemann, uniform_bounds, BoundsReport, Error, FluidParams,
    Primitive, Result,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "nsk",
    version,
    about = "Navier-Stokes-Korteweg simulations and their inviscid limit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one case and write its trajectory directory.
    Simulate(CaseArgs),
    /// Sample the exact isentropic Riemann solution.
    Riemann(RiemannArgs),
    /// Run an epsilon sweep against the exact Riemann solution.
    Converge(CaseArgs),
    /// Bounds and entropy residual report for a trajectory directory.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct CaseArgs {
    /// `key = value` case file.
    config: PathBuf,
    /// Output directory (overridden by NSK_OUTPUT_DIR).
    #[arg(long, default_value = "nsk-output")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RiemannArgs {
    #[arg(long)]
    rho_l: f64,
    #[arg(long, allow_hyphen_values = true)]
    u_l: f64,
    #[arg(long)]
    rho_r: f64,
    #[arg(long, allow_hyphen_values = true)]
    u_r: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    /// Pressure coefficient, or `kinetic`.
    #[arg(long, default_value = "kinetic")]
    a: String,
    /// Sampling time; `xi = x / t`.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    x_max: f64,
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Directory written by `simulate`.
    trajectory: PathBuf,
    /// Spatial window `a,b`; defaults to the domain minus 10 cells per side.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Report file name, placed in the output directory when NSK_OUTPUT_DIR
    /// is set; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// Parses `argv` (program name first), dispatches, and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Riemann(a) => riemann(&a),
        Command::Converge(a) => converge(&a),
        Command::Check(a) => check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn params_json(p: &FluidParams) -> serde_json::Value {
    json!({ "a": p.a(), "gamma": p.gamma(), "epsilon": p.epsilon() })
}

fn simulate(args: &CaseArgs) -> Result<i32> {
    let case = load_config(&args.config)?;
    let dir = output_dir(&args.out);
    let p = case.params(case.epsilon)?;
    let grid = case.grid(case.epsilon)?;
    let s0 = case.initial_state(&grid, &p)?;
    let condition: Option<ConditionH> = if case.epsilon > 0.0 {
        Some(initial_data_condition_h(&s0, &case.far, &p, &grid, case.caps))
    } else {
        None
    };
    let start = Instant::now();
    let traj = nsk_core::run(&s0, &case.far, &p, &grid, &case.scheme())?;
    let wall = start.elapsed().as_secs_f64();
    write_trajectory_dir(&dir, &traj)?;

    let (bounds, bounds_error): (Option<BoundsReport>, Option<String>) = match uniform_bounds(&traj, case.window()) {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let violations = bounds.as_ref().map(|b| {
        json!({
            "invariant_region": b.invariant.max_violation,
            "energy_excess": b.energy,
            "entropy_residuals": b.entropy_residuals.iter().filter(|(_, r)| !r.pass).map(|(k, _)| k).collect::<Vec<_>>(),
        })
    });
    let summary = json!({
        "params": params_json(&p),
        "grid": { "x_min": grid.x_min(), "x_max": grid.x_max(), "n": grid.n(), "h": grid.h() },
        "config": case,
        "wall_time_seconds": wall,
        "steps": traj.series.len(),
        "initial_condition": condition,
        "bounds": bounds,
        "bounds_error": bounds_error,
        "violations": violations,
        "contamination": traj.contamination,
    });
    write_json(&dir.join("run.json"), &summary)?;
    log::info!("wrote {} snapshots to {}", traj.snapshots.len(), dir.display());
    Ok(if traj.contamination.is_some() {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    })
}

fn riemann(args: &RiemannArgs) -> Result<i32> {
    let a = if args.a.trim() == "kinetic" {
        None
    } else {
        Some(
            args.a
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("a = {}: expected a number or kinetic", args.a)))?,
        )
    };
    let p = match a {
        Some(a) => FluidParams::new(a, args.gamma, 0.0)?,
        None => FluidParams::kinetic(args.gamma, 0.0)?,
    };
    let valid = args.rho_l > 0.0 && args.rho_r > 0.0 && args.t > 0.0 && args.samples >= 2 && args.x_max > args.x_min;
    if !valid {
        return Err(Error::Config(
            "need positive densities, t > 0, x_min < x_max and at least 2 samples".into(),
        ));
    }
    let sol = solve_riemann(
        Primitive::new(args.rho_l, args.u_l),
        Primitive::new(args.rho_r, args.u_r),
        &p,
    )?;
    let header = json!({
        "params": { "a": p.a(), "gamma": p.gamma() },
        "left": sol.left,
        "right": sol.right,
        "middle": sol.middle,
        "wave1": sol.wave1,
        "wave2": sol.wave2,
        "t": args.t,
    });
    let mut text = format!("# {}\n", serde_json::to_string(&header)?);
    text.push_str("xi,rho,u\n");
    let step = (args.x_max - args.x_min) / (args.samples - 1) as f64;
    for k in 0..args.samples {
        let xi = (args.x_min + step * k as f64) / args.t;
        let s = sol.sample(xi);
        text.push_str(&format!("{},{},{}\n", fmt_f64(xi), fmt_f64(s.rho), fmt_f64(s.u)));
    }
    match &args.out {
        Some(path) => {
            let path = resolve_out(path);
            fs::write(path, text)?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

/// Places a bare file name inside NSK_OUTPUT_DIR when that is set.
fn resolve_out(path: &Path) -> PathBuf {
    let dir = output_dir(Path::new(""));
    if dir.as_os_str().is_empty() {
        path.to_path_buf()
    } else {
        let _ = fs::create_dir_all(&dir);
        dir.join(path.file_name().unwrap_or(path.as_os_str()))
    }
}

fn converge(args: &CaseArgs) -> Result<i32> {
    let case = load_config(&args.config)?;
    if case.epsilons.is_empty() {
        return Err(Error::Config("converge needs an `epsilons` list".into()));
    }
    let dir = output_dir(&args.out);
    fs::create_dir_all(&dir)?;
    let table = convergence_study(&case, &case.epsilons)?;
    let f = fs::File::create(dir.join("convergence.csv"))?;
    write_convergence_csv(std::io::BufWriter::new(f), &table)?;
    write_json(&dir.join("convergence.json"), &table)?;
    for (i, row) in table.rows.iter().enumerate() {
        let report = json!({
            "params": params_json(&case.params(row.epsilon)?),
            "grid": { "x_min": case.x_min, "x_max": case.x_max, "n": row.n },
            "wall_time_seconds": row.runtime_seconds,
            "l1_rho": row.l1_rho,
            "l1_mom": row.l1_mom,
            "bounds": row.bounds,
            "error": row.error,
        });
        write_json(&dir.join(format!("run_{i:02}.json")), &report)?;
    }
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", table.rows.len());
        return Ok(EXIT_NUMERICAL);
    }
    if !table.strictly_decreasing() {
        log::warn!("L1 distance is not strictly decreasing in epsilon");
    }
    Ok(EXIT_OK)
}

fn check(args: &CheckArgs) -> Result<i32> {
    if !args.trajectory.join("trajectory.json").is_file() {
        return Err(Error::Config(format!(
            "{}: not a trajectory directory",
            args.trajectory.display()
        )));
    }
    let traj = read_trajectory_dir(&args.trajectory)?;
    let window = args.window.unwrap_or_else(|| {
        let pad = 10.0 * traj.grid.h();
        (traj.grid.x_min() + pad, traj.grid.x_max() - pad)
    });
    let bounds = uniform_bounds(&traj, window)?;
    let pass = bounds.entropy_residuals.iter().all(|(_, r)| r.pass);
    let report = json!({
        "params": params_json(&traj.params),
        "grid": { "x_min": traj.grid.x_min(), "x_max": traj.grid.x_max(), "n": traj.grid.n() },
        "snapshots": traj.snapshots.len(),
        "bounds": bounds,
        "entropy_pass": pass,
    });
    let text = to_json_string(&report)? + "\n";
    match &args.out {
        Some(path) => fs::write(resolve_out(path), text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}
