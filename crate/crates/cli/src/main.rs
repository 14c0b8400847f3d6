//! Command-line front end: trade-off tables, scheme construction and
//! export, Monte Carlo simulation, and the verification suite.
//!
//! Exit codes: 0 on success, 1 when a simulation or verification fails,
//! 2 on usage errors (clap follows the same convention).

mod util;

use anyhow::{anyhow, Context};
use clap::{ArgGroup, Args, Parser, Subcommand};
use onebit_put::{
    build_optimal_sr_scheme, mc_mse, put_ldp, put_ml, set_thread_count, verify, zeta, Mode,
    PrivacyConstraint, SchemeDescriptor, SimConfig, ThetaSpec,
};
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use util::{fmt_sig, parse_grid, parse_scalar, parse_theta, parse_v_list};

#[derive(Parser)]
#[command(
    name = "onebit-put",
    version,
    about = "Optimal one-bit private distribution estimation: tables, schemes, simulation, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print closed-form trade-off values as CSV on standard output
    Table(TableArgs),
    /// Construct a scheme and simulate it with seeded Monte Carlo
    Simulate(SimulateArgs),
    /// Construct a scheme and export it as JSON plus per-u CSV matrices
    Scheme(SchemeArgs),
    /// Run the verification suite and report PASS/FAIL per check
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(group = ArgGroup::new("constraint").required(true).args(["ldp", "ml"]))]
struct TableArgs {
    /// Local differential privacy rows
    #[arg(long)]
    ldp: bool,
    /// Maximal leakage rows
    #[arg(long)]
    ml: bool,
    /// Comma-separated alphabet sizes, e.g. 2,3,4
    #[arg(long)]
    v: String,
    /// eps sweep: a value or start:stop:step (start inclusive, stop within 1e-12)
    #[arg(long)]
    eps: Option<String>,
    /// delta sweep, same syntax
    #[arg(long, default_value = "0")]
    delta: String,
    /// gamma sweep, same syntax; the literal log2 is accepted
    #[arg(long)]
    gamma: Option<String>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("constraint").required(true).args(["ldp", "ml"]))]
struct SimulateArgs {
    #[arg(long)]
    ldp: bool,
    #[arg(long)]
    ml: bool,
    #[arg(long)]
    v: usize,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value = "0")]
    delta: String,
    #[arg(long)]
    gamma: Option<String>,
    /// Data distribution: uniform, vertex:K (1-based) or an explicit comma list
    #[arg(long, default_value = "uniform")]
    theta: String,
    /// Clients per trial
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sr (shared randomness) or plain (round-robin assignment)
    #[arg(long, default_value = "sr")]
    mode: String,
    /// Project estimates onto the simplex before measuring the error
    #[arg(long)]
    project: bool,
    /// Write the JSON report here (otherwise it goes to standard output)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one CSV row per trial: trial,mse,n_mse
    #[arg(long)]
    per_trial_csv: Option<PathBuf>,
    /// Cap the worker pool (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("constraint").required(true).args(["ldp", "ml"]))]
struct SchemeArgs {
    #[arg(long)]
    ldp: bool,
    #[arg(long)]
    ml: bool,
    #[arg(long)]
    v: usize,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value = "0")]
    delta: String,
    #[arg(long)]
    gamma: Option<String>,
    /// Directory for scheme.json and mechanism_u<k>.csv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Only reproduce the worked four-symbol design example
    #[arg(long)]
    example1: bool,
    /// Verification grid: full or small
    #[arg(long, default_value = "full")]
    grid: String,
    #[arg(long)]
    threads: Option<usize>,
}

/// An error carrying its process exit code.
struct Failure {
    code: i32,
    err: anyhow::Error,
}

fn usage(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn runtime(err: anyhow::Error) -> Failure {
    Failure { code: 1, err }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Table(args) => cmd_table(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scheme(args) => cmd_scheme(args),
        Command::Verify(args) => cmd_verify(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {:#}", failure.err);
        std::process::exit(failure.code);
    }
}

fn parse_constraint(
    ldp: bool,
    eps: &Option<String>,
    delta: &str,
    gamma: &Option<String>,
) -> Result<PrivacyConstraint, Failure> {
    if ldp {
        let eps = eps
            .as_ref()
            .ok_or_else(|| usage(anyhow!("--ldp requires --eps")))?;
        let eps = parse_scalar(eps).map_err(usage)?;
        let delta = parse_scalar(delta).map_err(usage)?;
        PrivacyConstraint::ldp(eps, delta).map_err(|e| usage(e.into()))
    } else {
        let gamma = gamma
            .as_ref()
            .ok_or_else(|| usage(anyhow!("--ml requires --gamma")))?;
        let gamma = parse_scalar(gamma).map_err(usage)?;
        PrivacyConstraint::ml(gamma).map_err(|e| usage(e.into()))
    }
}

fn cmd_table(args: TableArgs) -> Result<(), Failure> {
    let v_list = parse_v_list(&args.v).map_err(usage)?;
    let mut rows = Vec::new();
    if args.ldp {
        let eps_grid = parse_grid(
            args.eps
                .as_ref()
                .ok_or_else(|| usage(anyhow!("--ldp requires --eps")))?,
        )
        .map_err(usage)?;
        let delta_grid = parse_grid(&args.delta).map_err(usage)?;
        for &v in &v_list {
            for &eps in &eps_grid {
                for &delta in &delta_grid {
                    let z = zeta(v, delta).map_err(|e| usage(e.into()))?;
                    let put = put_ldp(v, eps, delta).map_err(|e| usage(e.into()))?;
                    rows.push(format!(
                        "{v},{},{},,{},{}",
                        fmt_sig(eps),
                        fmt_sig(delta),
                        fmt_sig(z),
                        fmt_sig(put)
                    ));
                }
            }
        }
    } else {
        let gamma_grid = parse_grid(
            args.gamma
                .as_ref()
                .ok_or_else(|| usage(anyhow!("--ml requires --gamma")))?,
        )
        .map_err(usage)?;
        for &v in &v_list {
            for &gamma in &gamma_grid {
                let put = put_ml(v, gamma).map_err(|e| usage(e.into()))?;
                rows.push(format!("{v},,,{},,{}", fmt_sig(gamma), fmt_sig(put)));
            }
        }
    }
    let mut out = String::from("v,eps,delta,gamma,zeta,put\n");
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct SimulateEcho {
    scheme: SchemeDescriptor,
    theta: ThetaSpec,
    n: usize,
    trials: usize,
    seed: u64,
    mode: Mode,
    project: bool,
}

#[derive(Serialize)]
struct SimulateOutput {
    config: SimulateEcho,
    mean_n_mse: f64,
    stderr_n_mse: f64,
    put_reference: f64,
    ratio: f64,
    elapsed_s: f64,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    if let Some(threads) = args.threads {
        set_thread_count(threads);
    }
    let constraint = parse_constraint(args.ldp, &args.eps, &args.delta, &args.gamma)?;
    let theta = parse_theta(&args.theta).map_err(usage)?;
    let mode = match args.mode.as_str() {
        "sr" => Mode::Sr,
        "plain" => Mode::Plain,
        other => return Err(usage(anyhow!("unknown mode '{other}' (use sr or plain)"))),
    };
    if args.trials < 2 {
        return Err(usage(anyhow!("--trials must be at least 2")));
    }

    let scheme = build_optimal_sr_scheme(&constraint, args.v)
        .with_context(|| format!("building the optimal scheme for {constraint}, v={}", args.v))
        .map_err(runtime)?;
    let mut cfg = SimConfig::new(theta, args.n, args.trials, args.seed, mode);
    cfg.project = args.project;
    let report = mc_mse(&scheme, &cfg).map_err(|e| runtime(e.into()))?;

    let put_reference = match constraint {
        PrivacyConstraint::Ldp { eps, delta } => put_ldp(args.v, eps, delta),
        PrivacyConstraint::Ml { gamma } => put_ml(args.v, gamma),
    }
    .map_err(|e| runtime(e.into()))?;

    let output = SimulateOutput {
        config: SimulateEcho {
            scheme: scheme.descriptor(),
            theta: report.config.theta.clone(),
            n: args.n,
            trials: args.trials,
            seed: args.seed,
            mode,
            project: args.project,
        },
        mean_n_mse: report.mean_n_mse,
        stderr_n_mse: report.stderr_n_mse,
        put_reference,
        ratio: report.mean_n_mse / put_reference,
        elapsed_s: report.elapsed_s,
    };
    let json = serde_json::to_string_pretty(&output).expect("report serializes");

    if let Some(path) = &args.per_trial_csv {
        let mut csv = String::from("trial,mse,n_mse\n");
        for (i, mse) in report.per_trial_mse.iter().enumerate() {
            csv.push_str(&format!(
                "{i},{},{}\n",
                fmt_sig(*mse),
                fmt_sig(args.n as f64 * mse)
            ));
        }
        std::fs::write(path, csv)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(runtime)?;
    }

    let summary = format!(
        "mean n*MSE = {}  stderr = {}  PUT = {}  ratio = {}",
        fmt_sig(output.mean_n_mse),
        fmt_sig(output.stderr_n_mse),
        fmt_sig(output.put_reference),
        fmt_sig(output.ratio)
    );
    match &args.out {
        Some(path) => {
            std::fs::write(path, format!("{json}\n"))
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime)?;
            println!("{summary}");
        }
        None => {
            println!("{json}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn cmd_scheme(args: SchemeArgs) -> Result<(), Failure> {
    let constraint = parse_constraint(args.ldp, &args.eps, &args.delta, &args.gamma)?;
    let scheme = build_optimal_sr_scheme(&constraint, args.v)
        .with_context(|| format!("building the optimal scheme for {constraint}, v={}", args.v))
        .map_err(runtime)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(runtime)?;

    let descriptor = scheme.descriptor();
    let json = serde_json::to_string_pretty(&descriptor).expect("descriptor serializes");
    std::fs::write(args.out_dir.join("scheme.json"), format!("{json}\n"))
        .context("writing scheme.json")
        .map_err(runtime)?;

    for (k, mechanism) in scheme.per_u().iter().enumerate() {
        let mut csv = String::new();
        for row in mechanism.ratio_rows() {
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        let name = format!("mechanism_u{}.csv", k + 1);
        std::fs::write(args.out_dir.join(&name), csv)
            .with_context(|| format!("writing {name}"))
            .map_err(runtime)?;
    }

    if let Some(design) = scheme.design() {
        std::fs::write(args.out_dir.join("design.txt"), design.to_edge_list_string())
            .context("writing design.txt")
            .map_err(runtime)?;
    }

    println!(
        "wrote scheme ({:?}, v={}, C={}) to {}",
        descriptor.case,
        descriptor.v,
        descriptor.u_count,
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    if let Some(threads) = args.threads {
        set_thread_count(threads);
    }
    let grid = match args.grid.as_str() {
        "full" => verify::Grid::full(),
        "small" => verify::Grid::small(),
        other => return Err(usage(anyhow!("unknown grid '{other}' (use full or small)"))),
    };
    let reports = if args.example1 {
        vec![verify::example_reproduction()]
    } else {
        verify::run_all(&grid)
    };
    let mut stdout = std::io::stdout().lock();
    let mut failures = 0;
    for report in &reports {
        writeln!(stdout, "{}", report.line()).expect("stdout");
        if !report.passed {
            failures += 1;
        }
    }
    drop(stdout);
    if failures > 0 {
        return Err(runtime(anyhow!(
            "{failures} of {} checks failed",
            reports.len()
        )));
    }
    println!("all {} checks passed", reports.len());
    Ok(())
}
