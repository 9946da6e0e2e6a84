use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use qmod_dyn::figures::{self, ConfigFile, FigureId, Overrides, Scenario, SweepConfig};
use qmod_dyn::{solver, ModelParams, Unit};

/// Non-Markovian dynamics, quantum witnesses and speed limits of a
/// frequency-modulated qubit in a leaky cavity.
#[derive(Parser)]
#[command(name = "qmod-dyn", version)]
struct Cli {
    /// Worker threads for panels and sweep points (default: all cores).
    #[arg(long, global = true, env = "QMOD_DYN_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the CSV (and optionally SVG) files of a figure, or of all figures.
    Figure(FigureArgs),
    /// Long-format sweep of the speed-limit metrics over γ/λ.
    Sweep(SweepArgs),
    /// Print δ = j_{n,1}·Ω.
    #[command(allow_negative_numbers = true)]
    TuneBessel {
        /// Bessel order n.
        n: u32,
        /// Modulation frequency Ω.
        #[arg(long)]
        omega: f64,
    },
    /// Dump C(t) and Ċ(t) on a uniform grid.
    Solve(SolveArgs),
}

#[derive(Args, Clone, Default)]
struct ModelArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    /// Units of the numbers above: gamma, lambda or absolute.
    #[arg(long)]
    units: Option<Unit>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct FigureArgs {
    /// Figure id, or `all`.
    id: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Largest τ of witness and τ-series panels.
    #[arg(long)]
    tau_max: Option<f64>,
    /// τ intervals of witness panels / grid points of τ-series panels.
    #[arg(long)]
    points: Option<usize>,
    /// Re-solve the second half-interval instead of reusing C(τ/2).
    #[arg(long)]
    exact_segments: bool,
    /// Also write an SVG plot per panel.
    #[arg(long)]
    svg: bool,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// TOML file with top-level overrides and `[panels.<name>]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// excited or superposition.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    axis_start: Option<f64>,
    #[arg(long)]
    axis_stop: Option<f64>,
    #[arg(long)]
    axis_step: Option<f64>,
    /// Driving times, comma separated.
    #[arg(long, value_delimiter = ',')]
    tau: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    /// TOML file with any of the keys above (snake_case, `taus` for τ).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10.0)]
    tau_max: f64,
    #[arg(long)]
    points: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ModelArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            gamma: self.gamma,
            lambda: self.lambda,
            delta: self.delta,
            omega: self.omega,
            theta: self.theta,
            phi: self.phi,
            units: self.units,
            ..Default::default()
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_figures(args: &FigureArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let flags = Overrides {
        tau_max: args.tau_max,
        points: args.points,
        exact_segments: args.exact_segments.then_some(true),
        ..args.model.overrides()
    };
    let ids: Vec<FigureId> = if args.id == "all" {
        FigureId::ALL.to_vec()
    } else {
        vec![args.id.parse()?]
    };
    for id in ids {
        let spec = figures::resolve_figure(id, &config, &flags)?;
        for path in figures::run_figure(&spec, &args.out_dir, args.svg)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            SweepConfig::parse(&text)?
        }
        None => SweepConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $arg:expr),* $(,)?) => {
            $(if let Some(v) = $arg.clone() { cfg.$field = v; })*
        };
    }
    set!(
        scenario <- args.scenario,
        lambda <- args.lambda,
        delta <- args.delta,
        omega <- args.omega,
        phi <- args.phi,
        axis_start <- args.axis_start,
        axis_stop <- args.axis_stop,
        axis_step <- args.axis_step,
        taus <- args.tau,
        eps <- args.eps,
    );
    emit(args.out.as_ref(), &figures::run_sweep(&cfg)?)
}

fn run_solve(args: &SolveArgs) -> Result<()> {
    let o = args.model.overrides();
    let units = o.units.unwrap_or(Unit::Absolute);
    let d = ModelParams::default();
    let mut p = ModelParams {
        gamma: o.gamma.unwrap_or(d.gamma),
        lambda: o.lambda.unwrap_or(d.lambda),
        delta: o.delta.unwrap_or(d.delta),
        omega_mod: o.omega.unwrap_or(d.omega_mod),
        theta: o.theta.unwrap_or(d.theta),
        phi: o.phi.unwrap_or(d.phi),
        unit: units,
    };
    match units {
        Unit::Gamma => {
            p.lambda *= p.gamma;
            p.delta *= p.gamma;
            p.omega_mod *= p.gamma;
        }
        Unit::Lambda => {
            p.gamma *= p.lambda;
            p.delta *= p.lambda;
            p.omega_mod *= p.lambda;
        }
        Unit::Absolute => {}
    }
    let points = args.points.unwrap_or_else(|| solver::default_points(args.tau_max));
    emit(args.out.as_ref(), &figures::trajectory_csv(&p, args.tau_max, points)?)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("Error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match &cli.command {
        Command::Figure(args) => run_figures(args),
        Command::Sweep(args) => run_sweep(args),
        Command::TuneBessel { n, omega } => {
            println!("{}", figures::fmt_f64(figures::tune_bessel(*n, *omega)?));
            Ok(())
        }
        Command::Solve(args) => run_solve(args),
    }
}
