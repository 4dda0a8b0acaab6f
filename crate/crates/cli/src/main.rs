use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use choreo_morse::run::{self, BranchChoice, PotentialKind, RunConfig, Status};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

/// Figure-eight three-body choreographies and the Morse indices of their action.
#[derive(Parser)]
#[command(name = "choreo-morse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve for the figure-eight and write its trajectory.
    Solve,
    /// Lowest eigenvalues of the second variation around a trajectory.
    Spectrum,
    /// Symmetry labels of the eigenvalue clusters and the Morse indices.
    Classify,
    /// Sweep the exponent of the homogeneous potential.
    #[command(name = "sweep-a")]
    SweepA,
    /// Follow the Lennard-Jones family in the period through its fold.
    #[command(name = "sweep-T")]
    SweepT,
    /// Action along one eigenfunction direction.
    #[command(name = "scan-1d")]
    Scan1d,
    /// Action over the plane of a degenerate eigenpair.
    #[command(name = "scan-2d")]
    Scan2d,
    /// Newton refinement of a nearby critical point along an eigenfunction.
    Refine,
    /// Summarize a file written by any other command.
    Report,
    /// Print the effective configuration.
    PrintConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum Potential {
    Homogeneous,
    Log,
    Lj,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchArg {
    Minus,
    Plus,
}

/// Overrides on top of the config file and the defaults.
#[derive(Args)]
struct Settings {
    /// JSON config file (a bare config, or any output that embeds one).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    potential: Option<Potential>,
    /// Homogeneous exponent.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Period of a Lennard-Jones solve.
    #[arg(long = "T", global = true)]
    period: Option<f64>,
    #[arg(long, global = true)]
    branch: Option<BranchArg>,
    #[arg(long = "xmax", alias = "x-max", global = true)]
    x_max: Option<f64>,
    /// Eigenproblem basis functions per coordinate (first try).
    #[arg(long = "M", global = true)]
    big_m: Option<usize>,
    /// Largest eigenproblem truncation.
    #[arg(long = "M-max", global = true)]
    big_m_max: Option<usize>,
    /// Quadrature points (multiple of 3).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of eigenvalues reported.
    #[arg(long = "m", global = true)]
    eigenpairs: Option<usize>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    #[arg(long, global = true)]
    max_basis: Option<usize>,
    /// Worker threads.
    #[arg(long, env = "CHOREO_MORSE_THREADS", global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    partner: Option<PathBuf>,
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Store eigenvectors in spectrum files.
    #[arg(long, global = true)]
    vectors: bool,
    #[arg(long, global = true)]
    from: Option<f64>,
    #[arg(long, global = true)]
    to: Option<f64>,
    #[arg(long, global = true)]
    step: Option<f64>,
    #[arg(long = "T-start", global = true)]
    t_start: Option<f64>,
    #[arg(long = "T-stop", global = true)]
    t_stop: Option<f64>,
    /// Skip locating eigenvalue zero crossings after a sweep.
    #[arg(long, global = true)]
    no_thresholds: bool,
    /// Cluster label of the scan or refinement direction.
    #[arg(long, global = true)]
    label: Option<String>,
    #[arg(long, allow_hyphen_values = true, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, allow_hyphen_values = true, global = true)]
    h_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true, global = true)]
    h_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true, global = true)]
    amplitude: Option<f64>,
    /// Continue a sweep from its manifest.
    #[arg(long, global = true)]
    resume: bool,
    /// With `report` on a manifest: recompute and compare every record's eigenvalues.
    #[arg(long, global = true)]
    replay: bool,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Settings {
    fn apply(self, c: &mut RunConfig) {
        set(
            &mut c.potential,
            self.potential.map(|p| match p {
                Potential::Homogeneous => PotentialKind::Homogeneous,
                Potential::Log => PotentialKind::Log,
                Potential::Lj => PotentialKind::Lj,
            }),
        );
        set(&mut c.a, self.a);
        if self.period.is_some() {
            c.period = self.period;
        }
        set(
            &mut c.branch,
            self.branch.map(|b| match b {
                BranchArg::Minus => BranchChoice::Minus,
                BranchArg::Plus => BranchChoice::Plus,
            }),
        );
        set(&mut c.x_max, self.x_max);
        set(&mut c.m, self.big_m);
        set(&mut c.max_m, self.big_m_max);
        set(&mut c.n, self.n);
        set(&mut c.eigenpairs, self.eigenpairs);
        set(&mut c.tolerance, self.tolerance);
        set(&mut c.max_iterations, self.max_iterations);
        set(&mut c.max_basis, self.max_basis);
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        set(&mut c.seed, self.seed);
        if self.input.is_some() {
            c.input = self.input;
        }
        if self.partner.is_some() {
            c.partner = self.partner;
        }
        if self.output.is_some() {
            c.output = self.output;
        }
        c.vectors |= self.vectors;
        set(&mut c.from, self.from);
        set(&mut c.to, self.to);
        set(&mut c.step, self.step);
        set(&mut c.t_start, self.t_start);
        set(&mut c.t_stop, self.t_stop);
        if self.no_thresholds {
            c.thresholds = false;
        }
        if self.label.is_some() {
            c.label = self.label;
        }
        if self.theta.is_some() {
            c.theta = self.theta;
        }
        set(&mut c.radius, self.radius);
        set(&mut c.points, self.points);
        set(&mut c.h_min, self.h_min);
        set(&mut c.h_max, self.h_max);
        set(&mut c.amplitude, self.amplitude);
        c.resume |= self.resume;
        c.replay |= self.replay;
    }
}

/// Defaults, then the config file, then the command line.
fn effective_config(mut settings: Settings) -> anyhow::Result<RunConfig> {
    let mut config = match settings.config.take() {
        Some(path) => read_config(&path)?,
        None => RunConfig::default(),
    };
    settings.apply(&mut config);
    config.validate()?;
    Ok(config)
}

fn read_config(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    // outputs embed their config next to a format version
    if value.get("format_version").is_some() {
        match value.get_mut("config") {
            Some(inner) => value = inner.take(),
            None => bail!("{} has no embedded config", path.display()),
        }
    }
    serde_json::from_value(value).with_context(|| format!("invalid config in {}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match effective_config(cli.settings) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Some(threads) = config.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Solve => run::solve(&config),
        Command::Spectrum => run::spectrum(&config),
        Command::Classify => run::classify(&config),
        Command::SweepA => run::sweep_a(&config),
        Command::SweepT => run::sweep_t(&config),
        Command::Scan1d => run::scan_1d(&config),
        Command::Scan2d => run::scan_2d(&config),
        Command::Refine => run::refine(&config),
        Command::Report => run::report(&config),
        Command::PrintConfig => {
            let doc = serde_json::json!({
                "format_version": choreo_morse::io::FORMAT_VERSION,
                "config": config.to_value(),
            });
            match serde_json::to_string_pretty(&doc) {
                Ok(text) => {
                    println!("{text}");
                    Ok(Status::Complete)
                }
                Err(e) => Err(e.into()),
            }
        }
    };
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(run::exit_code(&result) as u8)
}
