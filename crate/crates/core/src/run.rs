//! Run configuration and the drivers behind the command-line subcommands. Each
//! driver reads its inputs, runs one computation and writes its artifacts; every
//! file it writes carries the format version and the effective configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{analyze, Analysis, SpectrumOptions};
use crate::continuation::{self, AlphaOptions, Branch, BranchRecord, ContinuationOptions, SweepResult};
use crate::error::{Error, Result};
use crate::hessian::DEFAULT_GRID;
use crate::io::{self, sig17, ClassificationFile, Manifest, SpectrumFile, FORMAT_VERSION};
use crate::landscape::{self, MixedDirection};
use crate::potential::PotentialSpec;
use crate::solver::{find_solution, Constraint, SolverOptions, Target};
use crate::symmetry::Cluster;
use crate::trajectory::PeriodicTrajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    Homogeneous,
    Log,
    #[serde(alias = "lennard_jones")]
    Lj,
}

/// Branch of the Lennard-Jones family to solve on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchChoice {
    #[default]
    Minus,
    Plus,
}

/// Every setting any command reads. Missing fields take their defaults, so a
/// config file only lists what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialKind,
    /// Homogeneous exponent; `0` selects the log potential.
    pub a: f64,
    /// Period of a Lennard-Jones solve.
    #[serde(rename = "T")]
    pub period: Option<f64>,
    pub branch: BranchChoice,
    pub x_max: f64,
    /// Basis functions per coordinate of the eigenproblem (first try).
    #[serde(rename = "M")]
    pub m: usize,
    /// Largest truncation the adaptive eigenproblem may grow to.
    #[serde(rename = "M_max")]
    pub max_m: usize,
    /// Quadrature points.
    pub n: usize,
    /// Eigenpairs reported.
    #[serde(rename = "m")]
    pub eigenpairs: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest trajectory basis the solver may grow to.
    pub max_basis: usize,
    pub threads: Option<usize>,
    /// Seed of the iterative eigensolver.
    pub seed: u64,
    pub input: Option<PathBuf>,
    /// A second trajectory, e.g. the other branch at the same period.
    pub partner: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Store eigenvectors in spectrum files.
    pub vectors: bool,
    /// Exponent grid of `sweep-a`.
    pub from: f64,
    pub to: f64,
    pub step: f64,
    /// First period on the lower branch and last period on the upper branch of `sweep-T`.
    pub t_start: f64,
    pub t_stop: f64,
    /// Locate eigenvalue zero crossings after a sweep.
    pub thresholds: bool,
    /// Cluster label giving the direction of scans and refinements.
    pub label: Option<String>,
    /// Mixing angle inside a degenerate pair.
    pub theta: Option<f64>,
    /// Half-width and points per axis of the 2-D scan grid.
    pub radius: f64,
    pub points: usize,
    /// Amplitude range of the 1-D scan.
    pub h_min: f64,
    pub h_max: f64,
    /// Offset amplitude of the refinement seed.
    pub amplitude: f64,
    pub resume: bool,
    /// `report`: recompute the eigenvalues of every stored record and compare.
    pub replay: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spectrum = SpectrumOptions::default();
        let solver = SolverOptions::default();
        let alpha = AlphaOptions::default();
        RunConfig {
            potential: PotentialKind::Homogeneous,
            a: 1.0,
            period: None,
            branch: BranchChoice::Minus,
            x_max: 2.0,
            m: spectrum.m,
            max_m: spectrum.max_m,
            n: DEFAULT_GRID,
            eigenpairs: 24,
            tolerance: solver.tolerance,
            max_iterations: solver.max_iterations,
            max_basis: solver.max_basis_len,
            threads: None,
            seed: spectrum.seed,
            input: None,
            partner: None,
            output: None,
            vectors: false,
            from: 0.0,
            to: 7.0,
            step: 0.05,
            t_start: alpha.t_start,
            t_stop: alpha.t_stop,
            thresholds: true,
            label: None,
            theta: None,
            radius: 0.37,
            points: 41,
            h_min: -0.02,
            h_max: 0.08,
            amplitude: 0.284,
            resume: false,
            replay: false,
        }
    }
}

fn check(ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(message.to_string()))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        check(self.n.is_multiple_of(3) && self.n > 0, "n must be a positive multiple of 3")?;
        check(self.m >= 21, "M must be at least 21")?;
        check(self.max_m >= self.m, "M_max must not be below M")?;
        check(self.eigenpairs > 0, "m must be positive")?;
        check(positive(self.tolerance), "tolerance must be positive")?;
        check(self.max_iterations > 0, "max_iterations must be positive")?;
        check(self.max_basis >= 3, "max_basis must be at least 3")?;
        check(self.a.is_finite() && self.a >= 0.0, "a must be >= 0")?;
        check(positive(self.x_max), "x_max must be positive")?;
        check(self.period.is_none_or(positive), "T must be positive")?;
        check(self.threads != Some(0), "threads must be positive")?;
        check(positive(self.step), "step must be positive")?;
        check(
            (0.0..=7.0).contains(&self.from) && (0.0..=7.0).contains(&self.to) && self.from <= self.to,
            "sweep range must satisfy 0 <= from <= to <= 7",
        )?;
        check(positive(self.t_start) && positive(self.t_stop), "t_start and t_stop must be positive")?;
        check(positive(self.radius), "radius must be positive")?;
        check(self.points >= 2, "points must be at least 2")?;
        check(
            self.h_min.is_finite() && self.h_max.is_finite() && self.h_min < self.h_max,
            "h_min must be below h_max",
        )?;
        check(self.amplitude.is_finite(), "amplitude must be finite")?;
        check(self.theta.is_none_or(f64::is_finite), "theta must be finite")?;
        Ok(())
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        match self.potential {
            PotentialKind::Homogeneous => PotentialSpec::homogeneous(self.a),
            PotentialKind::Log => Ok(PotentialSpec::Log),
            PotentialKind::Lj => Ok(PotentialSpec::LennardJones),
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            n: self.n,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            max_basis_len: self.max_basis,
            ..SolverOptions::default()
        }
    }

    pub fn spectrum(&self) -> SpectrumOptions {
        SpectrumOptions {
            m: self.m,
            max_m: self.max_m,
            n: self.n,
            count: self.eigenpairs,
            seed: self.seed,
            ..SpectrumOptions::default()
        }
    }

    pub fn continuation(&self) -> ContinuationOptions {
        let defaults = ContinuationOptions::default();
        ContinuationOptions {
            solver: SolverOptions {
                adapt_basis: defaults.solver.adapt_basis,
                newton_first: defaults.solver.newton_first,
                ..self.solver()
            },
            spectrum: self.spectrum(),
            find_thresholds: self.thresholds,
            ..defaults
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    fn output_or(&self, default: &str) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn input(&self, command: &str) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Config(format!("{command} needs an input file")))
    }

    /// The settings that determine a sweep's results, for comparing against a
    /// manifest before resuming it.
    fn fingerprint(&self) -> Value {
        let mut c = self.clone();
        c.resume = false;
        c.threads = None;
        c.to_value()
    }
}

/// How a command finished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    /// Some sweep points failed; the manifest lists them.
    Partial,
}

/// Process exit code: 0 success, 1 usage or configuration error, 2 numerical
/// failure, 3 partial sweep.
pub fn exit_code(result: &Result<Status>) -> i32 {
    match result {
        Ok(Status::Complete) => 0,
        Ok(Status::Partial) => 3,
        Err(
            Error::Convergence { .. }
            | Error::Continuation(_)
            | Error::Collision { .. }
            | Error::Numeric(_)
            | Error::Ambiguity { .. },
        ) => 2,
        Err(_) => 1,
    }
}

/// A sweep record as stored next to its manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordFile<R> {
    pub format_version: u32,
    pub config: Value,
    pub record: R,
}

/// CSV cell with 17 significant digits.
fn cell(x: f64) -> String {
    if x.is_finite() {
        sig17::format(x)
    } else {
        "nan".to_string()
    }
}

fn provenance(command: &str, config: &RunConfig, extra: Value) -> Value {
    json!({ "command": command, "config": config.to_value(), "result": extra })
}

fn read_input(config: &RunConfig, command: &str) -> Result<PeriodicTrajectory> {
    Ok(io::read_trajectory(config.input(command)?)?.0)
}

/// `solve`: the figure-eight for the configured potential.
pub fn solve(config: &RunConfig) -> Result<Status> {
    let solver = config.solver();
    let guess = match &config.input {
        Some(path) => Some(io::read_trajectory(path)?.0),
        None => None,
    };
    let traj = match config.potential {
        PotentialKind::Lj => {
            let t = config
                .period
                .ok_or_else(|| Error::Config("a Lennard-Jones solve needs T".into()))?;
            solve_lj(config, t, guess.as_ref())?
        }
        _ => {
            let a = config.spec()?.exponent().unwrap_or(config.a);
            continuation::homogeneous_eight(a, config.x_max, guess.as_ref(), &solver)?
        }
    };
    let eval = traj.action(config.n)?;
    let extra = json!({
        "action": eval.action,
        "grad_norm": eval.grad_norm,
        "x_max": traj.x_max(),
        "basis_len": traj.basis_len(),
    });
    let out = config.output_or("trajectory.json");
    io::write_trajectory(&out, &traj, Some(provenance("solve", config, extra)))?;
    println!(
        "T = {:.9}  S = {:.9}  x_max = {:.6}  -> {}",
        traj.period(),
        eval.action,
        traj.x_max(),
        out.display()
    );
    Ok(Status::Complete)
}

fn solve_lj(config: &RunConfig, t: f64, guess: Option<&PeriodicTrajectory>) -> Result<PeriodicTrajectory> {
    let copts = config.continuation();
    if let Some(g) = guess {
        let seed = g.with_spec(PotentialSpec::LennardJones);
        return Ok(find_solution(PotentialSpec::LennardJones, Constraint::FigureEight, Target::Period(t), &seed, &copts.solver)?.0);
    }
    if config.branch == BranchChoice::Minus && t >= config.t_start {
        return continuation::alpha_minus_seed(t, AlphaOptions::default().seed_exponent, &config.solver());
    }
    // below the seed period, follow the family from the seed through the fold
    let options = AlphaOptions {
        continuation: ContinuationOptions {
            find_thresholds: false,
            ..copts.clone()
        },
        t_start: config.t_start,
        t_stop: match config.branch {
            BranchChoice::Minus => 0.0,
            BranchChoice::Plus => t + 0.5,
        },
        ..AlphaOptions::default()
    };
    let family = continuation::follow_alpha_branch(&options)?;
    if let Some(fold) = &family.fold {
        if t < fold.t_min {
            return Err(Error::Continuation(format!(
                "the family has no figure-eight below its fold period {:.6}",
                fold.t_min
            )));
        }
    }
    let branch = match config.branch {
        BranchChoice::Minus => Branch::AlphaMinus,
        BranchChoice::Plus => Branch::AlphaPlus,
    };
    continuation::solve_on_branch(&family, branch, t, &copts.solver)
}

fn spectrum_file(config: &RunConfig, input: &Path, analysis: &Analysis) -> SpectrumFile {
    let pairs = &analysis.spectrum.pairs[..config.eigenpairs.min(analysis.spectrum.pairs.len())];
    SpectrumFile {
        format_version: FORMAT_VERSION,
        trajectory_ref: input.display().to_string(),
        m: analysis.m,
        n: analysis.n,
        eigenvalues: pairs.iter().map(|p| p.lambda).collect(),
        eigenvectors: config.vectors.then(|| pairs.iter().map(|p| p.v.clone()).collect()),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        config: config.to_value(),
    }
}

/// `spectrum`: the lowest eigenvalues of the second variation around a solution.
pub fn spectrum(config: &RunConfig) -> Result<Status> {
    let input = config.input("spectrum")?;
    let (traj, _) = io::read_trajectory(input)?;
    let analysis = analyze(&traj, &config.spectrum())?;
    let file = spectrum_file(config, input, &analysis);
    let out = config.output_or("spectrum.json");
    io::write_json(&out, &file)?;
    println!("{:>4} {:>20} {:>10}", "i", "lambda", "residual");
    for (i, (l, r)) in file.eigenvalues.iter().zip(&file.residuals).enumerate() {
        println!("{i:>4} {l:>20.12e} {r:>10.2e}");
    }
    println!("M = {}, n = {} -> {}", file.m, file.n, out.display());
    Ok(Status::Complete)
}

/// `classify`: symmetry labels of the eigenvalue clusters and the Morse indices.
pub fn classify(config: &RunConfig) -> Result<Status> {
    let input = config.input("classify")?;
    let (traj, _) = io::read_trajectory(input)?;
    let analysis = analyze(&traj, &config.spectrum())?;
    let file = ClassificationFile::new(
        &input.display().to_string(),
        &analysis.classification,
        &analysis.report,
        config.to_value(),
    );
    let out = config.output_or("classification.json");
    io::write_json(&out, &file)?;
    print!("{}", file.table());
    Ok(Status::Complete)
}

/// Equally spaced exponents from `from` to `to` (inclusive).
pub fn exponent_grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|i| from + i as f64 * step).collect();
    if to - grid[count] > 1e-9 {
        grid.push(to);
    }
    grid
}

/// Manifest plus the records it lists, or a fresh manifest.
fn open_manifest(config: &RunConfig, dir: &Path, command: &str) -> Result<(Manifest, Vec<BranchRecord>)> {
    let path = dir.join("manifest.json");
    let mut manifest = Manifest::new(command, config.fingerprint());
    if !config.resume || !path.exists() {
        return Ok((manifest, Vec::new()));
    }
    let old: Manifest = io::read_json(&path)?;
    if old.command != command || old.config != config.fingerprint() {
        return Err(Error::Config(format!(
            "{} was written by a different command or configuration",
            path.display()
        )));
    }
    let mut records = Vec::new();
    for name in &old.records {
        let file: RecordFile<BranchRecord> = io::read_json(&dir.join(name))?;
        records.push(file.record);
    }
    if old.complete {
        manifest = old;
    } else {
        manifest.records = old.records;
        manifest.fold = old.fold;
    }
    Ok((manifest, records))
}

/// Checkpoint one record and the manifest that lists it.
fn checkpoint(dir: &Path, manifest: &mut Manifest, record: &BranchRecord) -> Result<()> {
    let name = format!("records/{:04}.json", manifest.records.len());
    let file = RecordFile {
        format_version: FORMAT_VERSION,
        config: manifest.config.clone(),
        record,
    };
    io::write_json(&dir.join(&name), &file)?;
    manifest.records.push(name);
    io::write_json(&dir.join("manifest.json"), manifest)
}

fn record_rows(records: &[BranchRecord], count: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["parameter", "branch", "action", "N", "N_c", "N_e"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..count).map(|i| format!("lambda_{i}")));
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![
                cell(r.parameter),
                r.branch.name().to_string(),
                cell(r.action),
                r.index.n.to_string(),
                r.index.n_c.to_string(),
                r.index.n_e.to_string(),
            ];
            row.extend((0..count).map(|i| r.eigenvalues.get(i).map_or(String::new(), |v| cell(*v))));
            row
        })
        .collect();
    (header, rows)
}

fn threshold_rows(result: &SweepResult) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["parameter", "branch", "label", "N_lower", "N_c_lower", "N_e_lower", "N_upper", "N_c_upper", "N_e_upper"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = result
        .thresholds
        .iter()
        .map(|t| {
            vec![
                cell(t.parameter),
                t.branch.name().to_string(),
                t.label.clone(),
                t.lower.n.to_string(),
                t.lower.n_c.to_string(),
                t.lower.n_e.to_string(),
                t.upper.n.to_string(),
                t.upper.n_c.to_string(),
                t.upper.n_e.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

/// Record the sweep outcome in the manifest and write the CSV tables.
fn finish_sweep(config: &RunConfig, dir: &Path, manifest: &mut Manifest, result: &SweepResult) -> Result<Status> {
    let (header, rows) = record_rows(&result.records, 8.min(config.eigenpairs));
    io::write_csv(&dir.join("records.csv"), &header, &rows)?;
    let (header, rows) = threshold_rows(result);
    io::write_csv(&dir.join("thresholds.csv"), &header, &rows)?;
    manifest.artifacts = vec!["records.csv".into(), "thresholds.csv".into()];
    manifest.thresholds = serde_json::to_value(&result.thresholds)?;
    manifest.fold = serde_json::to_value(&result.fold)?;
    manifest.euler = serde_json::to_value(result.euler)?;
    manifest.gaps = result.gaps.clone();
    manifest.complete = true;
    io::write_json(&dir.join("manifest.json"), manifest)?;
    print!("{}", manifest_summary(manifest));
    Ok(if manifest.gaps.is_empty() {
        Status::Complete
    } else {
        Status::Partial
    })
}

fn resumed_status(manifest: &Manifest) -> Status {
    print!("{}", manifest_summary(manifest));
    if manifest.gaps.is_empty() {
        Status::Complete
    } else {
        Status::Partial
    }
}

/// `sweep-a`: the homogeneous figure-eight over an exponent grid.
pub fn sweep_a(config: &RunConfig) -> Result<Status> {
    if config.potential == PotentialKind::Lj {
        return Err(Error::Config("sweep-a needs a homogeneous potential".into()));
    }
    let dir = config.output_or("sweep-a");
    let (mut manifest, previous) = open_manifest(config, &dir, "sweep-a")?;
    if manifest.complete {
        return Ok(resumed_status(&manifest));
    }
    let grid = exponent_grid(config.from, config.to, config.step);
    let options = config.continuation();
    let result = continuation::sweep_exponent_with(&grid, config.x_max, &options, previous, &mut |record| {
        checkpoint(&dir, &mut manifest, record)
    })?;
    finish_sweep(config, &dir, &mut manifest, &result)
}

/// `sweep-T`: the Lennard-Jones figure-eight family through its fold.
pub fn sweep_t(config: &RunConfig) -> Result<Status> {
    if config.potential != PotentialKind::Lj {
        return Err(Error::Config("sweep-T needs --potential lj".into()));
    }
    let dir = config.output_or("sweep-T");
    let (mut manifest, previous) = open_manifest(config, &dir, "sweep-T")?;
    if manifest.complete {
        return Ok(resumed_status(&manifest));
    }
    let options = AlphaOptions {
        continuation: config.continuation(),
        t_start: config.t_start,
        t_stop: config.t_stop,
        ..AlphaOptions::default()
    };
    let progress = SweepResult {
        records: previous,
        fold: serde_json::from_value(manifest.fold.clone())?,
        ..SweepResult::default()
    };
    let outcome = continuation::follow_alpha_branch_with(&options, progress, &mut |record| {
        checkpoint(&dir, &mut manifest, record)
    });
    match outcome {
        Ok(result) => finish_sweep(config, &dir, &mut manifest, &result),
        Err(e) if !manifest.records.is_empty() => {
            // keep what was computed; a resume retries from the last record
            let last: RecordFile<BranchRecord> = io::read_json(&dir.join(manifest.records.last().unwrap()))?;
            manifest.gaps = vec![last.record.parameter];
            io::write_json(&dir.join("manifest.json"), &manifest)?;
            eprintln!("continuation stopped after T = {:.6}: {e}", last.record.parameter);
            Ok(Status::Partial)
        }
        Err(e) => Err(e),
    }
}

fn find_cluster<'a>(analysis: &'a Analysis, label: &str) -> Result<&'a Cluster> {
    analysis.classification.find(label).ok_or_else(|| {
        Error::Config(format!(
            "no cluster labelled {label} among {:?}",
            analysis.classification.labels()
        ))
    })
}

/// Direction inside a cluster: its eigenvector, or for a pair the mixture at
/// `theta` (default: the x-axis-symmetric angle). Returns the direction and angle.
fn cluster_direction(cluster: &Cluster, theta: Option<f64>) -> Result<(Vec<f64>, Option<f64>)> {
    match cluster.basis.len() {
        1 => Ok((cluster.basis[0].clone(), None)),
        2 => {
            let mut mixed = MixedDirection::new(cluster.basis[0].clone(), cluster.basis[1].clone(), 0.0);
            mixed.theta = theta.unwrap_or_else(|| mixed.x_axis_angle());
            Ok((mixed.psi(), Some(mixed.theta)))
        }
        d => Err(Error::Config(format!("cluster {} has dimension {d}; pick a simple or doubly degenerate one", cluster.label))),
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// `scan-1d`: the action along an eigenfunction ray, with the cubic model.
pub fn scan_1d(config: &RunConfig) -> Result<Status> {
    let traj = read_input(config, "scan-1d")?;
    let analysis = analyze(&traj, &config.spectrum())?;
    let label = config.label.as_deref().unwrap_or("C_e");
    let cluster = find_cluster(&analysis, label)?;
    let (mut psi, theta) = cluster_direction(cluster, config.theta)?;
    let n = config.n;
    let mut partner_info = Value::Null;
    let mut h_star = None;
    if let Some(path) = &config.partner {
        let (other, _) = io::read_trajectory(path)?;
        psi = landscape::oriented_towards(&psi, &traj, &other);
        let (s_q, s_p) = (traj.action_value(n)?, other.action_value(n)?);
        let estimate = landscape::estimate_h(s_q, s_p, cluster.lambda_mean)?;
        h_star = Some(estimate);
        partner_info = json!({
            "action": s_p,
            "distance": landscape::trajectory_distance(&traj, &other)?,
            "h_estimate": estimate,
        });
    }
    let hs = linspace(config.h_min, config.h_max, config.points);
    let scan = landscape::scan_1d(&traj, &psi, &hs, cluster.lambda_mean, h_star, n)?;
    let width = 2.0 * (config.h_max - config.h_min) / (config.points - 1) as f64;
    let refined = scan
        .extrema
        .iter()
        .map(|&(h, kind)| {
            let at = landscape::locate_extremum(&traj, &psi, h, width, kind, n)?;
            Ok(json!({ "kind": kind, "sampled": h, "refined": at }))
        })
        .collect::<Result<Vec<_>>>()?;
    let out = config.output_or("scan-1d.csv");
    let header: Vec<String> = ["h", "S", "cubic_model"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = (0..scan.h.len())
        .map(|i| vec![cell(scan.h[i]), cell(scan.action[i]), cell(scan.cubic[i])])
        .collect();
    io::write_csv(&out, &header, &rows)?;
    let settings = json!({
        "format_version": FORMAT_VERSION,
        "command": "scan-1d",
        "config": config.to_value(),
        "label": cluster.label,
        "lambda": cluster.lambda_mean,
        "theta": theta,
        "base_action": traj.action_value(n)?,
        "s3": scan.s3,
        "extrema": refined,
        "partner": partner_info,
    });
    io::write_json(&sidecar(&out), &settings)?;
    println!("label {} lambda {:.6}", cluster.label, cluster.lambda_mean);
    for e in &refined {
        println!("{} at h = {:.6}", e["kind"].as_str().unwrap_or(""), e["refined"].as_f64().unwrap_or(f64::NAN));
    }
    if let Some(h) = h_star {
        println!("cubic estimate h* = {h:.6}");
    }
    Ok(Status::Complete)
}

/// `scan-2d`: the action over the plane of a degenerate eigenpair.
pub fn scan_2d(config: &RunConfig) -> Result<Status> {
    let traj = read_input(config, "scan-2d")?;
    let analysis = analyze(&traj, &config.spectrum())?;
    let label = config.label.as_deref().unwrap_or("D_y^H");
    let cluster = find_cluster(&analysis, label)?;
    if cluster.basis.len() != 2 {
        return Err(Error::Config(format!("cluster {label} is not a pair")));
    }
    let pair = [cluster.basis[0].clone(), cluster.basis[1].clone()];
    let n = config.n;
    let grid = landscape::scan_2d(&traj, &pair, config.radius, config.points, n)?;
    let ring = 0.75 * config.radius;
    let profile = landscape::angular_profile(&traj, &pair, ring, 360, n)?;
    let third = profile.len() / 3;
    let scale = profile.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let defect = (0..profile.len())
        .map(|i| (profile[i].1 - profile[(i + third) % profile.len()].1).abs())
        .fold(0.0, f64::max);
    let theta_x = MixedDirection::new(pair[0].clone(), pair[1].clone(), 0.0).x_axis_angle();
    let out = config.output_or("scan-2d.csv");
    let header: Vec<String> = ["x", "y", "dS"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for (i, y) in grid.ys.iter().enumerate() {
        for (j, x) in grid.xs.iter().enumerate() {
            let v = grid.values[i][j].unwrap_or(f64::NAN);
            rows.push(vec![cell(*x), cell(*y), cell(v)]);
        }
    }
    io::write_csv(&out, &header, &rows)?;
    let minima: Vec<f64> = landscape::angular_minima(&profile);
    let settings = json!({
        "format_version": FORMAT_VERSION,
        "command": "scan-2d",
        "config": config.to_value(),
        "label": cluster.label,
        "lambda": cluster.lambda_mean,
        "theta_x_axis": theta_x,
        "ring_radius": ring,
        "angular_minima": minima,
        "threefold_defect": defect,
        "threefold_scale": scale,
        "grid_minima": grid.local_minima().iter().map(|m| [m.0, m.1, m.2]).collect::<Vec<_>>(),
        "missing": grid.missing,
    });
    io::write_json(&sidecar(&out), &settings)?;
    println!(
        "label {} lambda {:.6e}; angular minima at radius {ring:.4}: {:?}",
        cluster.label,
        cluster.lambda_mean,
        minima.iter().map(|t| format!("{:.4}", t)).collect::<Vec<_>>()
    );
    println!("threefold defect {defect:.3e} (profile scale {scale:.3e}), {} collision points", grid.missing);
    Ok(Status::Complete)
}

/// `refine`: Newton from the solution offset along an eigenfunction, in the full
/// periodic space.
pub fn refine(config: &RunConfig) -> Result<Status> {
    let traj = read_input(config, "refine")?;
    let analysis = analyze(&traj, &config.spectrum())?;
    let label = config.label.as_deref().unwrap_or("D_y^H");
    let cluster = find_cluster(&analysis, label)?;
    let n = config.n;
    let theta = match (cluster.basis.len(), config.theta) {
        (2, None) => {
            let mixed = MixedDirection::new(cluster.basis[0].clone(), cluster.basis[1].clone(), 0.0);
            Some(mixed.downhill(&traj, mixed.x_axis_angle(), config.amplitude, n)?)
        }
        (_, t) => t,
    };
    let (psi, theta) = cluster_direction(cluster, theta)?;
    let offset: Vec<f64> = psi.iter().map(|x| config.amplitude * x).collect();
    let refined = landscape::refine_critical_point(&traj, &offset, &config.solver())?;
    let base = traj.action_value(n)?;
    let action = refined.traj.action_value(n)?;
    let (h, msd) = landscape::closest_on_ray(&traj, &psi, &refined.traj);
    let estimate = landscape::estimate_h(base, action, cluster.lambda_mean).ok();
    let extra = json!({
        "label": cluster.label,
        "lambda": cluster.lambda_mean,
        "theta": theta,
        "base_action": base,
        "action": action,
        "action_difference": action - base,
        "ray_amplitude": h,
        "ray_residual": msd,
        "h_estimate": estimate,
        "distance_from_base": refined.distance_from_base,
        "collapsed": refined.collapsed,
        "iterations": refined.report.iterations,
    });
    let out = config.output_or("refined.json");
    io::write_trajectory(&out, &refined.traj, Some(provenance("refine", config, extra)))?;
    if refined.collapsed {
        println!("refinement returned to the starting solution");
    } else {
        println!(
            "S - S0 = {:.6e}, offset along ray h = {h:.6} (residual {msd:.2e}), cubic estimate {}",
            action - base,
            estimate.map_or("n/a".to_string(), |e| format!("{e:.6}"))
        );
    }
    Ok(Status::Complete)
}

/// `report`: a readable summary of any file this crate writes; with `replay`,
/// re-derive the eigenvalues of every record listed in a manifest.
pub fn report(config: &RunConfig) -> Result<Status> {
    let input = config.input("report")?;
    let value: Value = io::read_json(input)?;
    if value.get("records").is_some() && value.get("command").is_some() {
        let manifest: Manifest = serde_json::from_value(value)?;
        print!("{}", manifest_summary(&manifest));
        if config.replay {
            let dir = input.parent().unwrap_or(Path::new("."));
            let worst = replay(dir, &manifest)?;
            println!("replay: largest eigenvalue difference {worst:.3e}");
            if worst > 1e-10 {
                return Err(Error::Numeric(format!("replay differs by {worst:.3e}")));
            }
        }
        return Ok(Status::Complete);
    }
    if value.get("clusters").is_some() {
        let file: ClassificationFile = serde_json::from_value(value)?;
        print!("{}", file.table());
    } else if value.get("eigenvalues").is_some() {
        let file: SpectrumFile = serde_json::from_value(value)?;
        for (i, l) in file.eigenvalues.iter().enumerate() {
            println!("{i:>4} {l:>20.12e}");
        }
    } else {
        let (traj, provenance) = io::read_trajectory(input)?;
        println!(
            "{}: T = {:.9}, S = {:.9}, x_max = {:.6}, {} harmonics",
            traj.spec.describe(),
            traj.period(),
            traj.action_value(config.n)?,
            traj.x_max(),
            traj.max_harmonic()
        );
        if let Some(result) = provenance.as_ref().and_then(|p| p.get("result")) {
            println!("{}", serde_json::to_string_pretty(result)?);
        }
    }
    Ok(Status::Complete)
}

fn replay(dir: &Path, manifest: &Manifest) -> Result<f64> {
    let config: RunConfig = serde_json::from_value(manifest.config.clone())?;
    let mut worst = 0.0f64;
    for name in &manifest.records {
        let file: RecordFile<BranchRecord> = io::read_json(&dir.join(name))?;
        let record = file.record;
        let options = SpectrumOptions {
            m: record.m,
            max_m: record.m,
            ..config.spectrum()
        };
        let again = analyze(&record.traj, &options)?.eigenvalues(record.eigenvalues.len());
        for (a, b) in again.iter().zip(&record.eigenvalues) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Plain-text overview of a sweep manifest.
pub fn manifest_summary(manifest: &Manifest) -> String {
    let mut out = format!(
        "{}: {} records, {}\n",
        manifest.command,
        manifest.records.len(),
        if manifest.complete { "complete" } else { "incomplete" }
    );
    if let Ok(Some(fold)) = serde_json::from_value::<Option<continuation::Fold>>(manifest.fold.clone()) {
        out.push_str(&format!("fold: T_min = {:.7}, S = {:.7}\n", fold.t_min, fold.action));
    }
    if let Ok(Some(euler)) = serde_json::from_value::<Option<continuation::Euler>>(manifest.euler.clone()) {
        out.push_str(&format!("chi_e = {}\n", euler.chi_e));
    }
    if let Ok(thresholds) = serde_json::from_value::<Vec<continuation::Threshold>>(manifest.thresholds.clone()) {
        for t in thresholds {
            out.push_str(&format!(
                "threshold {:>10.6} {:<8} {:<8} (N, N_c, N_e): ({}, {}, {}) -> ({}, {}, {})\n",
                t.parameter,
                t.branch.name(),
                t.label,
                t.lower.n,
                t.lower.n_c,
                t.lower.n_e,
                t.upper.n,
                t.upper.n_c,
                t.upper.n_e
            ));
        }
    }
    if !manifest.gaps.is_empty() {
        out.push_str(&format!("gaps: {:?}\n", manifest.gaps));
    }
    out
}
