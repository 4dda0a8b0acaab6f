//! Families of figure-eight solutions: sweeps in the homogeneous exponent at fixed
//! size, pseudo-arclength continuation of the Lennard-Jones family in the period
//! through its fold, zero crossings of eigenvalues along both, and cluster tracking.

use std::f64::consts::PI;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, deflated_eigenvalues, Analysis, SpectrumOptions};
use crate::error::{Error, Result};
use crate::hessian::{dot, HessianProblem};
use crate::io::sig17;
use crate::potential::PotentialSpec;
use crate::solver::{self, find_solution, Constraint, SolverOptions, Subspace, Target};
use crate::symmetry::MorseIndexReport;
use crate::trajectory::PeriodicTrajectory;

/// The three Morse indices of one solution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexTriple {
    pub n: usize,
    pub n_c: usize,
    pub n_e: usize,
}

impl From<&MorseIndexReport> for IndexTriple {
    fn from(r: &MorseIndexReport) -> Self {
        IndexTriple {
            n: r.n,
            n_c: r.n_c,
            n_e: r.n_e,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Homogeneous,
    /// Lower-action branch of the Lennard-Jones family.
    AlphaMinus,
    /// Higher-action branch of the Lennard-Jones family.
    AlphaPlus,
}

impl Branch {
    pub fn name(&self) -> &'static str {
        match self {
            Branch::Homogeneous => "homogeneous",
            Branch::AlphaMinus => "alpha-",
            Branch::AlphaPlus => "alpha+",
        }
    }
}

/// One solution along a family with its spectral data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchRecord {
    /// Exponent `a` for homogeneous sweeps, period `T` for the Lennard-Jones family.
    #[serde(serialize_with = "sig17::value")]
    pub parameter: f64,
    pub branch: Branch,
    pub traj: PeriodicTrajectory,
    #[serde(serialize_with = "sig17::value")]
    pub action: f64,
    #[serde(serialize_with = "sig17::value")]
    pub x_max: f64,
    #[serde(serialize_with = "sig17::vec")]
    pub eigenvalues: Vec<f64>,
    /// Lowest eigenvalues with the four conservation directions shifted away.
    #[serde(serialize_with = "sig17::vec")]
    pub deflated: Vec<f64>,
    pub labels: Vec<String>,
    pub index: IndexTriple,
    /// Eigenproblem truncation used for this record.
    pub m: usize,
    #[serde(skip)]
    pub analysis: Option<Analysis>,
}

/// A parameter value where eigenvalues cross zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Threshold {
    #[serde(serialize_with = "sig17::value")]
    pub parameter: f64,
    pub branch: Branch,
    /// Positions in the deflated spectrum that change sign.
    pub positions: Vec<usize>,
    /// Label of the crossing cluster at the neighbouring record.
    pub label: String,
    /// Indices just below and just above the threshold.
    pub lower: IndexTriple,
    pub upper: IndexTriple,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fold {
    #[serde(serialize_with = "sig17::value")]
    pub t_min: f64,
    #[serde(serialize_with = "sig17::value")]
    pub action: f64,
    /// Arclength bracket left when refinement stopped.
    #[serde(serialize_with = "sig17::value")]
    pub bracket: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<BranchRecord>,
    pub thresholds: Vec<Threshold>,
    pub fold: Option<Fold>,
    /// Parameter values where the solver failed.
    pub gaps: Vec<f64>,
    pub euler: Option<Euler>,
}

/// Euler characteristics over the critical points found by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Euler {
    /// Over the figure-eight domain.
    pub chi_e: i64,
    /// Over all periodic loops; unknown unless every critical point is enumerated.
    pub chi: Option<i64>,
}

/// Settings shared by both kinds of sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub solver: SolverOptions,
    pub spectrum: SpectrumOptions,
    /// Number of deflated eigenvalues watched for sign changes.
    pub watch: usize,
    /// Bracket width in the parameter at which threshold refinement stops.
    pub threshold_tolerance: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Largest coefficient-space distance between consecutive records.
    pub continuity: f64,
    /// Locate thresholds after the sweep.
    pub find_thresholds: bool,
    /// The basis is doubled (up to `solver.max_basis_len`) while the top harmonic
    /// exceeds this fraction of the largest coefficient.
    pub tail_tolerance: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            solver: SolverOptions {
                adapt_basis: false,
                newton_first: true,
                ..SolverOptions::default()
            },
            spectrum: SpectrumOptions::default(),
            watch: 24,
            threshold_tolerance: 1e-5,
            initial_step: 0.5,
            min_step: 1e-4,
            max_step: 0.5,
            continuity: 0.2,
            find_thresholds: true,
            tail_tolerance: 1e-12,
        }
    }
}

/// Figure-eight of a homogeneous potential with `x_max = target`, solved from `guess`
/// (or the Lissajous seed).
pub fn homogeneous_eight(
    a: f64,
    x_max: f64,
    guess: Option<&PeriodicTrajectory>,
    options: &SolverOptions,
) -> Result<PeriodicTrajectory> {
    let spec = PotentialSpec::homogeneous(a)?;
    // the seed is coarse, so a cold start always grows its basis
    let cold = SolverOptions {
        newton_first: false,
        adapt_basis: true,
        ..options.clone()
    };
    let (seed, options) = match guess {
        Some(g) => (g.with_spec(spec), options),
        None => (solver::figure_eight_seed(spec, 41)?, &cold),
    };
    Ok(find_solution(spec, Constraint::FigureEight, Target::XMax(x_max), &seed, options)?.0)
}

pub fn make_record(
    parameter: f64,
    branch: Branch,
    traj: PeriodicTrajectory,
    options: &ContinuationOptions,
) -> Result<BranchRecord> {
    let analysis = analyze(&traj, &options.spectrum)?;
    let fixed = SpectrumOptions {
        m: analysis.m,
        ..options.spectrum.clone()
    };
    let deflated = deflated_eigenvalues(&traj, &fixed, options.watch)?;
    Ok(BranchRecord {
        parameter,
        branch,
        action: traj.action_value(options.solver.n)?,
        x_max: traj.x_max(),
        eigenvalues: analysis.eigenvalues(options.spectrum.count),
        deflated,
        labels: analysis.classification.labels(),
        index: IndexTriple::from(&analysis.report),
        m: analysis.m,
        analysis: Some(analysis),
        traj,
    })
}

/// Called with every newly computed record, e.g. to checkpoint it.
pub type RecordSink<'a> = &'a mut dyn FnMut(&BranchRecord) -> Result<()>;

/// Solve, analyze and record the figure-eight at every exponent in `a_values`
/// (ascending), warm-starting each from its neighbour, then locate eigenvalue sign
/// changes between records.
pub fn sweep_exponent(a_values: &[f64], x_max: f64, options: &ContinuationOptions) -> Result<SweepResult> {
    sweep_exponent_with(a_values, x_max, options, Vec::new(), &mut |_| Ok(()))
}

/// [`sweep_exponent`] that reuses the solutions of `previous` at matching exponents
/// and passes each new record to `sink`.
pub fn sweep_exponent_with(
    a_values: &[f64],
    x_max: f64,
    options: &ContinuationOptions,
    previous: Vec<BranchRecord>,
    sink: RecordSink<'_>,
) -> Result<SweepResult> {
    let mut result = SweepResult::default();
    let mut warm: Option<PeriodicTrajectory> = None;
    for &a in a_values {
        if !(0.0..=7.0).contains(&a) {
            return Err(Error::Domain(format!("exponent {a} outside the supported range [0, 7]")));
        }
        if let Some(old) = previous
            .iter()
            .find(|r| r.branch == Branch::Homogeneous && (r.parameter - a).abs() < 1e-12)
        {
            warm = Some(old.traj.clone());
            result.records.push(old.clone());
            continue;
        }
        let solver = SolverOptions {
            adapt_basis: true,
            ..options.solver.clone()
        };
        let solved = homogeneous_eight(a, x_max, warm.as_ref(), &solver)
            .or_else(|_| homogeneous_eight(a, x_max, None, &solver));
        match solved.and_then(|t| make_record(a, Branch::Homogeneous, t, options)) {
            Ok(record) => {
                sink(&record)?;
                warm = Some(record.traj.clone());
                result.records.push(record);
            }
            Err(_) => result.gaps.push(a),
        }
    }
    if options.find_thresholds {
        result.thresholds = exponent_thresholds(&result.records, x_max, options)?;
    }
    Ok(result)
}

/// Thresholds between consecutive records of an exponent sweep; segments are
/// refined in parallel.
pub fn exponent_thresholds(records: &[BranchRecord], x_max: f64, options: &ContinuationOptions) -> Result<Vec<Threshold>> {
    let found = records
        .par_windows(2)
        .map(|w| {
            let (ra, rb) = (&w[0], &w[1]);
            let path = |theta: f64| -> Result<(f64, PeriodicTrajectory)> {
                let a = ra.parameter + theta * (rb.parameter - ra.parameter);
                let guess = if theta < 0.5 { &ra.traj } else { &rb.traj };
                let solver = SolverOptions {
                    adapt_basis: true,
                    ..options.solver.clone()
                };
                Ok((a, homogeneous_eight(a, x_max, Some(guess), &solver)?))
            };
            thresholds_on_segment(ra, rb, path, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Eigenvalue sign changes between two records, refined by the Illinois method on
/// the deflated eigenvalue at each changing position. `path(theta)` returns the
/// solution at fraction `theta` of the way from `ra` to `rb`.
pub fn thresholds_on_segment(
    ra: &BranchRecord,
    rb: &BranchRecord,
    mut path: impl FnMut(f64) -> Result<(f64, PeriodicTrajectory)>,
    options: &ContinuationOptions,
) -> Result<Vec<Threshold>> {
    let span = (rb.parameter - ra.parameter).abs();
    let fixed = SpectrumOptions {
        m: ra.m.max(rb.m),
        ..options.spectrum.clone()
    };
    let mut roots: Vec<(f64, Vec<usize>)> = Vec::new();
    for p in 0..ra.deflated.len().min(rb.deflated.len()) {
        if ra.deflated[p].signum() == rb.deflated[p].signum() {
            continue;
        }
        let theta = illinois(ra.deflated[p], rb.deflated[p], span, options.threshold_tolerance, |theta| {
            let (_, traj) = path(theta)?;
            Ok(deflated_eigenvalues(&traj, &fixed, options.watch)?[p])
        })?;
        match roots.last_mut() {
            // degenerate partners cross together
            Some((t, ps)) if ps.last() == Some(&(p - 1)) && (*t - theta).abs() * span < 1e-3 => ps.push(p),
            _ => roots.push((theta, vec![p])),
        }
    }
    // indices are read halfway between neighbouring roots, well clear of the
    // near-zero eigenvalue that would otherwise be merged with the zero modes
    roots.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut sides = vec![ra.index];
    for w in roots.windows(2) {
        let (_, t) = path(0.5 * (w[0].0 + w[1].0))?;
        sides.push(IndexTriple::from(&analyze(&t, &fixed)?.report));
    }
    sides.push(rb.index);
    let ascending = rb.parameter >= ra.parameter;
    let mut out = Vec::new();
    for (i, (theta, positions)) in roots.into_iter().enumerate() {
        let (ia, ib) = (sides[i], sides[i + 1]);
        let (lower, upper) = if ascending { (ia, ib) } else { (ib, ia) };
        let label = crossing_label(ra, positions[0], &fixed)
            .or_else(|| crossing_label(rb, positions[0], &fixed))
            .unwrap_or_default();
        out.push(Threshold {
            parameter: ra.parameter + theta * (rb.parameter - ra.parameter),
            branch: rb.branch,
            positions,
            label,
            lower,
            upper,
        });
    }
    Ok(out)
}

/// Root of `f` on `[0, 1]` by the Illinois variant of regula falsi, stopped when the
/// bracket times `span` is below `tolerance`.
fn illinois(mut flo: f64, mut fhi: f64, span: f64, tolerance: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut side = 0;
    for _ in 0..100 {
        if (hi - lo) * span < tolerance {
            break;
        }
        let mut theta = (lo * fhi - hi * flo) / (fhi - flo);
        if !(theta > lo && theta < hi) {
            theta = 0.5 * (lo + hi);
        }
        let value = f(theta)?;
        if value.signum() == flo.signum() {
            lo = theta;
            flo = value;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = theta;
            fhi = value;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Label of the cluster holding deflated position `p` in a record.
/// Records read back from disk carry no eigenvectors; their analysis is redone.
fn crossing_label(record: &BranchRecord, p: usize, options: &SpectrumOptions) -> Option<String> {
    let recomputed;
    let analysis = match &record.analysis {
        Some(a) => a,
        None => {
            recomputed = analyze(&record.traj, options).ok()?;
            &recomputed
        }
    };
    let full = if record.deflated[p] < 0.0 { p } else { p + 4 };
    analysis
        .classification
        .clusters
        .iter()
        .find(|c| c.indices.contains(&full))
        .map(|c| c.label.clone())
}

/// Point of the Lennard-Jones family in scaled coordinates: `z = P^T c / sqrt(T)`,
/// which makes the kinetic term `2 pi^2 sum m^2 z^2 / T` explicit.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub z: Vec<f64>,
    pub t: f64,
}

impl BranchPoint {
    fn as_vec(&self) -> Vec<f64> {
        let mut v = self.z.clone();
        v.push(self.t);
        v
    }

    fn from_vec(v: &[f64]) -> Self {
        BranchPoint {
            z: v[..v.len() - 1].to_vec(),
            t: v[v.len() - 1],
        }
    }
}

/// Pseudo-arclength machinery for the figure-eight family at fixed potential.
pub struct ArclengthSystem {
    pub spec: PotentialSpec,
    pub sub: Subspace,
    pub n: usize,
    pub tolerance: f64,
    m2: Vec<f64>,
}

impl ArclengthSystem {
    pub fn new(spec: PotentialSpec, len: usize, n: usize, tolerance: f64) -> Self {
        let sub = Subspace::new(Constraint::FigureEight, len);
        let m2 = sub.harmonics().iter().map(|&m| (m * m) as f64).collect();
        ArclengthSystem {
            spec,
            sub,
            n,
            tolerance,
            m2,
        }
    }

    pub fn point_of(&self, traj: &PeriodicTrajectory) -> BranchPoint {
        let t = traj.period();
        let padded = traj.with_basis_len(self.sub.full_dim / 6);
        let z = self.sub.restrict(padded.coeffs()).into_iter().map(|x| x / t.sqrt()).collect();
        BranchPoint { z, t }
    }

    pub fn trajectory(&self, p: &BranchPoint) -> Result<PeriodicTrajectory> {
        let c: Vec<f64> = p.z.iter().map(|x| x * p.t.sqrt()).collect();
        Ok(PeriodicTrajectory::new(self.spec, p.t, self.sub.lift(&c))?
            .with_flags(solver::flags_for(Constraint::FigureEight)))
    }

    /// `F = dS/dz`, its Jacobian in `z`, `dF/dT`, and the full-space gradient norm.
    fn linearize(&self, p: &BranchPoint) -> Result<(Vec<f64>, Mat<f64>, Vec<f64>, f64, f64)> {
        let traj = self.trajectory(p)?;
        let eval = traj.action(self.n)?;
        let st = p.t.sqrt();
        let f: Vec<f64> = self.sub.restrict(&eval.grad).into_iter().map(|g| g * st).collect();
        let problem = HessianProblem::new(&traj, traj.basis_len(), self.n.max(solver::grid_for(traj.basis_len())))?;
        let mut j = self.sub.reduce(&problem.h);
        for a in 0..j.nrows() {
            for b in 0..j.ncols() {
                j[(a, b)] *= p.t;
            }
        }
        let ft: Vec<f64> = f
            .iter()
            .zip(&p.z)
            .zip(&self.m2)
            .map(|((fi, zi), m2)| -8.0 * PI * PI * m2 * zi / (p.t * p.t) + fi / p.t)
            .collect();
        Ok((f, j, ft, eval.grad_norm, eval.action))
    }

    /// Unit tangent `(dz, dT)` oriented along `previous`.
    pub fn tangent(&self, p: &BranchPoint, previous: &[f64]) -> Result<Vec<f64>> {
        let (_, j, ft, _, _) = self.linearize(p)?;
        let mut rhs = vec![0.0; j.nrows() + 1];
        *rhs.last_mut().unwrap() = 1.0;
        let mut tau = bordered_solve(&j, &ft, previous, &rhs)?;
        let norm = dot(&tau, &tau).sqrt();
        tau.iter_mut().for_each(|x| *x /= norm);
        if dot(&tau, previous) < 0.0 {
            tau.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(tau)
    }

    /// Newton corrector on `F = 0` within the hyperplane through `predicted` normal to
    /// `normal`. Returns the point and the number of iterations.
    pub fn correct(&self, predicted: &BranchPoint, normal: &[f64]) -> Result<(BranchPoint, usize)> {
        let y0 = predicted.as_vec();
        let mut y = y0.clone();
        for iteration in 0..15 {
            let p = BranchPoint::from_vec(&y);
            let (f, j, ft, grad_norm, action) = self.linearize(&p)?;
            if solver::converged(grad_norm, action, self.tolerance) {
                return Ok((p, iteration));
            }
            let mut rhs: Vec<f64> = f.iter().map(|x| -x).collect();
            let offset: f64 = normal.iter().zip(y.iter().zip(&y0)).map(|(n, (a, b))| n * (a - b)).sum();
            rhs.push(-offset);
            let delta = bordered_solve(&j, &ft, normal, &rhs)?;
            for (yi, d) in y.iter_mut().zip(&delta) {
                *yi += d;
            }
            if y.last().is_none_or(|t| *t <= 0.0) {
                return Err(Error::Continuation("period became non-positive in corrector".into()));
            }
        }
        Err(Error::Continuation("corrector did not converge".into()))
    }
}

fn bordered_solve(j: &Mat<f64>, ft: &[f64], row: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let d = j.nrows();
    let a = Mat::<f64>::from_fn(d + 1, d + 1, |r, c| match (r < d, c < d) {
        (true, true) => j[(r, c)],
        (true, false) => ft[r],
        (false, _) => row[c],
    });
    let mut b = Mat::<f64>::from_fn(d + 1, 1, |r, _| rhs[r]);
    let lu = a.partial_piv_lu();
    faer::linalg::solvers::Solve::solve_in_place(&lu, b.as_mut());
    let x: Vec<f64> = (0..=d).map(|r| b[(r, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("singular bordered system".into()));
    }
    Ok(x)
}

/// Settings of the Lennard-Jones family continuation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaOptions {
    pub continuation: ContinuationOptions,
    /// Period of the first solution on the lower branch.
    pub t_start: f64,
    /// Stop on the upper branch once the period exceeds this value.
    pub t_stop: f64,
    /// Exponent of the homogeneous solution used as the seed.
    pub seed_exponent: f64,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions {
            continuation: ContinuationOptions::default(),
            t_start: 61.7495,
            t_stop: 30.0,
            seed_exponent: 6.0,
        }
    }
}

/// Lower-branch Lennard-Jones figure-eight at period `t`, from the homogeneous
/// figure-eight of exponent `seed_exponent` rescaled to that period.
pub fn alpha_minus_seed(t: f64, seed_exponent: f64, options: &SolverOptions) -> Result<PeriodicTrajectory> {
    let options = &SolverOptions {
        adapt_basis: true,
        newton_first: false,
        ..options.clone()
    };
    let homogeneous = homogeneous_eight(seed_exponent, 2.0, None, options)?;
    let lambda = (t / homogeneous.period()).powf(1.0 / (1.0 + 0.5 * seed_exponent));
    let guess = homogeneous.rescale_homogeneous(lambda)?.with_spec(PotentialSpec::LennardJones);
    Ok(find_solution(PotentialSpec::LennardJones, Constraint::FigureEight, Target::Period(t), &guess, options)?.0)
}

/// Continue the Lennard-Jones figure-eight from `T = t_start` on the lower branch
/// down through the fold and up the upper branch to `t_stop`.
pub fn follow_alpha_branch(options: &AlphaOptions) -> Result<SweepResult> {
    follow_alpha_branch_with(options, SweepResult::default(), &mut |_| Ok(()))
}

/// [`follow_alpha_branch`] resumed from the last record of `progress` (if any), with
/// every new record passed to `sink`.
pub fn follow_alpha_branch_with(options: &AlphaOptions, progress: SweepResult, sink: RecordSink<'_>) -> Result<SweepResult> {
    let copts = &options.continuation;
    let mut result = SweepResult {
        records: progress.records,
        fold: progress.fold,
        ..SweepResult::default()
    };
    let (start, mut branch) = match result.records.last() {
        Some(r) => (r.traj.clone(), r.branch),
        None => (
            alpha_minus_seed(options.t_start, options.seed_exponent, &copts.solver)?,
            Branch::AlphaMinus,
        ),
    };
    let mut system = ArclengthSystem::new(PotentialSpec::LennardJones, start.basis_len(), copts.solver.n, copts.solver.tolerance);
    let mut point = system.point_of(&start);
    let mut orient = vec![0.0; point.z.len() + 1];
    *orient.last_mut().unwrap() = if branch == Branch::AlphaMinus { -1.0 } else { 1.0 };
    let mut tangent = system.tangent(&point, &orient)?;
    if result.records.is_empty() {
        let record = make_record(point.t, Branch::AlphaMinus, start, copts)?;
        sink(&record)?;
        result.records.push(record);
    }
    let mut ds = copts.initial_step;
    let mut t_index = point.z.len();
    while !(branch == Branch::AlphaPlus && point.t >= options.t_stop) {
        let len = system.sub.full_dim / 6;
        if system.trajectory(&point)?.tail_ratio() > copts.tail_tolerance && 2 * len - 1 <= copts.solver.max_basis_len {
            let padded = system.trajectory(&point)?.with_basis_len(2 * len - 1);
            system = ArclengthSystem::new(PotentialSpec::LennardJones, 2 * len - 1, copts.solver.n, copts.solver.tolerance);
            let mut normal = vec![0.0; system.sub.dim() + 1];
            *normal.last_mut().unwrap() = 1.0;
            point = system.correct(&system.point_of(&padded), &normal)?.0;
            let mut previous = vec![0.0; normal.len()];
            previous[..t_index].copy_from_slice(&tangent[..t_index]);
            previous[normal.len() - 1] = tangent[t_index];
            tangent = system.tangent(&point, &previous)?;
            t_index = point.z.len();
            continue;
        }
        let y = point.as_vec();
        let predicted = BranchPoint::from_vec(&y.iter().zip(&tangent).map(|(a, b)| a + ds * b).collect::<Vec<_>>());
        let accepted = system.correct(&predicted, &tangent).and_then(|(next, iterations)| {
            let dist = coefficient_distance(&system, &point, &next)?;
            if dist > copts.continuity {
                return Err(Error::Continuation(format!("step moved the orbit by {dist:.3}")));
            }
            Ok((next, iterations))
        });
        let (next, iterations) = match accepted {
            Ok(v) => v,
            Err(e) => {
                ds *= 0.5;
                if ds < copts.min_step {
                    return Err(Error::Continuation(format!(
                        "step size fell below {} near T = {:.6}: {e}",
                        copts.min_step, point.t
                    )));
                }
                continue;
            }
        };
        let next_tangent = system.tangent(&next, &tangent)?;
        if branch == Branch::AlphaMinus && tangent[t_index] < 0.0 && next_tangent[t_index] > 0.0 {
            let (fold, before, after) = refine_fold(&system, (&point, &tangent), (&next, &next_tangent))?;
            for (p, b) in [(before, Branch::AlphaMinus), (after, Branch::AlphaPlus)] {
                let record = make_record(p.t, b, system.trajectory(&p)?, copts)?;
                sink(&record)?;
                result.records.push(record);
            }
            result.fold = Some(fold);
            branch = Branch::AlphaPlus;
        } else if branch == Branch::AlphaMinus && next.t < 1.0 {
            return Err(Error::Continuation("no fold found before T = 1".into()));
        }
        if branch == Branch::AlphaPlus && next.t > options.t_stop {
            // below the fold there is nothing to land on
            if result.fold.as_ref().is_none_or(|f| options.t_stop <= f.t_min) {
                break;
            }
            // step back along the tangent and correct at fixed period onto t_stop
            let s = (options.t_stop - next.t) / next_tangent[t_index];
            let guess = BranchPoint::from_vec(&next.as_vec().iter().zip(&next_tangent).map(|(a, b)| a + s * b).collect::<Vec<_>>());
            let mut fixed_period = vec![0.0; next_tangent.len()];
            fixed_period[t_index] = 1.0;
            let (last, _) = system.correct(&guess, &fixed_period)?;
            let record = make_record(last.t, branch, system.trajectory(&last)?, copts)?;
            sink(&record)?;
            result.records.push(record);
            break;
        }
        let record = make_record(next.t, branch, system.trajectory(&next)?, copts)?;
        sink(&record)?;
        result.records.push(record);
        point = next;
        tangent = next_tangent;
        if iterations <= 3 {
            ds = (ds * 1.5).min(copts.max_step);
        }
    }
    // the records bracketing the fold carry its zero eigenvalue, so the nearest
    // records clear of it stand for each branch
    let clear = |r: &&BranchRecord| {
        result
            .fold
            .as_ref()
            .is_some_and(|f| r.parameter - f.t_min > 1e-6)
    };
    let last_minus = result
        .records
        .iter()
        .filter(|r| r.branch == Branch::AlphaMinus)
        .filter(clear)
        .min_by(|a, b| a.parameter.total_cmp(&b.parameter));
    let first_plus = result
        .records
        .iter()
        .filter(|r| r.branch == Branch::AlphaPlus)
        .filter(clear)
        .min_by(|a, b| a.parameter.total_cmp(&b.parameter));
    if let (Some(m), Some(p)) = (last_minus, first_plus) {
        result.euler = Some(Euler {
            chi_e: euler_characteristic(&[m.index, p.index], Constraint::FigureEight),
            chi: None,
        });
    }
    if copts.find_thresholds {
        result.thresholds = branch_thresholds(&result.records, copts)?;
    }
    Ok(result)
}

fn coefficient_distance(system: &ArclengthSystem, a: &BranchPoint, b: &BranchPoint) -> Result<f64> {
    let ta = system.trajectory(a)?;
    let tb = system.trajectory(b)?;
    Ok(ta
        .coeffs()
        .iter()
        .zip(tb.coeffs())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Bisect the arclength bracket on the sign of `dT/ds` until it is shorter than
/// `1e-9`; the smaller endpoint period is the fold period.
fn refine_fold(
    system: &ArclengthSystem,
    a: (&BranchPoint, &[f64]),
    b: (&BranchPoint, &[f64]),
) -> Result<(Fold, BranchPoint, BranchPoint)> {
    let t_index = a.0.z.len();
    let (mut pa, mut ta) = (a.0.clone(), a.1.to_vec());
    let mut pb = b.0.clone();
    let mut width = f64::INFINITY;
    for _ in 0..60 {
        let ya = pa.as_vec();
        let yb = pb.as_vec();
        let chord: Vec<f64> = yb.iter().zip(&ya).map(|(x, y)| x - y).collect();
        width = dot(&chord, &chord).sqrt();
        if width < 1e-9 {
            break;
        }
        let normal: Vec<f64> = chord.iter().map(|x| x / width).collect();
        let mid = BranchPoint::from_vec(&ya.iter().zip(&yb).map(|(x, y)| 0.5 * (x + y)).collect::<Vec<_>>());
        let (mid, _) = system.correct(&mid, &normal)?;
        let tm = system.tangent(&mid, &ta)?;
        if tm[t_index] < 0.0 {
            pa = mid;
            ta = tm;
        } else {
            pb = mid;
        }
    }
    let lower = if pa.t <= pb.t { &pa } else { &pb };
    let action = system.trajectory(lower)?.action_value(system.n)?;
    Ok((
        Fold {
            t_min: lower.t,
            action,
            bracket: width,
        },
        pa,
        pb,
    ))
}

/// Thresholds between consecutive records of the same branch, refined along the
/// chord-normal corrector; segments run in parallel.
pub fn branch_thresholds(records: &[BranchRecord], options: &ContinuationOptions) -> Result<Vec<Threshold>> {
    let found = records
        .par_windows(2)
        .filter(|w| w[0].branch == w[1].branch)
        .map(|w| {
            let (ra, rb) = (&w[0], &w[1]);
            let len = ra.traj.basis_len().max(rb.traj.basis_len());
            let system = ArclengthSystem::new(PotentialSpec::LennardJones, len, options.solver.n, options.solver.tolerance);
            let ya = system.point_of(&ra.traj).as_vec();
            let yb = system.point_of(&rb.traj).as_vec();
            let chord: Vec<f64> = yb.iter().zip(&ya).map(|(x, y)| x - y).collect();
            let width = dot(&chord, &chord).sqrt();
            let normal: Vec<f64> = chord.iter().map(|x| x / width).collect();
            let path = |theta: f64| -> Result<(f64, PeriodicTrajectory)> {
                let guess = BranchPoint::from_vec(&ya.iter().zip(&chord).map(|(x, c)| x + theta * c).collect::<Vec<_>>());
                let (p, _) = system.correct(&guess, &normal)?;
                Ok((p.t, system.trajectory(&p)?))
            };
            thresholds_on_segment(ra, rb, path, options)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// Solve the family at a given period on the requested branch, starting from the
/// closest record of that branch.
pub fn solve_on_branch(result: &SweepResult, branch: Branch, t: f64, options: &SolverOptions) -> Result<PeriodicTrajectory> {
    let nearest = result
        .records
        .iter()
        .filter(|r| r.branch == branch)
        .min_by(|a, b| (a.parameter - t).abs().total_cmp(&(b.parameter - t).abs()))
        .ok_or_else(|| Error::Continuation(format!("no {} records", branch.name())))?;
    Ok(find_solution(PotentialSpec::LennardJones, Constraint::FigureEight, Target::Period(t), &nearest.traj, options)?.0)
}

/// One row of a correlation table: the labels of a record after matching its
/// clusters to the previous record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub parameter: f64,
    pub branch: Branch,
    pub labels: Vec<String>,
    pub index: IndexTriple,
    /// Set when a cluster's two best matches were within 5% of each other.
    pub ambiguous: bool,
}

/// Match clusters of consecutive records by subspace overlap and carry the labels
/// of the first record along.
pub fn track_clusters(records: &[BranchRecord]) -> Result<Vec<CorrelationRow>> {
    let mut rows = Vec::new();
    let mut previous: Option<(&Analysis, Vec<String>)> = None;
    for record in records {
        let analysis = record
            .analysis
            .as_ref()
            .ok_or_else(|| Error::Continuation("record has no eigenvectors".into()))?;
        let clusters = &analysis.classification.clusters;
        let mut labels: Vec<String> = clusters.iter().map(|c| c.label.clone()).collect();
        let mut ambiguous = false;
        if let Some((prev, prev_labels)) = &previous {
            for (ci, c) in clusters.iter().enumerate() {
                let mut scores: Vec<(f64, usize)> = prev
                    .classification
                    .clusters
                    .iter()
                    .enumerate()
                    .map(|(pi, p)| {
                        let mut s = 0.0;
                        for u in &c.basis {
                            for w in &p.basis {
                                s += dot(u, w).powi(2);
                            }
                        }
                        (s / c.degeneracy.max(p.degeneracy) as f64, pi)
                    })
                    .collect();
                scores.sort_by(|a, b| b.0.total_cmp(&a.0));
                if let Some(&(best, pi)) = scores.first() {
                    if scores.len() > 1 && scores[1].0 > 0.95 * best {
                        ambiguous = true;
                    }
                    if best > 0.5 {
                        labels[ci] = prev_labels[pi].clone();
                    }
                }
            }
        }
        let visible: Vec<String> = clusters
            .iter()
            .zip(&labels)
            .filter(|(c, _)| !matches!(c.class, crate::symmetry::ClusterClass::Trivial { .. }))
            .map(|(_, l)| l.clone())
            .collect();
        rows.push(CorrelationRow {
            parameter: record.parameter,
            branch: record.branch,
            labels: visible,
            index: record.index,
            ambiguous,
        });
        previous = Some((analysis, labels));
    }
    Ok(rows)
}

/// `sum (-1)^index` over a set of critical points in the chosen function domain.
pub fn euler_characteristic(indices: &[IndexTriple], domain: Constraint) -> i64 {
    indices
        .iter()
        .map(|i| {
            let k = match domain {
                Constraint::FigureEight => i.n_e,
                Constraint::Choreographic => i.n_c,
                Constraint::Periodic => i.n,
            };
            if k % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_examples() {
        let minus = IndexTriple { n: 5, n_c: 1, n_e: 0 };
        let plus = IndexTriple { n: 6, n_c: 2, n_e: 1 };
        assert_eq!(euler_characteristic(&[minus, plus], Constraint::FigureEight), 0);
        assert_eq!(euler_characteristic(&[IndexTriple::default()], Constraint::Periodic), 1);
        let eight = IndexTriple { n: 2, n_c: 0, n_e: 0 };
        let h = IndexTriple { n: 1, n_c: 0, n_e: 0 };
        assert_eq!(euler_characteristic(&[eight, h, h, h], Constraint::Periodic), -2);
    }
}
