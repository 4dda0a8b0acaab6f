//! One-call spectrum, classification and index report for a solution.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hessian::{self, EigenMethod, HessianProblem, Spectrum, DEFAULT_GRID};
use crate::symmetry::{self, EigenClassification, MorseIndexReport};
use crate::trajectory::PeriodicTrajectory;

/// Settings for the eigenproblem around one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Basis functions per coordinate.
    pub m: usize,
    /// Quadrature points (multiple of 3).
    pub n: usize,
    /// Number of eigenvalues to report.
    pub count: usize,
    /// Extra eigenpairs computed so that the cluster at position `count` is complete.
    pub extra: usize,
    pub method: EigenMethod,
    /// Double `n` until the `u_ij` spectra tail is below `1e-9` of the peak.
    pub refine_grid: bool,
    /// `m` is doubled (as harmonics, up to `max_m`) while any reported eigenvector
    /// keeps more than `tail_limit` of its norm in the top tenth of the harmonics.
    pub max_m: usize,
    pub tail_limit: f64,
    /// Seed of the iterative eigensolver.
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            m: 161,
            n: DEFAULT_GRID,
            count: 20,
            extra: 8,
            method: EigenMethod::Auto,
            refine_grid: false,
            max_m: 641,
            tail_limit: 1e-3,
            seed: hessian::DEFAULT_SEED,
        }
    }
}

impl SpectrumOptions {
    pub fn problem(&self, traj: &PeriodicTrajectory) -> Result<HessianProblem> {
        // the trajectory keeps all its harmonics; only the test space is truncated
        let n = self.n.max(crate::solver::grid_for(traj.basis_len().max(self.m)));
        let mut problem = if self.refine_grid {
            HessianProblem::with_refined_grid(traj, self.m, n)?
        } else {
            HessianProblem::new(traj, self.m, n)?
        };
        problem.seed = self.seed;
        Ok(problem)
    }
}

/// Spectrum, classification and Morse indices of one solution.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub spectrum: Spectrum,
    pub classification: EigenClassification,
    pub report: MorseIndexReport,
    /// Truncation actually used.
    pub m: usize,
    pub n: usize,
}

impl Analysis {
    /// The lowest `count` eigenvalues.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        self.spectrum.eigenvalues().into_iter().take(count).collect()
    }
}

pub fn analyze(traj: &PeriodicTrajectory, options: &SpectrumOptions) -> Result<Analysis> {
    let mut opts = options.clone();
    loop {
        let problem = opts.problem(traj)?;
        let wanted = (opts.count + opts.extra).min(problem.dim());
        let spectrum = problem.eigensolve_with(wanted, opts.method)?;
        let next = 2 * opts.m - 1;
        if next <= opts.max_m && eigenvector_tail(&spectrum, opts.count) > opts.tail_limit {
            opts.m = next;
            continue;
        }
        let mut classification = symmetry::classify(&spectrum, &problem.traj)?;
        classification.clusters.retain(|c| c.indices[0] < opts.count);
        let report = symmetry::morse_indices(&classification);
        return Ok(Analysis {
            spectrum,
            classification,
            report,
            m: opts.m,
            n: problem.n,
        });
    }
}

/// Largest norm fraction of the lowest `count` eigenvectors carried by the top
/// tenth of the harmonics.
pub fn eigenvector_tail(spectrum: &Spectrum, count: usize) -> f64 {
    let cut = 6 * (spectrum.m * 9 / 10);
    spectrum
        .pairs
        .iter()
        .take(count)
        .map(|p| p.v[cut..].iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Lowest eigenvalues of `H + s Z Z^T`, where `Z` spans the four analytic
/// conservation directions, so that crossings through zero are not confused with
/// the zero modes.
pub fn deflated_eigenvalues(traj: &PeriodicTrajectory, options: &SpectrumOptions, count: usize) -> Result<Vec<f64>> {
    let mut problem = options.problem(traj)?;
    let dirs = hessian::conservation_directions(&problem.traj, options.m);
    let z = crate::solver::orthonormalize(dirs.to_vec());
    let shift = 10.0;
    let dim = problem.dim();
    for v in &z {
        for a in 0..dim {
            if v[a] == 0.0 {
                continue;
            }
            for b in 0..dim {
                problem.h[(a, b)] += shift * v[a] * v[b];
            }
        }
    }
    problem.eigenvalues(count)
}
