//! Critical points of the discretized action inside symmetry-constrained
//! coefficient subspaces.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{basis_index, harmonic};
use crate::hessian::{self, dot, HessianProblem, DEFAULT_GRID};
use crate::potential::PotentialSpec;
use crate::trajectory::{PeriodicTrajectory, SymmetryFlags};

/// Which function space the action is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Choreographies of figure-eight type in the canonical frame: body 1 is at the
    /// origin at `t = 0`, `x` is a sine series of odd harmonics and `y` a sine series
    /// of even harmonics (no multiples of 3 in either).
    FigureEight,
    /// Fixed points of the cyclic operator (centre of mass at the origin).
    Choreographic,
    /// Unconstrained periodic loops.
    Periodic,
}

/// What is held fixed during a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Solve at this period.
    Period(f64),
    /// Solve at the guess's period, then rescale to this `x_max` (homogeneous only).
    XMax(f64),
}

/// An orthonormal coordinate system for a symmetry subspace of the `6M` coefficients.
/// Each column has at most six nonzero entries.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub constraint: Constraint,
    pub full_dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl Subspace {
    pub fn new(constraint: Constraint, len: usize) -> Self {
        let full_dim = 6 * len;
        let m_max = harmonic(len - 1);
        let mut columns = Vec::new();
        let inv = 1.0 / 3f64.sqrt();
        match constraint {
            Constraint::Periodic => {
                columns = (0..full_dim).map(|i| vec![(i, 1.0)]).collect();
            }
            Constraint::FigureEight => {
                for m in (1..=m_max).filter(|m| m % 3 != 0) {
                    let axis = if m % 2 == 1 { 0 } else { 1 };
                    let (s, c) = (basis_index(m, true), basis_index(m, false));
                    columns.push(
                        (0..3)
                            .flat_map(|b| {
                                let theta = 2.0 * PI * (m * b) as f64 / 3.0;
                                [(6 * s + 2 * b + axis, inv * theta.cos()), (6 * c + 2 * b + axis, inv * theta.sin())]
                            })
                            .collect(),
                    );
                }
            }
            Constraint::Choreographic => {
                for m in (1..=m_max).filter(|m| m % 3 != 0) {
                    let (s, c) = (basis_index(m, true), basis_index(m, false));
                    for axis in 0..2 {
                        // body 1 carries sin(m w t); later bodies are shifted by b T / 3
                        columns.push(
                            (0..3)
                                .flat_map(|b| {
                                    let theta = 2.0 * PI * (m * b) as f64 / 3.0;
                                    [(6 * s + 2 * b + axis, inv * theta.cos()), (6 * c + 2 * b + axis, inv * theta.sin())]
                                })
                                .collect(),
                        );
                        columns.push(
                            (0..3)
                                .flat_map(|b| {
                                    let theta = 2.0 * PI * (m * b) as f64 / 3.0;
                                    [(6 * s + 2 * b + axis, -inv * theta.sin()), (6 * c + 2 * b + axis, inv * theta.cos())]
                                })
                                .collect(),
                        );
                    }
                }
            }
        }
        Subspace {
            constraint,
            full_dim,
            columns,
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    /// Harmonic carried by each column.
    pub fn harmonics(&self) -> Vec<usize> {
        self.columns.iter().map(|col| harmonic(col[0].0 / 6)).collect()
    }

    /// `P^T c`.
    pub fn restrict(&self, c: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(i, w)| w * c[i]).sum())
            .collect()
    }

    /// `P x`.
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.full_dim];
        for (col, &xa) in self.columns.iter().zip(x) {
            for &(i, w) in col {
                out[i] += w * xa;
            }
        }
        out
    }

    /// `P P^T c`, the orthogonal projection onto the subspace.
    pub fn project(&self, c: &[f64]) -> Vec<f64> {
        self.lift(&self.restrict(c))
    }

    /// `P^T H P`.
    pub fn reduce(&self, h: &Mat<f64>) -> Mat<f64> {
        if self.constraint == Constraint::Periodic {
            return h.clone();
        }
        let d = self.dim();
        let mut out = Mat::<f64>::zeros(d, d);
        for a in 0..d {
            for b in 0..=a {
                let mut s = 0.0;
                for &(i, wi) in &self.columns[a] {
                    for &(j, wj) in &self.columns[b] {
                        s += wi * h[(i, j)] * wj;
                    }
                }
                out[(a, b)] = s;
                out[(b, a)] = s;
            }
        }
        out
    }
}

/// Tuning knobs for [`find_solution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Quadrature points (multiple of 3).
    pub n: usize,
    pub max_iterations: usize,
    /// Gradient norm below which the far-field phase hands over to Newton.
    pub newton_switch: f64,
    /// Relative convergence threshold on the gradient norm.
    pub tolerance: f64,
    /// Basis functions per coordinate are doubled (as harmonics) up to this size
    /// while the top harmonic exceeds `1e-12` of the largest coefficient.
    pub max_basis_len: usize,
    /// Whether to grow the basis at all.
    pub adapt_basis: bool,
    /// Start with plain Newton steps, which converge to nearby saddles as well as
    /// minima, and fall back to the far-field phase only if that fails. Meant for
    /// warm starts from a neighbouring solution.
    pub newton_first: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            n: DEFAULT_GRID,
            max_iterations: 200,
            newton_switch: 1e-3,
            tolerance: 1e-10,
            max_basis_len: 641,
            adapt_basis: true,
            newton_first: false,
        }
    }
}

/// Diagnostics of a finished solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub action: f64,
    pub basis_len: usize,
    pub n: usize,
}

/// Convergence threshold on the gradient norm at action `s`.
pub fn converged(grad_norm: f64, action: f64, tolerance: f64) -> bool {
    grad_norm < tolerance * action.abs().max(1.0)
}

/// A figure-eight shaped Lissajous loop `x = A sin(w t)`, `y = B sin(2 w t)` with
/// the three bodies a third of a period apart.
pub fn lissajous_seed(spec: PotentialSpec, period: f64, amp_x: f64, amp_y: f64, len: usize) -> Result<PeriodicTrajectory> {
    let sub = Subspace::new(Constraint::FigureEight, len);
    let mut x = vec![0.0; sub.dim()];
    let scale = (1.5 * period).sqrt();
    // columns are ordered by harmonic 1, 2, 4, 5, ...
    x[0] = amp_x * scale;
    if x.len() > 1 {
        x[1] = amp_y * scale;
    }
    Ok(PeriodicTrajectory::new(spec, period, sub.lift(&x))?.with_flags(flags_for(Constraint::FigureEight)))
}

/// Seed for the figure-eight: a Lissajous loop with `x_max = 2`, sized from the
/// virial relation of the homogeneous potential.
pub fn figure_eight_seed(spec: PotentialSpec, len: usize) -> Result<PeriodicTrajectory> {
    let period = match spec {
        PotentialSpec::LennardJones => 60.0,
        _ => 16.0,
    };
    lissajous_seed(spec, period, 2.0, 0.7, len)
}

pub fn flags_for(constraint: Constraint) -> SymmetryFlags {
    match constraint {
        Constraint::FigureEight => SymmetryFlags {
            choreographic: true,
            figure_eight: true,
        },
        Constraint::Choreographic => SymmetryFlags {
            choreographic: true,
            figure_eight: false,
        },
        Constraint::Periodic => SymmetryFlags::default(),
    }
}

/// Find a critical point of the action in the constraint subspace, starting from
/// `guess`.
pub fn find_solution(
    spec: PotentialSpec,
    constraint: Constraint,
    target: Target,
    guess: &PeriodicTrajectory,
    options: &SolverOptions,
) -> Result<(PeriodicTrajectory, SolveReport)> {
    let period = match target {
        Target::Period(t) => t,
        Target::XMax(_) => {
            if spec.exponent().is_none() {
                return Err(Error::Unsupported("x_max targets need a homogeneous potential".into()));
            }
            guess.period()
        }
    };
    let sub = Subspace::new(constraint, guess.basis_len());
    let start = PeriodicTrajectory::new(spec, period, sub.project(guess.coeffs()))?;
    let mut traj = start;
    let mut report;
    let mut total_iterations = 0;
    loop {
        let (solved, r) = match newton_solve(&traj, constraint, options) {
            Err(_) if options.newton_first => {
                let fallback = SolverOptions {
                    newton_first: false,
                    ..options.clone()
                };
                newton_solve(&traj, constraint, &fallback)?
            }
            other => other?,
        };
        total_iterations += r.iterations;
        report = r;
        traj = solved;
        let len = traj.basis_len();
        let next = 2 * len - 1;
        if !options.adapt_basis || traj.tail_ratio() < 1e-12 || next > options.max_basis_len || traj.min_grid() * 2 > options.n
        {
            break;
        }
        traj = traj.with_basis_len(next);
    }
    report.iterations = total_iterations;
    traj = traj.with_flags(flags_for(constraint));
    if let Target::XMax(x_max) = target {
        traj = traj.rescale_to_x_max(x_max)?;
        let eval = traj.action(options.n)?;
        report.grad_norm = eval.grad_norm;
        report.action = eval.action;
    }
    Ok((traj, report))
}

/// Newton iteration on the action restricted to the constraint subspace, with
/// saddle-free modified Newton steps while the gradient is large.
pub fn newton_solve(
    start: &PeriodicTrajectory,
    constraint: Constraint,
    options: &SolverOptions,
) -> Result<(PeriodicTrajectory, SolveReport)> {
    let len = start.basis_len();
    let sub = Subspace::new(constraint, len);
    let n = options.n;
    let mut traj = start.clone();
    let mut eval = traj.action(n)?;
    for iteration in 0..options.max_iterations {
        if converged(eval.grad_norm, eval.action, options.tolerance) {
            return Ok((
                traj,
                SolveReport {
                    iterations: iteration,
                    grad_norm: eval.grad_norm,
                    action: eval.action,
                    basis_len: len,
                    n,
                },
            ));
        }
        let problem = HessianProblem::new(&traj, len, n.max(grid_for(len)))?;
        let hr = sub.reduce(&problem.h);
        let gr = sub.restrict(&eval.grad);
        let zero_modes = deflation_basis(&traj, &sub);
        if options.newton_first && iteration >= 30 {
            break;
        }
        let far = !options.newton_first && eval.grad_norm > options.newton_switch;
        let step = if far {
            saddle_free_step(&hr, &gr, &zero_modes)?
        } else {
            bordered_newton_step(&hr, &gr, &zero_modes)?
        };
        let dc = sub.lift(&step);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-10 {
            let trial = traj.perturbed(&dc, alpha).with_flags(traj.flags);
            match trial.action(n) {
                Ok(e) => {
                    let ok = if far {
                        e.action <= eval.action + 1e-4 * alpha * dot(&gr, &step)
                            || e.grad_norm < 0.5 * eval.grad_norm
                    } else {
                        e.grad_norm < (1.0 - 1e-4 * alpha) * eval.grad_norm
                    };
                    if ok {
                        accepted = Some((trial, e));
                        break;
                    }
                }
                Err(Error::Collision { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((t, e)) => {
                traj = t;
                eval = e;
            }
            None => {
                if converged(eval.grad_norm, eval.action, 10.0 * options.tolerance) {
                    break;
                }
                return Err(Error::Convergence {
                    iterations: iteration,
                    grad_norm: eval.grad_norm,
                });
            }
        }
    }
    if converged(eval.grad_norm, eval.action, options.tolerance) {
        return Ok((
            traj,
            SolveReport {
                iterations: options.max_iterations,
                grad_norm: eval.grad_norm,
                action: eval.action,
                basis_len: len,
                n,
            },
        ));
    }
    Err(Error::Convergence {
        iterations: options.max_iterations,
        grad_norm: eval.grad_norm,
    })
}

/// Smallest valid grid for assembling `H` with `len` basis functions.
pub fn grid_for(len: usize) -> usize {
    let need = 2 * hessian::required_kmax(len) + 1;
    need.div_ceil(3) * 3
}

/// Orthonormal basis (in subspace coordinates) of the continuous-symmetry
/// directions that stay inside the subspace.
pub(crate) fn deflation_basis(traj: &PeriodicTrajectory, sub: &Subspace) -> Vec<Vec<f64>> {
    let dirs = hessian::conservation_directions(traj, traj.basis_len());
    let candidates: Vec<Vec<f64>> = match sub.constraint {
        Constraint::FigureEight => Vec::new(),
        Constraint::Choreographic => dirs[..2].iter().map(|d| sub.restrict(d)).collect(),
        Constraint::Periodic => dirs.iter().map(|d| sub.restrict(d)).collect(),
    };
    orthonormalize(candidates)
}

pub(crate) fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let norm0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                hessian::axpy(-c, q, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 * norm0.max(1e-300) {
            v.iter_mut().for_each(|x| *x /= norm);
            out.push(v);
        }
    }
    out
}

/// `-|H|^(-1) g` on the complement of the deflated directions, with eigenvalue
/// magnitudes floored to keep the step bounded.
fn saddle_free_step(h: &Mat<f64>, g: &[f64], zero_modes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = g.len();
    let mut hp = h.clone();
    // push deflated directions far up the spectrum so they carry no step
    let big = 1e6 * (1.0 + (0..d).map(|i| h[(i, i)].abs()).fold(0.0, f64::max));
    for z in zero_modes {
        for a in 0..d {
            for b in 0..d {
                hp[(a, b)] += big * z[a] * z[b];
            }
        }
    }
    let evd = hp
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigensolver failed in solver: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let scale = (0..d).map(|i| s[i].abs()).fold(0.0, f64::max);
    let floor = 1e-6 * scale.max(1e-12);
    let mut step = vec![0.0; d];
    for c in 0..d {
        let col: Vec<f64> = u.col(c).iter().copied().collect();
        let w = -dot(&col, g) / s[c].abs().max(floor);
        hessian::axpy(w, &col, &mut step);
    }
    Ok(step)
}

/// Solve `[H Z; Z^T 0] [dx; mu] = [-g; 0]`.
fn bordered_newton_step(h: &Mat<f64>, g: &[f64], zero_modes: &[Vec<f64>]) -> Result<Vec<f64>> {
    let d = g.len();
    let z = zero_modes.len();
    let mut a = Mat::<f64>::zeros(d + z, d + z);
    for r in 0..d {
        for c in 0..d {
            a[(r, c)] = h[(r, c)];
        }
    }
    for (k, zk) in zero_modes.iter().enumerate() {
        for r in 0..d {
            a[(r, d + k)] = zk[r];
            a[(d + k, r)] = zk[r];
        }
    }
    let mut rhs = Mat::<f64>::from_fn(d + z, 1, |r, _| if r < d { -g[r] } else { 0.0 });
    let lu = a.partial_piv_lu();
    faer::linalg::solvers::Solve::solve_in_place(&lu, rhs.as_mut());
    let step: Vec<f64> = (0..d).map(|r| rhs[(r, 0)]).collect();
    if step.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("singular Newton system".into()));
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subspaces_are_orthonormal() {
        for constraint in [Constraint::FigureEight, Constraint::Choreographic] {
            let sub = Subspace::new(constraint, 21);
            let d = sub.dim();
            for a in 0..d {
                let mut e = vec![0.0; d];
                e[a] = 1.0;
                let back = sub.restrict(&sub.lift(&e));
                for b in 0..d {
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((back[b] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn figure_eight_subspace_dimension() {
        // harmonics 1..=10 without multiples of 3
        assert_eq!(Subspace::new(Constraint::FigureEight, 21).dim(), 7);
        assert_eq!(Subspace::new(Constraint::Choreographic, 21).dim(), 28);
    }

    #[test]
    fn lissajous_seed_shape() {
        let seed = lissajous_seed(PotentialSpec::Log, 5.0, 1.5, 0.4, 11).unwrap();
        let (q, _) = seed.evaluate(1.25);
        assert!((q.0[0] - 1.5).abs() < 1e-12);
        assert!(q.0[1].abs() < 1e-12);
        let (q2, _) = seed.evaluate(1.25 + 5.0 / 3.0);
        assert!((q.0[2] - q2.0[0]).abs() < 1e-12);
    }
}
