//! Periodic three-body loops stored as truncated series in the orthonormal
//! trigonometric basis, together with the discretized action and its gradient.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, basis_derivative, basis_function, harmonic};
use crate::potential::{potential_gradient, total_potential, Configuration, PotentialSpec};

/// Symmetry the loop is known to satisfy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryFlags {
    pub choreographic: bool,
    pub figure_eight: bool,
}

/// A `T`-periodic loop `q(t)` of the six coordinates.
///
/// `coeffs[6 k + i]` is the coefficient of basis function `phi_k` for coordinate `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicTrajectory {
    pub spec: PotentialSpec,
    period: f64,
    coeffs: Vec<f64>,
    pub flags: SymmetryFlags,
}

/// Action value with its gradient in coefficient space.
#[derive(Debug, Clone)]
pub struct ActionEvaluation {
    pub action: f64,
    pub grad: Vec<f64>,
    pub grad_norm: f64,
}

impl PeriodicTrajectory {
    pub fn new(spec: PotentialSpec, period: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        if coeffs.is_empty() || !coeffs.len().is_multiple_of(6) {
            return Err(Error::Domain(format!(
                "coefficient vector length {} is not a positive multiple of 6",
                coeffs.len()
            )));
        }
        spec.validate()?;
        Ok(PeriodicTrajectory {
            spec,
            period,
            coeffs,
            flags: SymmetryFlags::default(),
        })
    }

    pub fn with_flags(mut self, flags: SymmetryFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Number of basis functions per coordinate.
    pub fn basis_len(&self) -> usize {
        self.coeffs.len() / 6
    }

    /// Highest retained harmonic.
    pub fn max_harmonic(&self) -> usize {
        harmonic(self.basis_len() - 1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Coefficients of coordinate `i` as a contiguous series.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.coeffs.iter().skip(i).step_by(6).copied().collect()
    }

    /// Same loop with `len` basis functions per coordinate (zero padded or truncated).
    pub fn with_basis_len(&self, len: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(6 * len, 0.0);
        PeriodicTrajectory {
            coeffs,
            ..self.clone()
        }
    }

    pub fn with_spec(&self, spec: PotentialSpec) -> Self {
        PeriodicTrajectory { spec, ..self.clone() }
    }

    /// `q + h * delta` for a coefficient-space direction `delta`. Symmetry flags are
    /// dropped since the direction is arbitrary.
    pub fn perturbed(&self, delta: &[f64], h: f64) -> Self {
        let len = self.coeffs.len().max(delta.len());
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(len, 0.0);
        for (c, d) in coeffs.iter_mut().zip(delta) {
            *c += h * d;
        }
        PeriodicTrajectory {
            spec: self.spec,
            period: self.period,
            coeffs,
            flags: SymmetryFlags::default(),
        }
    }

    /// Position and velocity at time `t` by term-wise summation.
    pub fn evaluate(&self, t: f64) -> (Configuration, [f64; 6]) {
        let mut q = [0.0; 6];
        let mut qdot = [0.0; 6];
        for k in 0..self.basis_len() {
            let phi = basis_function(k, self.period, t);
            let dphi = basis_derivative(k, self.period, t);
            for i in 0..6 {
                let c = self.coeffs[6 * k + i];
                q[i] += c * phi;
                qdot[i] += c * dphi;
            }
        }
        (Configuration(q), qdot)
    }

    /// Smallest grid size that represents every retained harmonic without aliasing.
    pub fn min_grid(&self) -> usize {
        2 * self.max_harmonic() + 1
    }

    fn check_grid(&self, n: usize) -> Result<()> {
        if n < self.min_grid() {
            return Err(Error::Config(format!(
                "{n} quadrature points cannot resolve harmonic {} (need >= {})",
                self.max_harmonic(),
                self.min_grid()
            )));
        }
        Ok(())
    }

    /// Positions at `t_j = j T / n`.
    pub fn positions(&self, n: usize) -> Result<Vec<Configuration>> {
        self.check_grid(n)?;
        Ok(self.grid_values(&self.coeffs, n))
    }

    /// Velocities at `t_j = j T / n`.
    pub fn velocities(&self, n: usize) -> Result<Vec<[f64; 6]>> {
        self.check_grid(n)?;
        let d = self.derivative_coeffs();
        Ok(self.grid_values(&d, n).into_iter().map(|c| c.0).collect())
    }

    pub(crate) fn derivative_coeffs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.coeffs.len()];
        for i in 0..6 {
            let d = fourier::differentiate(&self.coordinate(i), self.period);
            for (k, v) in d.into_iter().enumerate() {
                out[6 * k + i] = v;
            }
        }
        out
    }

    fn grid_values(&self, coeffs: &[f64], n: usize) -> Vec<Configuration> {
        let columns: Vec<Vec<f64>> = (0..6)
            .map(|i| {
                let series: Vec<f64> = coeffs.iter().skip(i).step_by(6).copied().collect();
                fourier::synthesize(&series, self.period, n)
            })
            .collect();
        (0..n)
            .map(|j| Configuration(std::array::from_fn(|i| columns[i][j])))
            .collect()
    }

    /// Kinetic part of the action, `(1/2) sum_k (w k')^2 c_k^2`. Exact for any grid
    /// that resolves the retained harmonics.
    pub fn kinetic_action(&self) -> f64 {
        let omega = self.omega();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let m = harmonic(idx / 6) as f64;
                0.5 * (omega * m * c).powi(2)
            })
            .sum()
    }

    /// `S = int_0^T (|qdot|^2 / 2 - U(q)) dt` by the `n`-point trapezoidal rule.
    pub fn action_value(&self, n: usize) -> Result<f64> {
        let positions = self.positions(n)?;
        let dt = self.period / n as f64;
        let mut potential = 0.0;
        for (j, q) in positions.iter().enumerate() {
            potential += total_potential(&self.spec, q).map_err(|e| e.at_grid(j))?;
        }
        Ok(self.kinetic_action() - dt * potential)
    }

    /// `S(q + h delta) - S(q)` on the `n`-point grid, accumulated as pointwise
    /// differences so that small changes keep their relative precision.
    pub fn action_difference(&self, delta: &[f64], h: f64, n: usize) -> Result<f64> {
        let varied = self.perturbed(delta, h);
        let omega = self.omega();
        let kinetic: f64 = varied
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let m = harmonic(idx / 6) as f64;
                let d = c - self.coeffs.get(idx).copied().unwrap_or(0.0);
                0.5 * (omega * m).powi(2) * d * (2.0 * c - d)
            })
            .sum();
        let before = self.positions(n)?;
        let after = varied.positions(n)?;
        let mut potential = 0.0;
        for (j, (a, b)) in after.iter().zip(&before).enumerate() {
            potential += total_potential(&self.spec, a).map_err(|e| e.at_grid(j))?
                - total_potential(&self.spec, b).map_err(|e| e.at_grid(j))?;
        }
        Ok(kinetic - self.period / n as f64 * potential)
    }

    /// Action and its exact gradient with respect to the coefficients of the
    /// discretized action.
    pub fn action(&self, n: usize) -> Result<ActionEvaluation> {
        let positions = self.positions(n)?;
        let dt = self.period / n as f64;
        let mut potential = 0.0;
        let mut force_columns = vec![vec![0.0; n]; 6];
        for (j, q) in positions.iter().enumerate() {
            potential += total_potential(&self.spec, q).map_err(|e| e.at_grid(j))?;
            let g = potential_gradient(&self.spec, q).map_err(|e| e.at_grid(j))?;
            for i in 0..6 {
                force_columns[i][j] = g[i];
            }
        }
        let len = self.basis_len();
        let omega = self.omega();
        let mut grad = vec![0.0; self.coeffs.len()];
        for (i, column) in force_columns.iter().enumerate() {
            let proj = fourier::project(column, self.period, len);
            for k in 0..len {
                let m = harmonic(k) as f64;
                grad[6 * k + i] = (omega * m).powi(2) * self.coeffs[6 * k + i] - proj[k];
            }
        }
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        Ok(ActionEvaluation {
            action: self.kinetic_action() - dt * potential,
            grad,
            grad_norm,
        })
    }

    /// Maximum over `t` of the x coordinate of body 1.
    pub fn x_max(&self) -> f64 {
        let x = self.coordinate(0);
        let n = (8 * x.len()).max(2048);
        let samples = fourier::synthesize(&x, self.period, n);
        let (j, _) = samples
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
        let dx = fourier::differentiate(&x, self.period);
        let ddx = fourier::differentiate(&dx, self.period);
        let eval = |c: &[f64], t: f64| -> f64 {
            c.iter().enumerate().map(|(k, a)| a * basis_function(k, self.period, t)).sum()
        };
        let mut t = j as f64 * self.period / n as f64;
        for _ in 0..20 {
            let curvature = eval(&ddx, t);
            if curvature >= 0.0 {
                break;
            }
            let step = eval(&dx, t) / curvature;
            t -= step;
            if step.abs() < 1e-15 * self.period {
                break;
            }
        }
        eval(&x, t).max(samples[j])
    }

    /// Scale a solution of a homogeneous (or log) problem by `lambda` in length.
    /// Time is stretched by `lambda^(1 + a/2)` so the result again solves the
    /// equations of motion.
    pub fn rescale_homogeneous(&self, lambda: f64) -> Result<Self> {
        let a = self.spec.exponent().ok_or_else(|| {
            Error::Unsupported("the Lennard-Jones potential has an intrinsic length scale".into())
        })?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("scale factor must be positive, got {lambda}")));
        }
        let mu = lambda.powf(1.0 + 0.5 * a);
        let factor = lambda * mu.sqrt();
        Ok(PeriodicTrajectory {
            spec: self.spec,
            period: mu * self.period,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
            flags: self.flags,
        })
    }

    /// Rescale so that `x_max` equals `target`.
    pub fn rescale_to_x_max(&self, target: f64) -> Result<Self> {
        self.rescale_homogeneous(target / self.x_max())
    }

    /// Relative size of the highest retained harmonic, `max |c_k| over the last
    /// harmonic / max |c|`.
    pub fn tail_ratio(&self) -> f64 {
        let len = self.basis_len();
        let top = harmonic(len - 1);
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let tail = (0..len)
            .filter(|&k| harmonic(k) == top)
            .flat_map(|k| self.coeffs[6 * k..6 * k + 6].iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            0.0
        } else {
            tail / max
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three bodies on a circle, 120 degrees apart, each with a small wobble.
    fn sample_loop(spec: PotentialSpec) -> PeriodicTrajectory {
        let period: f64 = 6.0;
        let m = 9;
        let mut coeffs = vec![0.0; 6 * m];
        let s = (period / 2.0).sqrt();
        for b in 0..3 {
            let phase = 2.0 * PI * b as f64 / 3.0;
            // x = cos(wt + phase), y = sin(wt + phase)
            coeffs[6 * 2 + 2 * b] = s * phase.cos();
            coeffs[6 + 2 * b] = -s * phase.sin();
            coeffs[6 * 2 + 2 * b + 1] = s * phase.sin();
            coeffs[6 + 2 * b + 1] = s * phase.cos();
            coeffs[6 * 3 + 2 * b] = 0.03 * (b as f64 + 1.0);
            coeffs[6 * 6 + 2 * b + 1] = -0.02;
        }
        PeriodicTrajectory::new(spec, period, coeffs).unwrap()
    }

    #[test]
    fn constant_loop() {
        let mut coeffs = vec![0.0; 6 * 3];
        coeffs[..6].copy_from_slice(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let traj = PeriodicTrajectory::new(PotentialSpec::Log, 4.0, coeffs).unwrap();
        let (q, v) = traj.evaluate(1.3);
        assert!((q.0[2] - 3.0 / 2.0).abs() < 1e-15);
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn evaluation_is_periodic() {
        let traj = sample_loop(PotentialSpec::LennardJones);
        for &t in &[0.0, 0.4, 3.3] {
            let (a, va) = traj.evaluate(t);
            let (b, vb) = traj.evaluate(t + traj.period());
            for i in 0..6 {
                assert!((a.0[i] - b.0[i]).abs() < 1e-13 * (1.0 + a.0[i].abs()));
                assert!((va[i] - vb[i]).abs() < 1e-13 * (1.0 + va[i].abs()));
            }
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let traj = sample_loop(PotentialSpec::LennardJones);
        let h = 1e-5;
        for &t in &[0.2, 1.9, 4.4] {
            let (_, v) = traj.evaluate(t);
            let (qp, _) = traj.evaluate(t + h);
            let (qm, _) = traj.evaluate(t - h);
            for i in 0..6 {
                let fd = (qp.0[i] - qm.0[i]) / (2.0 * h);
                assert!((fd - v[i]).abs() <= 1e-8 * v[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn grid_positions_match_pointwise_evaluation() {
        let traj = sample_loop(PotentialSpec::Log);
        let n = 30;
        let grid = traj.positions(n).unwrap();
        let vel = traj.velocities(n).unwrap();
        for j in [0, 7, 29] {
            let (q, v) = traj.evaluate(j as f64 * traj.period() / n as f64);
            for i in 0..6 {
                assert!((grid[j].0[i] - q.0[i]).abs() < 1e-13);
                assert!((vel[j][i] - v[i]).abs() < 1e-13);
            }
        }
        assert!(traj.positions(8).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let traj = sample_loop(PotentialSpec::Homogeneous { a: 1.0 });
        let n = 60;
        let eval = traj.action(n).unwrap();
        let h = 1e-6;
        for idx in [0, 7, 13, 20, 33, 47] {
            let mut e = vec![0.0; traj.coeffs().len()];
            e[idx] = 1.0;
            let sp = traj.perturbed(&e, h).action_value(n).unwrap();
            let sm = traj.perturbed(&e, -h).action_value(n).unwrap();
            let fd = (sp - sm) / (2.0 * h);
            assert!((fd - eval.grad[idx]).abs() < 1e-6 * eval.grad[idx].abs().max(1.0), "{idx}");
        }
    }

    #[test]
    fn collision_names_grid_index() {
        let coeffs = vec![0.0; 6 * 3];
        let traj = PeriodicTrajectory::new(PotentialSpec::LennardJones, 1.0, coeffs).unwrap();
        match traj.action(6) {
            Err(Error::Collision { grid_index: Some(0), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lennard_jones_cannot_rescale() {
        let traj = sample_loop(PotentialSpec::LennardJones);
        assert!(matches!(traj.rescale_homogeneous(2.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rescale_identity() {
        let traj = sample_loop(PotentialSpec::Homogeneous { a: 1.0 });
        assert_eq!(traj.rescale_homogeneous(1.0).unwrap(), traj);
    }

    #[test]
    fn x_max_of_circle() {
        let traj = sample_loop(PotentialSpec::Log);
        let direct = (0..20000)
            .map(|j| traj.evaluate(j as f64 * traj.period() / 20000.0).0 .0[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((traj.x_max() - direct).abs() < 1e-8);
    }
}
