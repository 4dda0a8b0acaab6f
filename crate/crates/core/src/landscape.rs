//! The action around a solution along eigenfunction directions: rays, scans over a
//! degenerate pair, the cubic estimate of the distance to a neighbouring critical
//! point, distances between trajectories and Newton refinement of nearby critical
//! points.

use std::f64::consts::PI;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{harmonic, is_sine};
use crate::hessian::dot;
use crate::io::sig17;
use crate::solver::{find_solution, Constraint, SolveReport, SolverOptions, Target};
use crate::symmetry::{apply_sigma2, operator_matrix};
use crate::trajectory::PeriodicTrajectory;

/// `cos(theta) psi_s + sin(theta) psi_s+1` for an orthonormal pair.
#[derive(Debug, Clone)]
pub struct MixedDirection {
    pub pair: [Vec<f64>; 2],
    pub theta: f64,
}

impl MixedDirection {
    pub fn new(first: Vec<f64>, second: Vec<f64>, theta: f64) -> Self {
        MixedDirection {
            pair: [first, second],
            theta,
        }
    }

    pub fn psi(&self) -> Vec<f64> {
        let (s, c) = self.theta.sin_cos();
        self.pair[0].iter().zip(&self.pair[1]).map(|(a, b)| c * a + s * b).collect()
    }

    /// Mixing angle whose direction is even under `sigma2`, so that the variated
    /// orbit is symmetric about the x-axis when the pair is even under `sigma1`.
    /// Of the two opposite choices, the one in `[0, pi)` is returned.
    pub fn x_axis_angle(&self) -> f64 {
        let s = operator_matrix(&self.pair, apply_sigma2);
        let m = Mat::<f64>::from_fn(2, 2, |a, b| 0.5 * (s[a][b] + s[b][a]));
        let theta = match m.self_adjoint_eigen(Side::Lower) {
            Ok(evd) => {
                let u = evd.U();
                // eigenvalues ascend, so the +1 eigenvector is the second column
                u[(1, 1)].atan2(u[(0, 1)])
            }
            Err(_) => 0.0,
        };
        theta.rem_euclid(PI)
    }

    /// Of `theta` and `theta + pi`, the angle along which the action rises less at
    /// amplitude `h`.
    pub fn downhill(&self, traj: &PeriodicTrajectory, theta: f64, h: f64, n: usize) -> Result<f64> {
        let at = |t: f64| traj.action_difference(&MixedDirection::new(self.pair[0].clone(), self.pair[1].clone(), t).psi(), h, n);
        Ok(if at(theta + PI)? < at(theta)? { (theta + PI).rem_euclid(2.0 * PI) } else { theta })
    }
}

/// `(theta, S(q + h psi(theta)) - S(q))` at `samples` equally spaced angles.
pub fn angular_profile(traj: &PeriodicTrajectory, pair: &[Vec<f64>; 2], h: f64, samples: usize, n: usize) -> Result<Vec<(f64, f64)>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / samples as f64;
            let psi = MixedDirection::new(pair[0].clone(), pair[1].clone(), theta).psi();
            Ok((theta, traj.action_difference(&psi, h, n)?))
        })
        .collect()
}

/// Angles of the local minima of a periodic angular profile, refined by parabolic
/// interpolation.
pub fn angular_minima(profile: &[(f64, f64)]) -> Vec<f64> {
    let len = profile.len();
    let step = 2.0 * PI / len as f64;
    (0..len)
        .filter_map(|i| {
            let (a, b, c) = (profile[(i + len - 1) % len].1, profile[i].1, profile[(i + 1) % len].1);
            (b < a && b <= c).then(|| {
                let t = profile[i].0;
                parabola_vertex([t - step, t, t + step], [a, b, c]).rem_euclid(2.0 * PI)
            })
        })
        .collect()
}

/// Action differences `S(q + x psi_s + y psi_s+1) - S(q)` on a square grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanGrid {
    #[serde(serialize_with = "sig17::vec")]
    pub xs: Vec<f64>,
    #[serde(serialize_with = "sig17::vec")]
    pub ys: Vec<f64>,
    /// `values[i][j]` at `(xs[j], ys[i])`; `None` where bodies collide.
    pub values: Vec<Vec<Option<f64>>>,
    pub missing: usize,
}

impl ScanGrid {
    /// Bilinear-free lookup of the grid point nearest to `(h cos theta, h sin theta)`.
    pub fn nearest(&self, h: f64, theta: f64) -> Option<f64> {
        let (x, y) = (h * theta.cos(), h * theta.sin());
        let near = |axis: &[f64], v: f64| {
            axis.iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs()))
                .map(|(i, _)| i)
        };
        self.values[near(&self.ys, y)?][near(&self.xs, x)?]
    }

    /// Grid points that are lower than all eight neighbours.
    pub fn local_minima(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for i in 1..self.ys.len().saturating_sub(1) {
            for j in 1..self.xs.len().saturating_sub(1) {
                let Some(v) = self.values[i][j] else { continue };
                let lower = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        (di == 0 && dj == 0)
                            || self.values[(i as i64 + di) as usize][(j as i64 + dj) as usize].is_some_and(|w| w > v)
                    })
                });
                if lower {
                    out.push((self.xs[j], self.ys[i], v));
                }
            }
        }
        out
    }
}

fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}

/// Scan `S(q + x psi_1 + y psi_2) - S(q)` over `[-radius, radius]^2`.
pub fn scan_2d(traj: &PeriodicTrajectory, pair: &[Vec<f64>; 2], radius: f64, points: usize, n: usize) -> Result<ScanGrid> {
    if points < 2 {
        return Err(Error::Config("a scan needs at least two points per axis".into()));
    }
    traj.action_value(n)?;
    let axis = linspace(-radius, radius, points);
    let values: Vec<Vec<Option<f64>>> = axis
        .par_iter()
        .map(|&y| {
            axis.iter()
                .map(|&x| {
                    let offset: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| x * a + y * b).collect();
                    traj.action_difference(&offset, 1.0, n).ok()
                })
                .collect()
        })
        .collect();
    let missing = values.iter().flatten().filter(|v| v.is_none()).count();
    Ok(ScanGrid {
        xs: axis.clone(),
        ys: axis,
        values,
        missing,
    })
}

/// Kind of a sampled extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Minimum,
    Maximum,
}

/// `S(q + h psi)` along a ray, with the cubic model `S(q) + lambda h^2 / 2 + S3 h^3 / 6`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayScan {
    #[serde(serialize_with = "sig17::vec")]
    pub h: Vec<f64>,
    /// `NaN` past a collision.
    #[serde(serialize_with = "sig17::vec")]
    pub action: Vec<f64>,
    #[serde(serialize_with = "sig17::vec")]
    pub cubic: Vec<f64>,
    #[serde(serialize_with = "sig17::value")]
    pub lambda: f64,
    /// Third derivative used by the cubic model, `-2 lambda / h*`.
    #[serde(serialize_with = "sig17::option")]
    pub s3: Option<f64>,
    /// Interior extrema, located by parabolic interpolation.
    pub extrema: Vec<(f64, Extremum)>,
}

/// Sample `S(q + h psi)` at `hs` (ascending). `h_star`, when given, fixes the cubic
/// model so that its second stationary point sits at `h_star`.
pub fn scan_1d(traj: &PeriodicTrajectory, psi: &[f64], hs: &[f64], lambda: f64, h_star: Option<f64>, n: usize) -> Result<RayScan> {
    let base = traj.action_value(n)?;
    let action: Vec<f64> = hs
        .par_iter()
        .map(|&h| traj.perturbed(psi, h).action_value(n).unwrap_or(f64::NAN))
        .collect();
    let s3 = h_star.filter(|h| *h != 0.0).map(|h| -2.0 * lambda / h);
    let cubic = hs
        .iter()
        .map(|&h| base + 0.5 * lambda * h * h + s3.map_or(0.0, |s| s * h.powi(3) / 6.0))
        .collect();
    let mut extrema = Vec::new();
    for i in 1..hs.len().saturating_sub(1) {
        let (a, b, c) = (action[i - 1], action[i], action[i + 1]);
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            continue;
        }
        let kind = if b < a && b < c {
            Extremum::Minimum
        } else if b > a && b > c {
            Extremum::Maximum
        } else {
            continue;
        };
        extrema.push((parabola_vertex([hs[i - 1], hs[i], hs[i + 1]], [a, b, c]), kind));
    }
    Ok(RayScan {
        h: hs.to_vec(),
        action,
        cubic,
        lambda,
        s3,
        extrema,
    })
}

fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d2 - d1) / (x[2] - x[0]);
    if curvature == 0.0 {
        return x[1];
    }
    0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature)
}

/// Stationary point of `S(q + h psi)` near `guess` with `|h - guess| < width`, by
/// golden-section search on `sign * S` (`sign = 1` for a minimum, `-1` for a maximum).
pub fn locate_extremum(traj: &PeriodicTrajectory, psi: &[f64], guess: f64, width: f64, kind: Extremum, n: usize) -> Result<f64> {
    let sign = if kind == Extremum::Minimum { 1.0 } else { -1.0 };
    let f = |h: f64| traj.perturbed(psi, h).action_value(n).map(|s| sign * s);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (guess - width, guess + width);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Distance `sqrt(6 |S(q') - S(q)| / |lambda|)` at which the cubic model of the
/// action along an eigendirection has its second stationary point.
pub fn estimate_h(s_q: f64, s_qprime: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::Domain("estimate_h needs a non-zero eigenvalue".into()));
    }
    Ok((6.0 * (s_qprime - s_q).abs() / lambda.abs()).sqrt())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Distance {
    /// `sqrt(int_0^T |q - q'|^2 dt)`.
    #[serde(serialize_with = "sig17::value")]
    pub raw: f64,
    /// Minimum over time shifts of `q'`.
    #[serde(serialize_with = "sig17::value")]
    pub aligned: f64,
    /// Shift achieving `aligned`.
    #[serde(serialize_with = "sig17::value")]
    pub shift: f64,
}

/// Time shift `q(t + tau)` in coefficient space.
pub fn time_shifted(coeffs: &[f64], period: f64, tau: f64) -> Vec<f64> {
    let len = coeffs.len() / 6;
    let omega = 2.0 * PI / period;
    let mut out = coeffs.to_vec();
    for k in 1..len {
        if !is_sine(k) || k + 1 >= len {
            continue;
        }
        let (s, c) = (harmonic(k) as f64 * omega * tau).sin_cos();
        for i in 0..6 {
            let (a, b) = (coeffs[6 * k + i], coeffs[6 * (k + 1) + i]);
            // a sin(m w (t + tau)) + b cos(m w (t + tau))
            out[6 * k + i] = a * c - b * s;
            out[6 * (k + 1) + i] = a * s + b * c;
        }
    }
    out
}

fn coefficient_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// L2 distance between two trajectories of equal period. The basis is orthonormal
/// on `[0, T]`, so the integral equals the coefficient distance exactly.
pub fn trajectory_distance(q: &PeriodicTrajectory, qprime: &PeriodicTrajectory) -> Result<Distance> {
    let period = q.period();
    if (period - qprime.period()).abs() > 1e-12 * period {
        return Err(Error::Domain(format!(
            "trajectory distance needs equal periods ({} vs {})",
            period,
            qprime.period()
        )));
    }
    let raw = coefficient_distance(q.coeffs(), qprime.coeffs());
    let at = |tau: f64| coefficient_distance(q.coeffs(), &time_shifted(qprime.coeffs(), period, tau));
    let samples = 6 * qprime.max_harmonic().max(1) * 4;
    let step = period / samples as f64;
    let (mut best_tau, mut best) = (0.0, raw);
    for i in 1..samples {
        let d = at(i as f64 * step);
        if d < best {
            best = d;
            best_tau = i as f64 * step;
        }
    }
    // golden section within one sample of the best grid point
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best_tau - step, best_tau + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-12 * period {
        if at(c) < at(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let tau = 0.5 * (a + b);
    let refined = at(tau);
    let (aligned, shift) = if refined < best { (refined, tau) } else { (best, best_tau) };
    Ok(Distance {
        raw,
        aligned: aligned.min(raw),
        shift: if aligned <= raw { shift.rem_euclid(period) } else { 0.0 },
    })
}

/// Outcome of a refinement from an offset seed.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub traj: PeriodicTrajectory,
    pub report: SolveReport,
    /// Distance from the unperturbed solution.
    pub distance_from_base: f64,
    /// Set when Newton returned to the unperturbed solution.
    pub collapsed: bool,
}

/// Newton refinement in the full periodic coefficient space (conservation
/// directions deflated) from `q + offset`.
pub fn refine_critical_point(traj: &PeriodicTrajectory, offset: &[f64], options: &SolverOptions) -> Result<Refinement> {
    let seed = traj.perturbed(offset, 1.0);
    let options = SolverOptions {
        newton_first: true,
        adapt_basis: false,
        ..options.clone()
    };
    let (solved, report) = find_solution(traj.spec, Constraint::Periodic, Target::Period(traj.period()), &seed, &options)?;
    let distance_from_base = coefficient_distance(solved.coeffs(), traj.coeffs());
    Ok(Refinement {
        collapsed: distance_from_base < 1e-6,
        traj: solved,
        report,
        distance_from_base,
    })
}

/// `psi` or `-psi`, whichever points from `q` towards `target`.
pub fn oriented_towards(psi: &[f64], q: &PeriodicTrajectory, target: &PeriodicTrajectory) -> Vec<f64> {
    let (h, _) = closest_on_ray(q, psi, target);
    let sign = if h < 0.0 { -1.0 } else { 1.0 };
    psi.iter().map(|x| sign * x).collect()
}

/// Amplitude `h` of the point `q + h psi` closest to `target`, and the time-averaged
/// squared distance `|q + h psi - target|^2 / T` that remains.
pub fn closest_on_ray(q: &PeriodicTrajectory, psi: &[f64], target: &PeriodicTrajectory) -> (f64, f64) {
    let len = q.coeffs().len().max(target.coeffs().len()).max(psi.len());
    let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    let diff: Vec<f64> = (0..len).map(|i| get(target.coeffs(), i) - get(q.coeffs(), i)).collect();
    let norm = dot(psi, psi);
    let h = (0..psi.len()).map(|i| psi[i] * diff[i]).sum::<f64>() / norm;
    let rest: f64 = (0..len).map(|i| (diff[i] - h * get(psi, i)).powi(2)).sum();
    (h, rest / q.period())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use proptest::prelude::*;

    fn sample(len: usize, seed: f64) -> PeriodicTrajectory {
        let coeffs = (0..6 * len).map(|i| ((i as f64 + seed) * 0.913).sin() / (1 + i / 6) as f64).collect();
        PeriodicTrajectory::new(PotentialSpec::Homogeneous { a: 1.0 }, 7.0, coeffs).unwrap()
    }

    #[test]
    fn estimate_h_closed_form() {
        assert_eq!(estimate_h(1.0, 1.0, 0.3).unwrap(), 0.0);
        assert!((estimate_h(0.0, 2.0, 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(estimate_h(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn distance_to_self_and_shift() {
        let q = sample(9, 0.0);
        let d = trajectory_distance(&q, &q).unwrap();
        assert_eq!(d.raw, 0.0);
        let shifted = PeriodicTrajectory::new(q.spec, q.period(), time_shifted(q.coeffs(), q.period(), 1.3)).unwrap();
        let d = trajectory_distance(&q, &shifted).unwrap();
        assert!(d.raw > 0.1);
        assert!(d.aligned < 1e-8, "{d:?}");
    }

    #[test]
    fn unequal_periods_rejected() {
        let q = sample(5, 0.0);
        let r = PeriodicTrajectory::new(q.spec, 8.0, q.coeffs().to_vec()).unwrap();
        assert!(matches!(trajectory_distance(&q, &r), Err(Error::Domain(_))));
    }

    #[test]
    fn shift_matches_pointwise_evaluation() {
        let q = sample(7, 0.4);
        let tau = 0.77;
        let s = PeriodicTrajectory::new(q.spec, q.period(), time_shifted(q.coeffs(), q.period(), tau)).unwrap();
        for t in [0.0, 1.1, 5.5] {
            let (a, _) = q.evaluate(t + tau);
            let (b, _) = s.evaluate(t);
            for i in 0..6 {
                assert!((a.0[i] - b.0[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertex_of_parabola() {
        let f = |x: f64| 2.0 * (x - 0.3).powi(2) + 1.0;
        let v = parabola_vertex([0.0, 0.5, 1.2], [f(0.0), f(0.5), f(1.2)]);
        assert!((v - 0.3).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn aligned_never_exceeds_raw(s1 in 0.0f64..10.0, s2 in 0.0f64..10.0) {
            let d = trajectory_distance(&sample(6, s1), &sample(6, s2)).unwrap();
            prop_assert!(d.aligned <= d.raw + 1e-15);
        }

        #[test]
        fn estimate_h_scales_with_sqrt(ds in 1e-8f64..1.0, lambda in 1e-4f64..10.0) {
            let a = estimate_h(0.0, ds, lambda).unwrap();
            let b = estimate_h(0.0, 2.0 * ds, lambda).unwrap();
            prop_assert!((b / a - 2f64.sqrt()).abs() < 1e-12);
        }
    }
}
