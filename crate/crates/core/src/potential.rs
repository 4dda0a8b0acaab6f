//! Pair potentials of the planar three-body problem and the derivatives of the
//! total potential energy with respect to the six position coordinates.
//!
//! Coordinates are ordered `(x1, y1, x2, y2, x3, y3)`. All functions are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs closer than this are treated as collisions.
pub const COLLISION_DISTANCE: f64 = 1e-8;

/// The three unordered body pairs `(b, c)` with `b < c`.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Which pair potential `u(r)` the bodies interact through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `u(r) = -r^(-a)` with `a > 0`.
    Homogeneous { a: f64 },
    /// `u(r) = log r`, the `a -> 0` member of the homogeneous family.
    Log,
    /// `u(r) = r^(-12) - r^(-6)`.
    LennardJones,
}

impl PotentialSpec {
    /// Homogeneous potential of exponent `a`; `a = 0` maps onto [`PotentialSpec::Log`].
    pub fn homogeneous(a: f64) -> Result<Self> {
        if !a.is_finite() || a < 0.0 {
            return Err(Error::Domain(format!("homogeneous exponent must be >= 0, got {a}")));
        }
        Ok(if a == 0.0 {
            PotentialSpec::Log
        } else {
            PotentialSpec::Homogeneous { a }
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PotentialSpec::Homogeneous { a } if !(a.is_finite() && a > 0.0) => Err(Error::Domain(
                format!("homogeneous exponent must be > 0 (use Log for a = 0), got {a}"),
            )),
            _ => Ok(()),
        }
    }

    /// Degree of homogeneity of `-U`, if the potential has one (0 for the log potential).
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            PotentialSpec::Homogeneous { a } => Some(a),
            PotentialSpec::Log => Some(0.0),
            PotentialSpec::LennardJones => None,
        }
    }

    /// Short human-readable name.
    pub fn describe(&self) -> String {
        match *self {
            PotentialSpec::Homogeneous { a } => format!("homogeneous a={a}"),
            PotentialSpec::Log => "log".to_string(),
            PotentialSpec::LennardJones => "lennard-jones".to_string(),
        }
    }

    /// `(u, u', u'')` at distance `r`, without the collision guard.
    #[inline]
    pub(crate) fn terms(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            PotentialSpec::Homogeneous { a } => {
                let ra = r.powf(-a);
                (-ra, a * ra / r, -a * (a + 1.0) * ra / (r * r))
            }
            PotentialSpec::Log => (r.ln(), 1.0 / r, -1.0 / (r * r)),
            PotentialSpec::LennardJones => {
                let inv2 = 1.0 / (r * r);
                let inv6 = inv2 * inv2 * inv2;
                let inv12 = inv6 * inv6;
                (
                    inv12 - inv6,
                    (-12.0 * inv12 + 6.0 * inv6) / r,
                    (156.0 * inv12 - 42.0 * inv6) * inv2,
                )
            }
        }
    }

    fn checked_terms(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("pair distance must be positive, got {r}")));
        }
        Ok(self.terms(r))
    }

    pub fn pair_potential(&self, r: f64) -> Result<f64> {
        self.checked_terms(r).map(|t| t.0)
    }

    pub fn pair_derivative(&self, r: f64) -> Result<f64> {
        self.checked_terms(r).map(|t| t.1)
    }

    pub fn pair_second_derivative(&self, r: f64) -> Result<f64> {
        self.checked_terms(r).map(|t| t.2)
    }
}

/// Positions of the three bodies, `(x1, y1, x2, y2, x3, y3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration(pub [f64; 6]);

impl Configuration {
    pub fn new(q: [f64; 6]) -> Self {
        Configuration(q)
    }

    pub fn body(&self, b: usize) -> [f64; 2] {
        [self.0[2 * b], self.0[2 * b + 1]]
    }

    /// Separation vector `r_b - r_c` and its length, guarded against collisions.
    fn separation(&self, b: usize, c: usize) -> Result<([f64; 2], f64)> {
        let d = [self.0[2 * b] - self.0[2 * c], self.0[2 * b + 1] - self.0[2 * c + 1]];
        let r = d[0].hypot(d[1]);
        if !(r >= COLLISION_DISTANCE) {
            return Err(Error::Collision {
                bodies: (b + 1, c + 1),
                distance: r,
                grid_index: None,
            });
        }
        Ok((d, r))
    }

    /// Smallest of the three pair distances.
    pub fn min_distance(&self) -> f64 {
        PAIRS
            .iter()
            .map(|&(b, c)| {
                (self.0[2 * b] - self.0[2 * c]).hypot(self.0[2 * b + 1] - self.0[2 * c + 1])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn total_potential(spec: &PotentialSpec, config: &Configuration) -> Result<f64> {
    let mut total = 0.0;
    for &(b, c) in &PAIRS {
        let (_, r) = config.separation(b, c)?;
        total += spec.terms(r).0;
    }
    Ok(total)
}

/// `dU/dq_i`.
pub fn potential_gradient(spec: &PotentialSpec, config: &Configuration) -> Result<[f64; 6]> {
    let mut grad = [0.0; 6];
    for &(b, c) in &PAIRS {
        let (d, r) = config.separation(b, c)?;
        let (_, du, _) = spec.terms(r);
        for k in 0..2 {
            let g = du * d[k] / r;
            grad[2 * b + k] += g;
            grad[2 * c + k] -= g;
        }
    }
    Ok(grad)
}

/// Value, gradient and the 6x6 Hessian `U_ij = d^2U/dq_i dq_j` in one pass.
pub fn potential_derivatives(
    spec: &PotentialSpec,
    config: &Configuration,
) -> Result<(f64, [f64; 6], [[f64; 6]; 6])> {
    let mut value = 0.0;
    let mut grad = [0.0; 6];
    let mut hess = [[0.0; 6]; 6];
    for &(b, c) in &PAIRS {
        let (d, r) = config.separation(b, c)?;
        let (u, du, d2u) = spec.terms(r);
        value += u;
        let n = [d[0] / r, d[1] / r];
        let tangential = du / r;
        for k in 0..2 {
            let g = du * n[k];
            grad[2 * b + k] += g;
            grad[2 * c + k] -= g;
            for l in 0..2 {
                let delta = if k == l { 1.0 } else { 0.0 };
                let nn = n[k] * n[l];
                let a = d2u * nn + tangential * (delta - nn);
                hess[2 * b + k][2 * b + l] += a;
                hess[2 * c + k][2 * c + l] += a;
                hess[2 * b + k][2 * c + l] -= a;
                hess[2 * c + k][2 * b + l] -= a;
            }
        }
    }
    Ok((value, grad, hess))
}

/// The analytic second-derivative matrix `U_ij`.
pub fn hessian_u(spec: &PotentialSpec, config: &Configuration) -> Result<[[f64; 6]; 6]> {
    potential_derivatives(spec, config).map(|(_, _, h)| h)
}
