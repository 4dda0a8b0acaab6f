//! Symmetry operators on coefficient vectors, clustering of eigenvalues,
//! classification of eigenclusters and Morse index counting.
//!
//! Besides the cyclic operator `C` (body relabelling with a `-T/3` time shift) the
//! figure-eight is invariant under two involutions, both acting within each harmonic:
//!
//! * `sigma1`: reflection `x -> -x` combined with a half-period time shift;
//! * `sigma2`: inversion `r -> -r` combined with time reversal and the swap of
//!   bodies 2 and 3.
//!
//! A variated orbit `q + h psi` is symmetric about the y-axis when `psi` is even
//! under `sigma1`, symmetric under rotation by `pi` when `psi` is even under
//! `sigma2`, and symmetric about the x-axis when `psi` is even under the product.

use std::f64::consts::PI;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{harmonic, is_sine};
use crate::hessian::{axpy, dot, trivial_mode, Spectrum};
use crate::solver::{Constraint, Subspace};
use crate::trajectory::PeriodicTrajectory;

/// `(C f)_i(t) = f_{i+2}(t - T/3)`: body `b` takes the motion of body `b + 1`
/// delayed by a third of the period.
pub fn apply_c(v: &[f64]) -> Vec<f64> {
    let len = v.len() / 6;
    let mut out = vec![0.0; v.len()];
    for k in 0..len {
        let m = harmonic(k);
        if k == 0 {
            for i in 0..6 {
                out[i] = v[(i + 2) % 6];
            }
            continue;
        }
        if !is_sine(k) {
            continue;
        }
        // k is the sine, k + 1 the cosine of harmonic m
        let theta = 2.0 * PI * (m % 3) as f64 / 3.0;
        let (s, c) = theta.sin_cos();
        for i in 0..6 {
            let src = (i + 2) % 6;
            let sn = v[6 * k + src];
            let cs = if k + 1 < len { v[6 * (k + 1) + src] } else { 0.0 };
            out[6 * k + i] = cs * s + sn * c;
            if k + 1 < len {
                out[6 * (k + 1) + i] = cs * c - sn * s;
            }
        }
    }
    out
}

/// `C^(-1) = C^2`.
pub fn apply_c_inverse(v: &[f64]) -> Vec<f64> {
    apply_c(&apply_c(v))
}

/// `x -> -x` with a half-period shift.
pub fn apply_sigma1(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    for (idx, x) in out.iter_mut().enumerate() {
        let m = harmonic(idx / 6);
        let mut sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        if idx % 2 == 0 {
            sign = -sign;
        }
        *x *= sign;
    }
    out
}

/// Inversion with time reversal and the swap of bodies 2 and 3.
pub fn apply_sigma2(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for k in 0..v.len() / 6 {
        let sign = if is_sine(k) { 1.0 } else { -1.0 };
        for b in 0..3 {
            let src = (3 - b) % 3;
            for axis in 0..2 {
                out[6 * k + 2 * b + axis] = sign * v[6 * k + 2 * src + axis];
            }
        }
    }
    out
}

/// `(1 + C + C^2) v / 3`.
pub fn choreographic_projection(v: &[f64]) -> Vec<f64> {
    let c1 = apply_c(v);
    let c2 = apply_c(&c1);
    v.iter().zip(&c1).zip(&c2).map(|((a, b), c)| (a + b + c) / 3.0).collect()
}

/// Relative deviation `||C q - q|| / ||q||`.
pub fn choreography_defect(coeffs: &[f64]) -> f64 {
    let c = apply_c(coeffs);
    let diff: f64 = c.iter().zip(coeffs).map(|(a, b)| (a - b).powi(2)).sum();
    (diff / dot(coeffs, coeffs)).sqrt()
}

/// Matrix `V^T A V` of a linear operator in the orthonormal basis `V`.
pub fn operator_matrix(basis: &[Vec<f64>], op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
    let images: Vec<Vec<f64>> = basis.iter().map(|v| op(v)).collect();
    basis
        .iter()
        .map(|a| images.iter().map(|b| dot(a, b)).collect())
        .collect()
}

fn trace(m: &[Vec<f64>]) -> f64 {
    (0..m.len()).map(|i| m[i][i]).sum()
}

/// Orthonormal basis of the `C`-fixed vectors within the span of `basis`
/// (assumed orthonormal).
pub fn choreographic_intersection(basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let g = operator_matrix(basis, choreographic_projection);
    let d = basis.len();
    let gm = Mat::<f64>::from_fn(d, d, |a, b| 0.5 * (g[a][b] + g[b][a]));
    let Ok(evd) = gm.self_adjoint_eigen(Side::Lower) else {
        return Vec::new();
    };
    let s = evd.S().column_vector();
    let u = evd.U();
    (0..d)
        .filter(|&c| s[c] > 0.5)
        .map(|c| {
            let mut v = vec![0.0; basis[0].len()];
            for (a, q) in basis.iter().enumerate() {
                axpy(u[(a, c)], q, &mut v);
            }
            v
        })
        .collect()
}

/// `trace(V^T P V)` for the orthogonal projector `P` onto the figure-eight subspace.
pub fn figure_eight_dimension(basis: &[Vec<f64>]) -> f64 {
    let sub = Subspace::new(Constraint::FigureEight, basis[0].len() / 6);
    basis
        .iter()
        .map(|v| {
            let r = sub.restrict(v);
            dot(&r, &r)
        })
        .sum()
}

/// `max |C H C^(-1) - H|` over entries.
pub fn commutator_norm(h: &Mat<f64>) -> f64 {
    let dim = h.nrows();
    let columns: Vec<Vec<f64>> = (0..dim).map(|c| h.col(c).iter().copied().collect()).collect();
    // (C H)[:, j] and (C^{-1} H)[:, j] = ((H C)[j, :])^T since H is symmetric
    let ch: Vec<Vec<f64>> = columns.iter().map(|c| apply_c(c)).collect();
    let cinv_h: Vec<Vec<f64>> = columns.iter().map(|c| apply_c_inverse(c)).collect();
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((ch[j][i] - cinv_h[i][j]).abs());
        }
    }
    worst
}

/// Consecutive eigenvalues within `1e-8 max(1, |lambda|)` share a cluster.
pub fn cluster_indices(values: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if {
                let prev = values[*last.last().unwrap()];
                (v - prev).abs() <= 1e-8 * v.abs().max(prev.abs()).max(1.0)
            } =>
            {
                last.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ClusterClass {
    Zero,
    Trivial { k: usize },
    Choreographic,
    NonChoreographic,
    FigureEightChoreographic,
}

impl ClusterClass {
    pub fn is_choreographic(&self) -> bool {
        matches!(self, ClusterClass::Choreographic | ClusterClass::FigureEightChoreographic)
    }
}

/// Which point-set symmetries the variated orbits of a cluster have.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryTags {
    /// Symmetric about the y-axis.
    pub y: bool,
    /// Symmetric about both axes.
    pub e: bool,
    /// Symmetric under rotation by `pi`.
    pub two: bool,
}

/// One degenerate eigenvalue group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cluster {
    /// Positions in the ascending spectrum.
    pub indices: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub lambda_mean: f64,
    pub degeneracy: usize,
    pub class: ClusterClass,
    pub tags: SymmetryTags,
    pub label: String,
    /// `trace(V^T P_C V)`.
    pub choreographic_dim: f64,
    pub figure_eight_dim: f64,
    /// Trace of `C` restricted to the cluster.
    pub c_trace: f64,
    /// Traces of `sigma1` and `sigma2` restricted to the cluster.
    pub sigma_traces: (f64, f64),
    /// Orthonormal eigenvectors spanning the cluster.
    #[serde(skip)]
    pub basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenClassification {
    pub omega: f64,
    pub tol_zero: f64,
    pub clusters: Vec<Cluster>,
}

impl EigenClassification {
    /// Labels of the non-trivial clusters in ascending order.
    pub fn labels(&self) -> Vec<String> {
        self.clusters
            .iter()
            .filter(|c| !matches!(c.class, ClusterClass::Trivial { .. }))
            .map(|c| c.label.clone())
            .collect()
    }

    pub fn find(&self, label: &str) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.label == label)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseIndexReport {
    pub n: usize,
    pub n_c: usize,
    pub n_e: usize,
    pub negative_clusters: Vec<Cluster>,
}

/// Sort eigenvectors into clusters, classify each and assign labels.
///
/// Clusters that reach the end of the supplied spectrum may be incomplete and are
/// dropped; request a few more eigenpairs than needed.
pub fn classify(spectrum: &Spectrum, traj: &PeriodicTrajectory) -> Result<EigenClassification> {
    let values = spectrum.eigenvalues();
    let omega = traj.omega();
    let lowest = values.iter().take(20).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol_zero = 1e-6 * lowest.max(1.0);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for g in cluster_indices(&values) {
        let is_zero = |g: &[usize]| g.iter().all(|&i| values[i].abs() < tol_zero);
        match groups.last_mut() {
            // the conservation modes form one cluster however they split numerically
            Some(last) if is_zero(last) && is_zero(&g) => last.extend(g),
            _ => groups.push(g),
        }
    }
    let count = groups.len();
    let mut clusters = Vec::new();
    for (g, indices) in groups.into_iter().enumerate() {
        if g + 1 == count && count > 1 {
            break;
        }
        let basis: Vec<Vec<f64>> = indices.iter().map(|&i| spectrum.pairs[i].v.clone()).collect();
        let eigenvalues: Vec<f64> = indices.iter().map(|&i| values[i]).collect();
        match classify_cluster(basis.clone(), indices.clone(), eigenvalues.clone(), omega, tol_zero) {
            // numerically degenerate modes of different symmetry types
            Err(Error::Ambiguity { .. }) => {
                for (sub, idx, vals) in split_by_symmetry(&basis, &indices, &eigenvalues)? {
                    clusters.push(classify_cluster(sub, idx, vals, omega, tol_zero)?);
                }
            }
            other => clusters.push(other?),
        }
    }
    assign_labels(&mut clusters);
    Ok(EigenClassification {
        omega,
        tol_zero,
        clusters,
    })
}

fn classify_cluster(
    basis: Vec<Vec<f64>>,
    indices: Vec<usize>,
    eigenvalues: Vec<f64>,
    omega: f64,
    tol_zero: f64,
) -> Result<Cluster> {
    let d = basis.len();
    let lambda_mean = eigenvalues.iter().sum::<f64>() / d as f64;
    let choreographic_dim = trace(&operator_matrix(&basis, choreographic_projection));
    let figure_eight_dim = figure_eight_dimension(&basis);
    let c_trace = trace(&operator_matrix(&basis, apply_c));
    let s1 = trace(&operator_matrix(&basis, apply_sigma1));
    let s2 = trace(&operator_matrix(&basis, apply_sigma2));

    let class = if lambda_mean.abs() < tol_zero {
        ClusterClass::Zero
    } else if let Some(k) = trivial_harmonic(&basis, lambda_mean, omega) {
        ClusterClass::Trivial { k }
    } else {
        let fixed = choreographic_dim;
        if (fixed - d as f64).abs() < 1e-3 {
            if figure_eight_dim > 0.5 {
                ClusterClass::FigureEightChoreographic
            } else {
                ClusterClass::Choreographic
            }
        } else if fixed.abs() < 1e-3 {
            ClusterClass::NonChoreographic
        } else {
            return Err(Error::Ambiguity {
                lambda: lambda_mean,
                degeneracy: d,
                fixed_dim: fixed,
            });
        }
    };
    let per = |t: f64| t / d as f64;
    let tags = match class {
        ClusterClass::Zero | ClusterClass::Trivial { .. } => SymmetryTags::default(),
        _ if d == 1 => SymmetryTags {
            y: s1 > 0.5,
            two: s2 > 0.5,
            e: s1 > 0.5 && s2 > 0.5,
        },
        _ => SymmetryTags {
            y: per(s1) > 0.5,
            ..Default::default()
        },
    };
    Ok(Cluster {
        indices,
        eigenvalues,
        lambda_mean,
        degeneracy: d,
        class,
        tags,
        label: String::new(),
        choreographic_dim,
        figure_eight_dim,
        c_trace,
        sigma_traces: (s1, s2),
        basis,
    })
}

/// Pieces of a cluster with mixed symmetry content: the span is diagonalized
/// against the commuting operators `P_C`, `sigma1`, `sigma2`; choreographic vectors
/// become one-dimensional pieces and each non-choreographic vector even under
/// `sigma2` is paired with its `C` image. Pieces are ordered by Rayleigh quotient
/// and take the parent positions in that order.
#[allow(clippy::type_complexity)]
fn split_by_symmetry(
    basis: &[Vec<f64>],
    indices: &[usize],
    eigenvalues: &[f64],
) -> Result<Vec<(Vec<Vec<f64>>, Vec<usize>, Vec<f64>)>> {
    let d = basis.len();
    let p = operator_matrix(basis, choreographic_projection);
    let s1 = operator_matrix(basis, apply_sigma1);
    let s2 = operator_matrix(basis, apply_sigma2);
    let g = Mat::<f64>::from_fn(d, d, |a, b| {
        let sym = |m: &Vec<Vec<f64>>| 0.5 * (m[a][b] + m[b][a]);
        sym(&p) + 0.3 * sym(&s1) + 0.1 * sym(&s2)
    });
    let evd = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::Numeric("symmetry split eigensolve failed".into()))?;
    let mean = eigenvalues.iter().sum::<f64>() / d as f64;
    let ambiguous = || Error::Ambiguity {
        lambda: mean,
        degeneracy: d,
        fixed_dim: trace(&p),
    };
    let combine = |coef: &dyn Fn(usize) -> f64| {
        let mut v = vec![0.0; basis[0].len()];
        for (a, q) in basis.iter().enumerate() {
            axpy(coef(a), q, &mut v);
        }
        v
    };
    let rayleigh = |v: &[f64]| -> f64 { basis.iter().zip(eigenvalues).map(|(q, l)| dot(q, v).powi(2) * l).sum() };

    let mut pieces: Vec<Vec<Vec<f64>>> = Vec::new();
    for c in 0..d {
        let value = evd.S().column_vector()[c];
        // value = P + 0.3 s1 + 0.1 s2 with P in {0, 1}, s1, s2 in {-1, 1}
        let chor = value > 0.5;
        let rest = value - if chor { 1.0 } else { 0.0 };
        let even2 = (rest - 0.3 * rest.signum() - 0.1).abs() < 0.02;
        let odd2 = (rest - 0.3 * rest.signum() + 0.1).abs() < 0.02;
        if !(even2 || odd2) {
            return Err(ambiguous());
        }
        let v = combine(&|a| evd.U()[(a, c)]);
        if chor {
            pieces.push(vec![v]);
        } else if even2 {
            let image = apply_c(&v);
            let mut partner = combine(&|a| dot(&basis[a], &image));
            let overlap = dot(&v, &partner);
            axpy(-overlap, &v, &mut partner);
            let norm = dot(&partner, &partner).sqrt();
            if norm < 0.5 {
                return Err(ambiguous());
            }
            partner.iter_mut().for_each(|x| *x /= norm);
            pieces.push(vec![v, partner]);
        }
    }
    if pieces.iter().map(Vec::len).sum::<usize>() != d {
        return Err(ambiguous());
    }
    let mut keyed: Vec<(f64, Vec<Vec<f64>>)> = pieces
        .into_iter()
        .map(|piece| (piece.iter().map(|v| rayleigh(v)).sum::<f64>() / piece.len() as f64, piece))
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut next = indices.iter().copied();
    Ok(keyed
        .into_iter()
        .map(|(_, piece)| {
            let idx: Vec<usize> = piece.iter().filter_map(|_| next.next()).collect();
            let vals = piece.iter().map(|v| rayleigh(v)).collect();
            (piece, idx, vals)
        })
        .collect())
}

/// Harmonic `k` if the cluster is spanned by the four uniform-translation
/// oscillations with `lambda = (k w)^2`.
fn trivial_harmonic(basis: &[Vec<f64>], lambda: f64, omega: f64) -> Option<usize> {
    if lambda <= 0.0 || basis.len() < 4 {
        return None;
    }
    let k = (lambda.sqrt() / omega).round() as usize;
    let expected = (k as f64 * omega).powi(2);
    if k == 0 || (lambda - expected).abs() > 1e-6 * expected.max(1.0) {
        return None;
    }
    let len = basis[0].len() / 6;
    if k > harmonic(len - 1) {
        return None;
    }
    for sine in [false, true] {
        for axis in 0..2 {
            let t = trivial_mode(len, k, sine, axis);
            let captured: f64 = basis.iter().map(|v| dot(v, &t).powi(2)).sum();
            if (1.0 - captured).abs() > 1e-6 {
                return None;
            }
        }
    }
    Some(k)
}

fn base_label(c: &Cluster) -> Option<&'static str> {
    match c.class {
        ClusterClass::Zero => Some("0"),
        ClusterClass::Trivial { .. } => None,
        ClusterClass::NonChoreographic => Some(if c.tags.y { "D_y" } else { "D" }),
        ClusterClass::Choreographic | ClusterClass::FigureEightChoreographic => {
            let (s1, s2) = c.sigma_traces;
            Some(match (s1 > 0.0, s2 > 0.0) {
                (true, true) => "C_e",
                (true, false) => "C_y",
                (false, true) => "C_2",
                (false, false) => "C",
            })
        }
    }
}

/// Ordinal labels: repeated types are primed in ascending order, and the lowest
/// `D_y` cluster is the one correlated with the H orbit.
fn assign_labels(clusters: &mut [Cluster]) {
    let mut seen: std::collections::HashMap<&'static str, usize> = Default::default();
    for c in clusters.iter_mut() {
        let Some(base) = base_label(c) else {
            if let ClusterClass::Trivial { k } = c.class {
                c.label = format!("trivial({k})");
            }
            continue;
        };
        let count = seen.entry(base).or_default();
        let ordinal = *count;
        *count += 1;
        c.label = if base == "0" {
            "0".to_string()
        } else if base == "D_y" {
            match ordinal {
                0 => "D_y^H".to_string(),
                o => format!("D_y{}", "\u{2032}".repeat(o - 1)),
            }
        } else {
            format!("{base}{}", "\u{2032}".repeat(ordinal))
        };
    }
}

/// Count negative directions in the three function domains.
pub fn morse_indices(classification: &EigenClassification) -> MorseIndexReport {
    let negative: Vec<Cluster> = classification
        .clusters
        .iter()
        .filter(|c| c.lambda_mean < 0.0 && c.class != ClusterClass::Zero)
        .cloned()
        .collect();
    MorseIndexReport {
        n: negative.iter().map(|c| c.degeneracy).sum(),
        n_c: negative.iter().map(|c| c.choreographic_dim.round() as usize).sum(),
        n_e: negative.iter().map(|c| c.figure_eight_dim.round() as usize).sum(),
        negative_clusters: negative,
    }
}

/// Point-set symmetry defects of the orbit traced by all three bodies of `q + h psi`:
/// Hausdorff distances to its images under `x -> -x`, `y -> -y` and rotation by `pi`.
pub fn variated_orbit_defects(traj: &PeriodicTrajectory, v: &[f64], h: f64, samples: usize) -> [f64; 3] {
    let varied = traj.perturbed(v, h);
    let n = samples.div_ceil(3) * 3;
    let positions = match varied.positions(n.max(varied.min_grid().div_ceil(3) * 3)) {
        Ok(p) => p,
        Err(_) => return [f64::INFINITY; 3],
    };
    let curves: Vec<Vec<[f64; 2]>> = (0..3)
        .map(|b| positions.iter().map(|q| q.body(b)).collect())
        .collect();
    let maps: [fn([f64; 2]) -> [f64; 2]; 3] = [|p| [-p[0], p[1]], |p| [p[0], -p[1]], |p| [-p[0], -p[1]]];
    maps.map(|f| {
        let image: Vec<Vec<[f64; 2]>> = curves.iter().map(|c| c.iter().map(|&p| f(p)).collect()).collect();
        hausdorff(&curves, &image).max(hausdorff(&image, &curves))
    })
}

/// Directed Hausdorff distance from the sample points of `a` to the closed
/// polylines of `b`.
fn hausdorff(a: &[Vec<[f64; 2]>], b: &[Vec<[f64; 2]>]) -> f64 {
    let mut worst = 0.0f64;
    for curve in a {
        for p in curve {
            let mut best = f64::INFINITY;
            for poly in b {
                for s in 0..poly.len() {
                    best = best.min(segment_distance(*p, poly[s], poly[(s + 1) % poly.len()]));
                }
            }
            worst = worst.max(best);
        }
    }
    worst
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

/// Angle `theta` in the plane of a degenerate pair `(v1, v2)` whose combination
/// `cos(theta) v1 + sin(theta) v2` is even under `op` (an involution).
pub fn invariant_angle(v1: &[f64], v2: &[f64], op: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let m = operator_matrix(&[v1.to_vec(), v2.to_vec()], op);
    let a = 0.5 * (m[0][0] - m[1][1]);
    let b = 0.5 * (m[0][1] + m[1][0]);
    // the symmetric part is a reflection; its +1 axis sits at half the angle of (a, b)
    0.5 * b.atan2(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_vector(len: usize) -> Vec<f64> {
        (0..6 * len).map(|i| ((i * 37 + 11) % 17) as f64 / 17.0 - 0.5).collect()
    }

    #[test]
    fn c_cubed_is_identity() {
        let v = test_vector(13);
        let w = apply_c(&apply_c(&apply_c(&v)));
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((dot(&v, &v) - dot(&apply_c(&v), &apply_c(&v))).abs() < 1e-13);
    }

    #[test]
    fn involutions() {
        let v = test_vector(9);
        for op in [apply_sigma1, apply_sigma2] {
            let w = op(&op(&v));
            assert_eq!(v, w);
        }
        // sigma2 C sigma2 = C^{-1}
        let a = apply_sigma2(&apply_c(&apply_sigma2(&v)));
        let b = apply_c_inverse(&v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        let a = apply_sigma1(&apply_c(&v));
        let b = apply_c(&apply_sigma1(&v));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn clustering() {
        let groups = cluster_indices(&[-1.0, -1.0 + 1e-9, 0.0, 5e-9, 0.5, 0.6]);
        assert_eq!(groups, vec![vec![0, 1], vec![2, 3], vec![4], vec![5]]);
    }

    #[test]
    fn primes_and_h_label() {
        let make = |class, y| Cluster {
            indices: vec![],
            eigenvalues: vec![],
            lambda_mean: 0.0,
            degeneracy: 2,
            class,
            tags: SymmetryTags { y, ..Default::default() },
            label: String::new(),
            choreographic_dim: 0.0,
            figure_eight_dim: 0.0,
            c_trace: -1.0,
            sigma_traces: (0.0, 0.0),
            basis: Vec::new(),
        };
        let mut cs = vec![
            make(ClusterClass::NonChoreographic, true),
            make(ClusterClass::NonChoreographic, false),
            make(ClusterClass::NonChoreographic, true),
            make(ClusterClass::NonChoreographic, false),
            make(ClusterClass::NonChoreographic, true),
        ];
        assign_labels(&mut cs);
        let labels: Vec<_> = cs.iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["D_y^H", "D", "D_y", "D\u{2032}", "D_y\u{2032}"]);
    }

    #[test]
    fn invariant_angle_of_reflection() {
        // sigma1 flips x components of harmonic 0
        let mut v1 = vec![0.0; 6];
        let mut v2 = vec![0.0; 6];
        v1[0] = 1.0;
        v2[1] = 1.0;
        let theta = invariant_angle(&v1, &v2, apply_sigma1);
        assert!((theta.abs() - PI / 2.0).abs() < 1e-12);
    }
}
