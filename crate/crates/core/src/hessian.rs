//! The second variation of the action in the trigonometric basis: sampling of
//! `U_ij(t)`, its Fourier spectra, assembly of the `6M x 6M` matrix `H` and the
//! lowest part of its spectrum.

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, basis_function, harmonic, Complex64};
use crate::potential::hessian_u;
use crate::trajectory::PeriodicTrajectory;

/// Largest matrix dimension handled by the dense eigensolver in [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 4000;

/// Default number of quadrature points for homogeneous potentials.
pub const DEFAULT_GRID: usize = 3 << 11;

/// Largest grid tried when refining the quadrature for the Lennard-Jones potential.
pub const MAX_GRID: usize = 3 << 14;

pub type Matrix6 = [[f64; 6]; 6];

/// `U_ij(t_j)` at `t_j = j T / n`.
pub fn sample_u(traj: &PeriodicTrajectory, n: usize) -> Result<Vec<Matrix6>> {
    if !n.is_multiple_of(3) {
        return Err(Error::Config(format!("quadrature size {n} is not a multiple of 3")));
    }
    let positions = traj.positions(n)?;
    positions
        .iter()
        .enumerate()
        .map(|(j, q)| hessian_u(&traj.spec, q).map_err(|e| e.at_grid(j)))
        .collect()
}

/// Spectra `u_ij(k)`, `k = 0..=kmax`, for the 21 pairs `i <= j`, indexed by [`pair_index`].
#[derive(Debug, Clone)]
pub struct USpectra {
    pub kmax: usize,
    pub data: Vec<Vec<Complex64>>,
}

/// Position of `(i, j)` in the packed upper triangle.
pub fn pair_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * 6 - i * (i + 1) / 2 + j
}

impl USpectra {
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[pair_index(i, j)][k]
    }

    /// `u^(+)(k)`, even in `k`.
    fn even(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[pair_index(i, j)][k].re
    }

    /// `u^(-)(k)` for signed `k`, odd in `k`.
    fn odd(&self, i: usize, j: usize, k: isize) -> f64 {
        let v = self.data[pair_index(i, j)][k.unsigned_abs()].im;
        if k < 0 {
            -v
        } else {
            v
        }
    }

    /// Largest `|u_ij(kmax)|` relative to the largest `|u_ij(k)|` over all pairs.
    pub fn tail_ratio(&self) -> f64 {
        let mut peak = 0.0f64;
        let mut tail = 0.0f64;
        for series in &self.data {
            for z in series {
                peak = peak.max(z.norm());
            }
            tail = tail.max(series[self.kmax].norm());
        }
        if peak == 0.0 {
            0.0
        } else {
            tail / peak
        }
    }
}

/// Spectra of sampled matrices via one FFT per independent entry.
pub fn spectra_u(samples: &[Matrix6], kmax: usize) -> USpectra {
    let mut data = Vec::with_capacity(21);
    for i in 0..6 {
        for j in i..6 {
            let column: Vec<f64> = samples.iter().map(|u| u[i][j]).collect();
            data.push(fourier::spectrum(&column, kmax));
        }
    }
    USpectra { kmax, data }
}

/// Highest spectral index read during assembly with `m` basis functions per coordinate.
pub fn required_kmax(m: usize) -> usize {
    2 * m.div_ceil(2) + 2
}

/// `int_0^T phi_k U_ij phi_l dt` from the spectra.
fn projected_entry(u: &USpectra, i: usize, j: usize, k: usize, l: usize) -> f64 {
    let kp = harmonic(k) as isize;
    let lp = harmonic(l) as isize;
    let sum = (kp + lp) as usize;
    let diff = kp - lp;
    if k == 0 || l == 0 {
        let norm = if k == 0 && l == 0 { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
        let sine = fourier::is_sine(k) || fourier::is_sine(l);
        return norm * if sine { u.odd(i, j, sum as isize) } else { u.even(i, j, sum) };
    }
    match (fourier::is_sine(k), fourier::is_sine(l)) {
        (false, false) => 0.5 * (u.even(i, j, diff.unsigned_abs()) + u.even(i, j, sum)),
        (true, true) => 0.5 * (u.even(i, j, diff.unsigned_abs()) - u.even(i, j, sum)),
        (true, false) => 0.5 * (u.odd(i, j, sum as isize) + u.odd(i, j, diff)),
        (false, true) => 0.5 * (u.odd(i, j, sum as isize) - u.odd(i, j, diff)),
    }
}

/// `H_{6k+i, 6l+j} = -int phi_k U_ij phi_l dt + (w k')^2 delta_ij delta_kl`.
pub fn assemble_h(u: &USpectra, m: usize, omega: f64) -> Result<Mat<f64>> {
    let need = required_kmax(m);
    if u.kmax < need {
        return Err(Error::Config(format!(
            "spectra hold k <= {} but assembly with M = {m} reads k = {need}",
            u.kmax
        )));
    }
    let dim = 6 * m;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for k in 0..m {
        for l in 0..=k {
            for i in 0..6 {
                for j in 0..6 {
                    let row = 6 * k + i;
                    let col = 6 * l + j;
                    if col > row {
                        continue;
                    }
                    let mut value = -projected_entry(u, i, j, k, l);
                    if row == col {
                        value += (omega * harmonic(k) as f64).powi(2);
                    }
                    h[(row, col)] = value;
                    h[(col, row)] = value;
                }
            }
        }
    }
    Ok(h)
}

pub const DEFAULT_SEED: u64 = 0x5eed;

/// A fully assembled second-variation problem.
#[derive(Debug, Clone)]
pub struct HessianProblem {
    pub traj: PeriodicTrajectory,
    pub m: usize,
    pub n: usize,
    pub uhat: USpectra,
    pub h: Mat<f64>,
    /// Seed of the iterative eigensolver's start block.
    pub seed: u64,
}

/// Choice of eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Dense up to [`DENSE_LIMIT`], iterative above.
    #[default]
    Auto,
    Dense,
    /// Shift-invert block Lanczos below the spectrum.
    Iterative,
}

impl HessianProblem {
    /// Assemble with `m` basis functions per coordinate on an `n`-point grid.
    pub fn new(traj: &PeriodicTrajectory, m: usize, n: usize) -> Result<Self> {
        let kmax = required_kmax(m);
        if !n.is_multiple_of(3) {
            return Err(Error::Config(format!("quadrature size {n} is not a multiple of 3")));
        }
        if n < 2 * kmax + 1 {
            return Err(Error::Config(format!(
                "quadrature size {n} aliases spectra up to k = {kmax} (need n >= {})",
                2 * kmax + 1
            )));
        }
        let samples = sample_u(traj, n)?;
        let uhat = spectra_u(&samples, kmax);
        let h = assemble_h(&uhat, m, traj.omega())?;
        Ok(HessianProblem {
            traj: traj.clone(),
            m,
            n,
            uhat,
            h,
            seed: DEFAULT_SEED,
        })
    }

    /// Like [`HessianProblem::new`] but doubles `n` from `n0` until the spectra tail at
    /// `k = K` falls below `1e-9` of the peak (or [`MAX_GRID`] is reached).
    pub fn with_refined_grid(traj: &PeriodicTrajectory, m: usize, n0: usize) -> Result<Self> {
        let mut n = n0;
        loop {
            let problem = Self::new(traj, m, n)?;
            if problem.uhat.tail_ratio() < 1e-9 || 2 * n > MAX_GRID {
                return Ok(problem);
            }
            n *= 2;
        }
    }

    pub fn dim(&self) -> usize {
        6 * self.m
    }

    pub fn omega(&self) -> f64 {
        self.traj.omega()
    }

    /// `H v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        let mut out = vec![0.0; dim];
        for col in 0..dim {
            let x = v[col];
            if x == 0.0 {
                continue;
            }
            let column = self.h.col(col);
            for (o, h) in out.iter_mut().zip(column.iter()) {
                *o += h * x;
            }
        }
        out
    }

    /// The `count` lowest eigenpairs, ascending.
    pub fn eigensolve(&self, count: usize) -> Result<Spectrum> {
        self.eigensolve_with(count, EigenMethod::Auto)
    }

    pub fn eigensolve_with(&self, count: usize, method: EigenMethod) -> Result<Spectrum> {
        let dim = self.dim();
        if count == 0 || count > dim {
            return Err(Error::Config(format!("cannot compute {count} eigenpairs of a {dim}-dimensional problem")));
        }
        let dense = match method {
            EigenMethod::Auto => dim <= DENSE_LIMIT,
            EigenMethod::Dense => true,
            EigenMethod::Iterative => false,
        };
        let (values, vectors) = if dense {
            dense_lowest(&self.h, count)?
        } else {
            lanczos_lowest(self, count)?
        };
        let pairs = values
            .into_iter()
            .zip(vectors)
            .map(|(lambda, v)| {
                let hv = self.apply(&v);
                let residual = hv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                EigenPair { lambda, v, residual }
            })
            .collect();
        Ok(Spectrum {
            period: self.traj.period(),
            m: self.m,
            n: self.n,
            pairs,
        })
    }

    /// The `count` lowest eigenvalues without eigenvectors.
    pub fn eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        if self.dim() > DENSE_LIMIT {
            return Ok(self.eigensolve(count)?.eigenvalues());
        }
        let values = self
            .h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Numeric(format!("symmetric eigensolver failed: {e:?}")))?;
        Ok(values.into_iter().take(count).collect())
    }

    /// Upper bound on `max_t ||U(t)||_2` (Frobenius), hence `-bound <= lambda_min`.
    pub fn potential_bound(&self) -> Result<f64> {
        let samples = sample_u(&self.traj, self.n)?;
        Ok(samples
            .iter()
            .map(|u| u.iter().flatten().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max))
    }
}

fn dense_lowest(h: &Mat<f64>, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("symmetric eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..count).map(|c| s[c]).collect();
    let vectors = (0..count).map(|c| u.col(c).iter().copied().collect()).collect();
    Ok((values, vectors))
}

const BLOCK: usize = 4;

/// Block Lanczos on `(H - sigma)^(-1)` with `sigma` below the spectrum, full
/// reorthogonalization and Rayleigh-Ritz extraction on `H` itself.
fn lanczos_lowest(problem: &HessianProblem, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = problem.dim();
    let sigma = -problem.potential_bound()? - 1.0;
    let mut shifted = problem.h.clone();
    for d in 0..dim {
        shifted[(d, d)] -= sigma;
    }
    let llt = shifted
        .llt(Side::Lower)
        .map_err(|e| Error::Numeric(format!("shifted matrix is not positive definite: {e:?}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut block: Vec<Vec<f64>> = (0..BLOCK)
        .map(|_| (0..dim).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let max_basis = dim.min(12 * count + 60);
    let mut last: Option<(Vec<f64>, Vec<Vec<f64>>)> = None;

    while basis.len() < max_basis {
        for v in block.iter_mut() {
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, v);
                    axpy(-c, q, v);
                }
            }
            let norm = dot(v, v).sqrt();
            if norm < 1e-10 {
                continue;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v.clone());
            if basis.len() == max_basis {
                break;
            }
        }
        if basis.len() >= count + BLOCK {
            let (values, vectors) = rayleigh_ritz(problem, &basis, count)?;
            let converged = values.iter().zip(&vectors).all(|(lambda, v)| {
                let hv = problem.apply(v);
                let r: f64 = hv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum();
                r.sqrt() < 1e-11 * lambda.abs().max(1.0)
            });
            last = Some((values, vectors));
            if converged {
                break;
            }
        }
        let start = basis.len().saturating_sub(BLOCK);
        block = basis[start..]
            .iter()
            .map(|q| {
                let mut rhs = Mat::<f64>::from_fn(dim, 1, |r, _| q[r]);
                faer::linalg::solvers::Solve::solve_in_place(&llt, rhs.as_mut());
                (0..dim).map(|r| rhs[(r, 0)]).collect()
            })
            .collect();
    }
    last.ok_or_else(|| Error::Numeric("Lanczos basis collapsed".into()))
}

fn rayleigh_ritz(
    problem: &HessianProblem,
    basis: &[Vec<f64>],
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = basis.len();
    let images: Vec<Vec<f64>> = basis.iter().map(|q| problem.apply(q)).collect();
    let small = Mat::<f64>::from_fn(k, k, |a, b| 0.5 * (dot(&basis[a], &images[b]) + dot(&basis[b], &images[a])));
    let (values, coords) = dense_lowest(&small, count.min(k))?;
    let vectors = coords
        .iter()
        .map(|c| {
            let mut v = vec![0.0; problem.dim()];
            for (q, w) in basis.iter().zip(c) {
                axpy(*w, q, &mut v);
            }
            v
        })
        .collect();
    Ok((values, vectors))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// An eigenvalue of `H` with its unit eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub v: Vec<f64>,
    /// `||H v - lambda v||`.
    pub residual: f64,
}

impl EigenPair {
    /// The eigenfunction `psi(t) = sum_k v_{6k+i} phi_k(t)`.
    pub fn psi(&self, period: f64, t: f64) -> [f64; 6] {
        eigenfunction(&self.v, period, t)
    }

    /// `v . H v` for the given problem.
    pub fn rayleigh_quotient(&self, problem: &HessianProblem) -> f64 {
        dot(&self.v, &problem.apply(&self.v)) / dot(&self.v, &self.v)
    }
}

/// Evaluate a coefficient vector as a 6-component function of time.
pub fn eigenfunction(v: &[f64], period: f64, t: f64) -> [f64; 6] {
    let mut out = [0.0; 6];
    for k in 0..v.len() / 6 {
        let phi = basis_function(k, period, t);
        for i in 0..6 {
            out[i] += v[6 * k + i] * phi;
        }
    }
    out
}

/// The lowest eigenpairs of one problem.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub period: f64,
    pub m: usize,
    pub n: usize,
    pub pairs: Vec<EigenPair>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// `S(q + h psi)` for each `h`, where `psi` has coefficient vector `v`.
pub fn second_variation(traj: &PeriodicTrajectory, v: &[f64], h_grid: &[f64], n: usize) -> Vec<Result<f64>> {
    h_grid
        .iter()
        .map(|&h| traj.perturbed(v, h).action_value(n))
        .collect()
}

/// Coefficient vectors of the four analytic zero modes: time shift (`qdot`),
/// rotation (`J q`) and uniform translations in x and y. Not normalized.
pub fn conservation_directions(traj: &PeriodicTrajectory, m: usize) -> [Vec<f64>; 4] {
    let base = traj.with_basis_len(m);
    let c = base.coeffs();
    let time_shift = base.derivative_coeffs();
    let mut rotation = vec![0.0; 6 * m];
    for k in 0..m {
        for b in 0..3 {
            rotation[6 * k + 2 * b] = -c[6 * k + 2 * b + 1];
            rotation[6 * k + 2 * b + 1] = c[6 * k + 2 * b];
        }
    }
    let mut tx = vec![0.0; 6 * m];
    let mut ty = vec![0.0; 6 * m];
    for b in 0..3 {
        tx[2 * b] = 1.0;
        ty[2 * b + 1] = 1.0;
    }
    [time_shift, rotation, tx, ty]
}

/// Trivial mode of harmonic `m >= 1`: every body displaced by the same
/// `e_axis cos(m w t)` (or `sin`). Unit norm.
pub fn trivial_mode(len: usize, harmonic_m: usize, sine: bool, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; 6 * len];
    let k = fourier::basis_index(harmonic_m, sine);
    for b in 0..3 {
        v[6 * k + 2 * b + axis] = 1.0 / 3f64.sqrt();
    }
    v
}
