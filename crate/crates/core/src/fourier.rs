//! The orthonormal trigonometric basis on `[0, T)` and FFT-based transforms
//! between basis coefficients and samples on the uniform grid `t_j = jT/n`.
//!
//! Basis index `k` maps to harmonic `floor((k + 1) / 2)`: `k = 0` is the constant
//! `1/sqrt(T)`, odd `k` are `sqrt(2/T) sin(m w t)` and even `k > 0` are
//! `sqrt(2/T) cos(m w t)`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub type Complex64 = Complex<f64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Harmonic number `floor((k + 1) / 2)` of basis function `k`.
#[inline]
pub fn harmonic(k: usize) -> usize {
    k.div_ceil(2)
}

#[inline]
pub fn is_sine(k: usize) -> bool {
    k % 2 == 1
}

/// Basis index of the cosine (`sine = false`) or sine of harmonic `m >= 1`.
#[inline]
pub fn basis_index(m: usize, sine: bool) -> usize {
    if sine {
        2 * m - 1
    } else {
        2 * m
    }
}

/// Number of basis functions needed to hold harmonics `0..=m_max`.
#[inline]
pub fn basis_len(m_max: usize) -> usize {
    2 * m_max + 1
}

/// `phi_k(t)` for period `period`.
pub fn basis_function(k: usize, period: f64, t: f64) -> f64 {
    let omega = 2.0 * PI / period;
    let m = harmonic(k) as f64;
    if k == 0 {
        1.0 / period.sqrt()
    } else if is_sine(k) {
        (2.0 / period).sqrt() * (m * omega * t).sin()
    } else {
        (2.0 / period).sqrt() * (m * omega * t).cos()
    }
}

/// `d phi_k / dt`.
pub fn basis_derivative(k: usize, period: f64, t: f64) -> f64 {
    let omega = 2.0 * PI / period;
    let m = harmonic(k) as f64;
    if k == 0 {
        0.0
    } else if is_sine(k) {
        (2.0 / period).sqrt() * m * omega * (m * omega * t).cos()
    } else {
        -(2.0 / period).sqrt() * m * omega * (m * omega * t).sin()
    }
}

/// Coefficients of `d/dt` of the series with coefficients `coeffs`.
pub fn differentiate(coeffs: &[f64], period: f64) -> Vec<f64> {
    let omega = 2.0 * PI / period;
    let mut out = vec![0.0; coeffs.len()];
    for k in 1..coeffs.len() {
        let mw = harmonic(k) as f64 * omega;
        if is_sine(k) {
            // sin -> m w cos
            let cos_index = k + 1;
            if cos_index < out.len() {
                out[cos_index] += mw * coeffs[k];
            }
        } else {
            // cos -> -m w sin
            out[k - 1] -= mw * coeffs[k];
        }
    }
    out
}

/// Values of the series `sum_k coeffs[k] phi_k` at `t_j = j T / n`.
pub fn synthesize(coeffs: &[f64], period: f64, n: usize) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let scale = (2.0 / period).sqrt();
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if k == 0 {
            buf[0].re += c / period.sqrt();
            continue;
        }
        let m = harmonic(k);
        assert!(2 * m < n, "harmonic {m} aliases on a grid of {n} points");
        let amp = 0.5 * c * scale;
        if is_sine(k) {
            buf[m] += Complex64::new(0.0, -amp);
            buf[n - m] += Complex64::new(0.0, amp);
        } else {
            buf[m].re += amp;
            buf[n - m].re += amp;
        }
    }
    inverse_plan(n).process(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}

/// Trapezoidal projections `(T/n) sum_j phi_k(t_j) f_j` for `k < len`.
pub fn project(samples: &[f64], period: f64, len: usize) -> Vec<f64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_plan(n).process(&mut buf);
    let dt = period / n as f64;
    let scale = (2.0 / period).sqrt() * dt;
    (0..len)
        .map(|k| {
            if k == 0 {
                return dt * buf[0].re / period.sqrt();
            }
            let m = harmonic(k) % n;
            if is_sine(k) {
                -scale * buf[m].im
            } else {
                scale * buf[m].re
            }
        })
        .collect()
}

/// `u(k) = (2/T) * trapezoid of exp(i k w t) f(t)` for `k = 0..=kmax`, i.e. the
/// scaled DFT `(2/n) sum_j exp(2 pi i k j / n) f_j` (indices taken mod `n`).
pub fn spectrum(samples: &[f64], kmax: usize) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward_plan(n).process(&mut buf);
    let scale = 2.0 / n as f64;
    (0..=kmax).map(|k| buf[k % n].conj() * scale).collect()
}
