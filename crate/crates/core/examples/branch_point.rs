//! The two Lennard-Jones figure-eights just above the fold: their actions, their
//! distance, and the action along the C_e eigenfunction that points from one to
//! the other.
//!
//! `cargo run --release --example branch_point [T]`

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::{follow_alpha_branch, solve_on_branch, AlphaOptions, Branch};
use choreo_morse::hessian::DEFAULT_GRID;
use choreo_morse::landscape::{estimate_h, locate_extremum, oriented_towards, scan_1d, trajectory_distance};
use choreo_morse::solver::SolverOptions;

fn main() -> anyhow::Result<()> {
    let t: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(14.495);
    let mut options = AlphaOptions {
        t_start: 20.0,
        t_stop: t + 0.2,
        ..AlphaOptions::default()
    };
    options.continuation.find_thresholds = false;
    let family = follow_alpha_branch(&options)?;
    let solver = SolverOptions::default();
    let minus = solve_on_branch(&family, Branch::AlphaMinus, t, &solver)?;
    let plus = solve_on_branch(&family, Branch::AlphaPlus, t, &solver)?;
    let n = DEFAULT_GRID;
    let (s_minus, s_plus) = (minus.action_value(n)?, plus.action_value(n)?);
    let d = trajectory_distance(&minus, &plus)?;
    println!("T = {t}: S(alpha-) = {s_minus:.7}, S(alpha+) = {s_plus:.7}, |q - q'| = {:.6}", d.aligned);
    for (name, q, other, s, s_other) in [("alpha-", &minus, &plus, s_minus, s_plus), ("alpha+", &plus, &minus, s_plus, s_minus)] {
        let analysis = analyze(q, &SpectrumOptions::default())?;
        let c = analysis
            .classification
            .find("C_e")
            .ok_or_else(|| anyhow::anyhow!("no C_e cluster on {name}"))?;
        let psi = oriented_towards(&c.basis[0], q, other);
        let h_star = estimate_h(s, s_other, c.lambda_mean)?;
        let hs: Vec<f64> = (0..=100).map(|i| -0.02 + 0.001 * i as f64).collect();
        let scan = scan_1d(q, &psi, &hs, c.lambda_mean, Some(h_star), n)?;
        println!("{name}: lambda(C_e) = {:.6}, cubic estimate h* = {h_star:.4}", c.lambda_mean);
        for &(h, kind) in scan.extrema.iter().filter(|e| e.0 > 0.005) {
            println!("  {:?} of S along the ray at h = {:.5}", kind, locate_extremum(q, &psi, h, 0.002, kind, n)?);
        }
    }
    Ok(())
}
