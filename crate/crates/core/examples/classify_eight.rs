//! Lowest eigenvalues of the second variation around the a = 1 figure-eight, their
//! symmetry labels and the three Morse indices.
//!
//! `cargo run --release --example classify_eight [a]`

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::solver::SolverOptions;

fn main() -> anyhow::Result<()> {
    let a: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let q = homogeneous_eight(a, 2.0, None, &SolverOptions::default())?;
    let analysis = analyze(&q, &SpectrumOptions { count: 24, ..SpectrumOptions::default() })?;
    println!("{} (T = {:.6}), M = {}, n = {}", q.spec.describe(), q.period(), analysis.m, analysis.n);
    println!("{:<10} {:>14} {:>4} {:>10} {:>8}", "label", "lambda", "deg", "C-trace", "residual");
    for c in &analysis.classification.clusters {
        let residual = c
            .indices
            .iter()
            .map(|&i| analysis.spectrum.pairs[i].residual)
            .fold(0.0, f64::max);
        println!(
            "{:<10} {:>14.8} {:>4} {:>10.3} {:>8.1e}",
            c.label, c.lambda_mean, c.degeneracy, c.c_trace, residual
        );
    }
    let r = &analysis.report;
    println!("N = {}, N_c = {}, N_e = {}", r.n, r.n_c, r.n_e);
    Ok(())
}
