//! Continue the figure-eight in the exponent of `-1/r^a` and locate the exponents
//! where an eigenvalue crosses zero.
//!
//! `cargo run --release --example exponent_sweep [from to step]`

use choreo_morse::continuation::{sweep_exponent, ContinuationOptions};
use choreo_morse::run::exponent_grid;

fn main() -> anyhow::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let (from, to, step) = match args[..] {
        [from, to, step] => (from, to, step),
        _ => (0.5, 1.5, 0.1),
    };
    let result = sweep_exponent(&exponent_grid(from, to, step), 2.0, &ContinuationOptions::default())?;
    for r in &result.records {
        println!(
            "a = {:.3}  T = {:.6}  S = {:.6}  (N, N_c, N_e) = ({}, {}, {})  lowest {:?}",
            r.parameter,
            r.traj.period(),
            r.action,
            r.index.n,
            r.index.n_c,
            r.index.n_e,
            &r.labels[..r.labels.len().min(4)]
        );
    }
    for t in &result.thresholds {
        println!("threshold a = {:.6} ({}): N {} -> {}", t.parameter, t.label, t.lower.n, t.upper.n);
    }
    Ok(())
}
