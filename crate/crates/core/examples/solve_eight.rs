//! Solve for the figure-eight with `x_max = 2` under a few potentials.
//!
//! `cargo run --release --example solve_eight`

use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::hessian::DEFAULT_GRID;
use choreo_morse::solver::SolverOptions;

fn main() -> anyhow::Result<()> {
    let options = SolverOptions::default();
    // a = 0 is the logarithmic potential
    for a in [0.0, 1.0, 2.0] {
        let q = homogeneous_eight(a, 2.0, None, &options)?;
        let eval = q.action(DEFAULT_GRID)?;
        println!(
            "{:<22} T = {:.9}  S = {:.9}  |grad S| = {:.1e}  harmonics = {}",
            q.spec.describe(),
            q.period(),
            eval.action,
            eval.grad_norm,
            q.max_harmonic()
        );
    }
    Ok(())
}
