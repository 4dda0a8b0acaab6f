//! Structural identities of the discretized second variation at the a = 1 eight:
//! the choreographic shift, the four zero modes and the trivial translation modes.
//!
//! `cargo run --release --example symmetry_checks`

use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::hessian::{conservation_directions, trivial_mode, HessianProblem, DEFAULT_GRID};
use choreo_morse::solver::SolverOptions;
use choreo_morse::symmetry::{apply_c, choreography_defect, commutator_norm};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() -> anyhow::Result<()> {
    let q = homogeneous_eight(1.0, 2.0, None, &SolverOptions::default())?;
    let m = 81;
    let problem = HessianProblem::new(&q, m, DEFAULT_GRID)?;
    println!("choreography defect of the solution: {:.2e}", choreography_defect(q.coeffs()));
    println!("||[H, C]|| = {:.2e}", commutator_norm(&problem.h));

    let v: Vec<f64> = (0..6 * m).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
    let cube = apply_c(&apply_c(&apply_c(&v)));
    let diff: Vec<f64> = cube.iter().zip(&v).map(|(a, b)| a - b).collect();
    println!("||C^3 v - v|| = {:.2e}", norm(&diff));

    for (name, z) in ["time shift", "rotation", "x translation", "y translation"].iter().zip(conservation_directions(&q, m)) {
        println!("zero mode {name:<13} ||H z|| / ||z|| = {:.2e}", norm(&problem.apply(&z)) / norm(&z));
    }
    let omega = q.omega();
    for k in 1..=3 {
        let t = trivial_mode(m, k, false, 0);
        let target = (k as f64 * omega).powi(2);
        let residual: Vec<f64> = problem.apply(&t).iter().zip(&t).map(|(a, b)| a - target * b).collect();
        println!("trivial mode k = {k}: eigenvalue {target:.6}, residual {:.2e}", norm(&residual));
    }
    Ok(())
}
