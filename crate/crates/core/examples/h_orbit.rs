//! Newton refinement from the a = 1 figure-eight along its lowest (D_y^H) pair
//! lands on a nearby non-choreographic critical point. The action over the plane
//! of the pair is threefold symmetric.
//!
//! `cargo run --release --example h_orbit`

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::hessian::DEFAULT_GRID;
use choreo_morse::landscape::{angular_minima, angular_profile, closest_on_ray, estimate_h, refine_critical_point, scan_2d, MixedDirection};
use choreo_morse::solver::SolverOptions;
use choreo_morse::symmetry::choreography_defect;

fn main() -> anyhow::Result<()> {
    let n = DEFAULT_GRID;
    let solver = SolverOptions::default();
    let q = homogeneous_eight(1.0, 2.0, None, &solver)?;
    let analysis = analyze(&q, &SpectrumOptions::default())?;
    let c = analysis
        .classification
        .find("D_y^H")
        .ok_or_else(|| anyhow::anyhow!("no D_y^H pair"))?;
    let pair = [c.basis[0].clone(), c.basis[1].clone()];

    let mixed = MixedDirection::new(pair[0].clone(), pair[1].clone(), 0.0);
    let theta = mixed.downhill(&q, mixed.x_axis_angle(), 0.284, n)?;
    let psi = MixedDirection::new(pair[0].clone(), pair[1].clone(), theta).psi();
    let offset: Vec<f64> = psi.iter().map(|x| 0.284 * x).collect();
    let refined = refine_critical_point(&q, &offset, &solver)?;
    let (s0, s) = (q.action_value(n)?, refined.traj.action_value(n)?);
    let (h, _) = closest_on_ray(&q, &psi, &refined.traj);
    println!("lambda(D_y^H) = {:.7}, mixing angle {theta:.4}", c.lambda_mean);
    println!(
        "refined: S - S(eight) = {:.4e}, along the ray h = {h:.5}, cubic estimate {:.5}, choreography defect {:.2e}",
        s - s0,
        estimate_h(s0, s, c.lambda_mean)?,
        choreography_defect(refined.traj.coeffs())
    );

    let profile = angular_profile(&q, &pair, 0.28, 360, n)?;
    let minima = angular_minima(&profile);
    println!("angular minima at radius 0.28: {:?}", minima.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>());
    let grid = scan_2d(&q, &pair, 0.37, 21, n)?;
    println!("grid minima: {:?} ({} collision points)", grid.local_minima(), grid.missing);
    Ok(())
}
