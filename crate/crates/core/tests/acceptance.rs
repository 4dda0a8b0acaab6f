//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Takes several minutes: the Lennard-Jones family is
//! followed through its fold up to T = 30.

use std::time::Instant;

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::{
    follow_alpha_branch, solve_on_branch, sweep_exponent, AlphaOptions, Branch, BranchRecord, ContinuationOptions,
    SweepResult, Threshold,
};
use choreo_morse::hessian::{self, HessianProblem, DEFAULT_GRID};
use choreo_morse::landscape::{
    self, angular_profile, closest_on_ray, estimate_h, locate_extremum, oriented_towards, refine_critical_point,
    trajectory_distance, MixedDirection,
};
use choreo_morse::potential::{hessian_u, potential_gradient, total_potential, Configuration};
use choreo_morse::solver::SolverOptions;
use choreo_morse::symmetry::{apply_c, classify, commutator_norm, morse_indices, ClusterClass};
use choreo_morse::{PeriodicTrajectory, PotentialSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<Vec<Check>, String>;

struct Check {
    what: String,
    ok: bool,
}

fn check(what: impl Into<String>, ok: bool) -> Check {
    Check { what: what.into(), ok }
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> Check {
    check(format!("{name} = {value:.7} (want {target} +- {tol})"), (value - target).abs() <= tol)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn eight() -> Result<PeriodicTrajectory, String> {
    choreo_morse::continuation::homogeneous_eight(1.0, 2.0, None, &SolverOptions::default()).map_err(err)
}

fn golden(q: &PeriodicTrajectory) -> Outcome {
    let s = q.action_value(DEFAULT_GRID).map_err(err)?;
    Ok(vec![
        within("T", q.period(), 15.919135, 1e-4),
        within("S", s, 33.225363, 1e-4),
    ])
}

fn spectrum_a1(q: &PeriodicTrajectory) -> Outcome {
    let options = SpectrumOptions {
        count: 24,
        max_m: 161,
        ..SpectrumOptions::default()
    };
    let a = analyze(q, &options).map_err(err)?;
    let values = a.eigenvalues(24);
    let lowest = a.classification.clusters.first().ok_or("no clusters")?;
    let zeros = values.iter().filter(|l| l.abs() < 1e-6).count();
    let quad = |target: f64| {
        a.classification.clusters.iter().any(|c| {
            matches!(c.class, ClusterClass::Trivial { .. }) && c.degeneracy == 4 && (c.lambda_mean - target).abs() <= 1e-5
        })
    };
    let r = &a.report;
    Ok(vec![
        within("lowest eigenvalue", lowest.lambda_mean, -0.0116029, 1e-5),
        check(format!("lowest cluster degeneracy {}", lowest.degeneracy), lowest.degeneracy == 2),
        check(format!("{zeros} eigenvalues with |lambda| < 1e-6"), zeros == 4),
        check("trivial quadruplet at 0.155783", quad(0.155783)),
        check("trivial quadruplet at 0.623133", quad(0.623133)),
        check(format!("(N, N_c, N_e) = ({}, {}, {})", r.n, r.n_c, r.n_e), (r.n, r.n_c, r.n_e) == (2, 0, 0)),
    ])
}

fn nearest(thresholds: &[Threshold], branch: Branch, target: f64) -> Option<&Threshold> {
    thresholds
        .iter()
        .filter(|t| t.branch == branch)
        .min_by(|a, b| (a.parameter - target).abs().total_cmp(&(b.parameter - target).abs()))
}

fn exponent_sweep() -> Outcome {
    let grid: Vec<f64> = (0..=140).map(|i| i as f64 * 0.05).collect();
    let result = sweep_exponent(&grid, 2.0, &ContinuationOptions::default()).map_err(err)?;
    let mut checks = Vec::new();
    checks.push(check(format!("{} solver gaps", result.gaps.len()), result.gaps.is_empty()));
    for (target, from, to) in [(0.9966, 4, 2), (1.3424, 2, 0)] {
        match nearest(&result.thresholds, Branch::Homogeneous, target) {
            Some(t) => {
                checks.push(within("threshold", t.parameter, target, 1e-3));
                checks.push(check(
                    format!("N {} -> {} across {:.4}", t.lower.n, t.upper.n, t.parameter),
                    (t.lower.n, t.upper.n) == (from, to),
                ));
            }
            None => checks.push(check(format!("threshold near {target}"), false)),
        }
    }
    for a in [0.0, 0.5, 1.0, 1.2, 1.5, 2.0, 4.0, 6.0] {
        let Some(r) = result.records.iter().find(|r| (r.parameter - a).abs() < 1e-9) else {
            checks.push(check(format!("record at a = {a}"), false));
            continue;
        };
        let want = if a < 0.9966 {
            4
        } else if a < 1.3424 {
            2
        } else {
            0
        };
        let i = r.index;
        checks.push(check(
            format!("a = {a}: (N, N_c, N_e) = ({}, {}, {})", i.n, i.n_c, i.n_e),
            (i.n, i.n_c, i.n_e) == (want, 0, 0),
        ));
    }
    Ok(checks)
}

fn beside_fold(result: &SweepResult, branch: Branch, t_min: f64) -> Option<&BranchRecord> {
    result
        .records
        .iter()
        .filter(|r| r.branch == branch && r.parameter - t_min > 1e-6)
        .min_by(|a, b| a.parameter.total_cmp(&b.parameter))
}

fn fold(result: &SweepResult) -> Outcome {
    let f = result.fold.as_ref().ok_or("no fold found")?;
    let minus = beside_fold(result, Branch::AlphaMinus, f.t_min).ok_or("no lower-branch record")?;
    let plus = beside_fold(result, Branch::AlphaPlus, f.t_min).ok_or("no upper-branch record")?;
    let jump = (
        plus.index.n as i64 - minus.index.n as i64,
        plus.index.n_c as i64 - minus.index.n_c as i64,
        plus.index.n_e as i64 - minus.index.n_e as i64,
    );
    // the two records bracketing the fold carry its zero eigenvalue
    let off = |branch: Branch, want: usize| -> Vec<f64> {
        result
            .records
            .iter()
            .filter(|r| r.branch == branch && r.parameter - f.t_min > 1e-6 && r.index.n_e != want)
            .map(|r| r.parameter)
            .collect()
    };
    let (minus_off, plus_off) = (off(Branch::AlphaMinus, 0), off(Branch::AlphaPlus, 1));
    let chi_e = result.euler.map(|e| e.chi_e);
    Ok(vec![
        within("T_min", f.t_min, 14.4793, 1e-3),
        check(format!("index jump across the fold {jump:?}"), jump == (1, 1, 1)),
        check(format!("N_e = 0 on the lower branch (exceptions at T = {minus_off:?})"), minus_off.is_empty()),
        check(format!("N_e = 1 on the upper branch (exceptions at T = {plus_off:?})"), plus_off.is_empty()),
        check(format!("chi_e = {chi_e:?}"), chi_e == Some(0)),
    ])
}

fn transitions(result: &SweepResult) -> Outcome {
    let expected = [
        (Branch::AlphaMinus, 14.5952),
        (Branch::AlphaMinus, 14.8358),
        (Branch::AlphaMinus, 14.8611),
        (Branch::AlphaPlus, 16.1110),
        (Branch::AlphaPlus, 16.87),
        (Branch::AlphaPlus, 17.1317),
        (Branch::AlphaPlus, 18.6154),
    ];
    let mut checks: Vec<Check> = expected
        .iter()
        .map(|&(branch, target)| match nearest(&result.thresholds, branch, target) {
            Some(t) => check(
                format!(
                    "{} {} at {:.5} (want {target} +- 0.01), N {} -> {}",
                    branch.name(),
                    t.label,
                    t.parameter,
                    t.lower.n,
                    t.upper.n
                ),
                (t.parameter - target).abs() <= 0.01,
            ),
            None => check(format!("{} transition near {target}", branch.name()), false),
        })
        .collect();
    let last = result
        .records
        .iter()
        .filter(|r| r.branch == Branch::AlphaPlus)
        .max_by(|a, b| a.parameter.total_cmp(&b.parameter))
        .ok_or("no upper-branch records")?;
    checks.push(check(
        format!("upper branch reaches T = {:.2} with N = {}", last.parameter, last.index.n),
        last.parameter >= 30.0 - 1e-9,
    ));
    Ok(checks)
}

fn branch_point(result: &SweepResult) -> Outcome {
    let t0 = 14.4950;
    let options = SolverOptions::default();
    let qm = solve_on_branch(result, Branch::AlphaMinus, t0, &options).map_err(err)?;
    let qp = solve_on_branch(result, Branch::AlphaPlus, t0, &options).map_err(err)?;
    let n = DEFAULT_GRID;
    let sm = qm.action_value(n).map_err(err)?;
    let sp = qp.action_value(n).map_err(err)?;
    let distance = trajectory_distance(&qm, &qp).map_err(err)?;
    let mut checks = vec![
        within("S(alpha-)", sm, 11.24342, 1e-4),
        within("S(alpha+)", sp, 11.24353, 1e-4),
        within("|q - q'|", distance.aligned, 0.0428, 2e-3),
    ];
    let spectrum = SpectrumOptions::default();
    let cases = [
        (&qm, &qp, sm, sp, 0.30449, 0.0636, 0.0466),
        (&qp, &qm, sp, sm, -0.448203, 0.0343, 0.0384),
    ];
    for (q, other, s, s_other, lambda, extremum, prediction) in cases {
        let a = analyze(q, &spectrum).map_err(err)?;
        let c = a.classification.find("C_e").ok_or("no C_e cluster")?;
        checks.push(within("C_e eigenvalue", c.lambda_mean, lambda, 0.01));
        let psi = oriented_towards(&c.basis[0], q, other);
        let h_star = estimate_h(s, s_other, c.lambda_mean).map_err(err)?;
        checks.push(within("cubic estimate", h_star, prediction, 2e-3));
        let hs: Vec<f64> = (0..=100).map(|i| -0.02 + 0.001 * i as f64).collect();
        let scan = landscape::scan_1d(q, &psi, &hs, c.lambda_mean, Some(h_star), n).map_err(err)?;
        match scan.extrema.iter().find(|(h, _)| *h > 0.005) {
            Some(&(h, kind)) => {
                let h = locate_extremum(q, &psi, h, 0.002, kind, n).map_err(err)?;
                checks.push(within("scan extremum", h, extremum, 5e-3));
            }
            None => checks.push(check("scan extremum away from h = 0", false)),
        }
    }
    Ok(checks)
}

fn h_orbit(q: &PeriodicTrajectory) -> Outcome {
    let n = DEFAULT_GRID;
    let a = analyze(q, &SpectrumOptions::default()).map_err(err)?;
    let c = a.classification.find("D_y^H").ok_or("no D_y^H pair")?;
    let pair = [c.basis[0].clone(), c.basis[1].clone()];
    let mixed = MixedDirection::new(pair[0].clone(), pair[1].clone(), 0.0);
    let theta = mixed.downhill(q, mixed.x_axis_angle(), 0.284, n).map_err(err)?;
    let psi = MixedDirection::new(pair[0].clone(), pair[1].clone(), theta).psi();
    let offset: Vec<f64> = psi.iter().map(|x| 0.284 * x).collect();
    let refined = refine_critical_point(q, &offset, &SolverOptions::default()).map_err(err)?;
    let s0 = q.action_value(n).map_err(err)?;
    let s = refined.traj.action_value(n).map_err(err)?;
    let (h, _) = closest_on_ray(q, &psi, &refined.traj);
    let estimate = estimate_h(s0, s, c.lambda_mean).map_err(err)?;
    let choreography = choreo_morse::symmetry::choreography_defect(refined.traj.coeffs());

    let profile = angular_profile(q, &pair, 0.2775, 360, n).map_err(err)?;
    let third = profile.len() / 3;
    let scale = profile.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let defect = (0..profile.len())
        .map(|i| (profile[i].1 - profile[(i + third) % profile.len()].1).abs())
        .fold(0.0, f64::max);
    Ok(vec![
        check(format!("refinement left the eight (distance {:.4})", refined.distance_from_base), !refined.collapsed),
        check(format!("refined orbit is not a choreography (defect {choreography:.2e})"), choreography > 1e-3),
        check(format!("S - S(eight) = {:.4e} (want 3.6e-6 +- 1e-6)", s - s0), ((s - s0) - 3.6e-6).abs() <= 1e-6),
        within("offset amplitude", h.abs(), 0.28375, 5e-3),
        within("cubic estimate", estimate, 0.282, 5e-3),
        check(
            format!("threefold defect {defect:.2e} relative to scan scale {scale:.2e}"),
            defect <= 1e-9 * scale,
        ),
    ])
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    step(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn properties(q: &PeriodicTrajectory) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checks = Vec::new();

    // pair potential derivatives against central differences
    let config = Configuration::new([1.0, 0.1, -0.6, 0.7, -0.3, -0.9]);
    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    for spec in [PotentialSpec::Homogeneous { a: 1.0 }, PotentialSpec::Log, PotentialSpec::LennardJones] {
        let g = potential_gradient(&spec, &config).map_err(err)?;
        let hu = hessian_u(&spec, &config).map_err(err)?;
        let eps = 1e-5;
        for i in 0..6 {
            let mut plus = config.0;
            let mut minus = config.0;
            plus[i] += eps;
            minus[i] -= eps;
            let (cp, cm) = (Configuration::new(plus), Configuration::new(minus));
            let fd = (total_potential(&spec, &cp).map_err(err)? - total_potential(&spec, &cm).map_err(err)?) / (2.0 * eps);
            worst_grad = worst_grad.max((fd - g[i]).abs() / g[i].abs().max(1.0));
            let gp = potential_gradient(&spec, &cp).map_err(err)?;
            let gm = potential_gradient(&spec, &cm).map_err(err)?;
            for j in 0..6 {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                worst_hess = worst_hess.max((fd - hu[j][i]).abs() / hu[j][i].abs().max(1.0));
            }
        }
    }
    checks.push(check(format!("potential gradient vs differences {worst_grad:.1e}"), worst_grad < 1e-5));
    checks.push(check(format!("potential Hessian vs differences {worst_hess:.1e}"), worst_hess < 1e-5));

    // action gradient and H v against differences of the discretized action
    let m = 41;
    let n = DEFAULT_GRID;
    let base = q.with_basis_len(m);
    let grad = base.action(n).map_err(err)?.grad;
    let problem = HessianProblem::new(&base, m, n).map_err(err)?;
    let v: Vec<f64> = (0..6 * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let eps = 1e-4;
    let sp = base.perturbed(&v, eps).action_value(n).map_err(err)?;
    let sm = base.perturbed(&v, -eps).action_value(n).map_err(err)?;
    let directional = dot(&grad, &v);
    let fd = (sp - sm) / (2.0 * eps);
    let rel_grad = (fd - directional).abs() / directional.abs().max(1.0);
    checks.push(check(format!("action gradient vs differences {rel_grad:.1e}"), rel_grad < 1e-5));
    let gp = base.perturbed(&v, eps).action(n).map_err(err)?.grad;
    let gm = base.perturbed(&v, -eps).action(n).map_err(err)?.grad;
    let hv = problem.apply(&v);
    let fd: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    let diff = fd.iter().zip(&hv).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let rel_hess = diff / dot(&hv, &hv).sqrt();
    checks.push(check(format!("H v vs gradient differences {rel_hess:.1e}"), rel_hess < 1e-5));

    // the choreographic shift
    let w: Vec<f64> = (0..6 * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cube = apply_c(&apply_c(&apply_c(&w)));
    let c3 = cube.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(check(format!("C^3 = 1 to {c3:.1e}"), c3 < 1e-12));
    let full = HessianProblem::new(q, 161, n).map_err(err)?;
    let comm = commutator_norm(&full.h);
    checks.push(check(format!("||[H, C]|| = {comm:.1e}"), comm < 1e-9));

    // eigenpairs
    let spectrum = full.eigensolve(24).map_err(err)?;
    let residual = spectrum.max_residual();
    checks.push(check(format!("largest eigenpair residual {residual:.1e}"), residual < 1e-10));
    let rayleigh = spectrum
        .pairs
        .iter()
        .map(|p| (p.rayleigh_quotient(&full) - p.lambda).abs())
        .fold(0.0, f64::max);
    checks.push(check(format!("Rayleigh quotients match eigenvalues to {rayleigh:.1e}"), rayleigh < 1e-10));
    let lowest = &spectrum.pairs[0];
    let h = 1e-3;
    let curvature = (q.action_difference(&lowest.v, h, n).map_err(err)? + q.action_difference(&lowest.v, -h, n).map_err(err)?) / (h * h);
    let rel = (curvature - lowest.lambda).abs() / lowest.lambda.abs();
    checks.push(check(
        format!("action curvature {curvature:.7} along the lowest eigenvector ({:.7})", lowest.lambda),
        rel < 1e-3,
    ));
    let classified = classify(&spectrum, q).map_err(err)?;
    checks.push(check("classification of the golden spectrum", morse_indices(&classified).n == 2));

    // spectra u_ij(k): FFT trapezoid against adaptive quadrature
    let period = q.period();
    let omega = q.omega();
    let mut worst_quad = 0.0f64;
    for _ in 0..20 {
        let i = rng.random_range(0..6);
        let j = rng.random_range(i..6);
        let k = rng.random_range(0..=full.uhat.kmax);
        let u = |t: f64| hessian_u(&q.spec, &q.evaluate(t).0).map(|h| h[i][j]).unwrap_or(f64::NAN);
        let panels = 96;
        let width = period / panels as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for p in 0..panels {
            let (a, b) = (p as f64 * width, (p + 1) as f64 * width);
            re += adaptive_simpson(&|t| (k as f64 * omega * t).cos() * u(t), a, b, 1e-14);
            im += adaptive_simpson(&|t| (k as f64 * omega * t).sin() * u(t), a, b, 1e-14);
        }
        let (re, im) = (2.0 / period * re, 2.0 / period * im);
        let z = full.uhat.get(i, j, k);
        worst_quad = worst_quad.max((z.re - re).abs()).max((z.im - im).abs());
    }
    checks.push(check(format!("u_ij(k) trapezoid vs adaptive quadrature {worst_quad:.1e}"), worst_quad < 1e-9));

    // trivial modes
    let mut worst_trivial = 0.0f64;
    for k in 1..=5 {
        for sine in [false, true] {
            for axis in 0..2 {
                let v = hessian::trivial_mode(161, k, sine, axis);
                let hv = full.apply(&v);
                let target = (k as f64 * omega).powi(2);
                let d = hv.iter().zip(&v).map(|(a, b)| (a - target * b).abs()).fold(0.0, f64::max);
                worst_trivial = worst_trivial.max(d);
            }
        }
    }
    checks.push(check(format!("H v = k^2 w^2 v for trivial modes to {worst_trivial:.1e}"), worst_trivial < 1e-8));

    // truncation
    let doubled = HessianProblem::new(q, 321, n).map_err(err)?.eigenvalues(24).map_err(err)?;
    let drift = spectrum
        .eigenvalues()
        .iter()
        .zip(&doubled)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(check(format!("eigenvalue change from M = 161 to 321: {drift:.1e}"), drift < 1e-6));
    Ok(checks)
}

fn report(id: usize, title: &str, started: Instant, outcome: Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(checks) => {
            let ok = checks.iter().all(|c| c.ok);
            println!("criterion {id} {}: {title} ({secs:.1} s)", if ok { "PASS" } else { "FAIL" });
            for c in &checks {
                println!("    [{}] {}", if c.ok { "ok" } else { "FAIL" }, c.what);
            }
            ok
        }
        Err(e) => {
            println!("criterion {id} FAIL: {title} ({secs:.1} s): {e}");
            false
        }
    }
}

fn main() {
    let mut passed = Vec::new();
    let started = Instant::now();
    let q = eight();
    passed.push(report(1, "golden a = 1 figure-eight", started, q.clone().and_then(|q| golden(&q))));
    let q = match q {
        Ok(q) => q,
        Err(e) => {
            println!("cannot continue without the a = 1 solution: {e}");
            std::process::exit(1);
        }
    };
    let t = Instant::now();
    passed.push(report(2, "a = 1 spectrum and indices", t, spectrum_a1(&q)));
    let t = Instant::now();
    passed.push(report(3, "exponent thresholds and indices", t, exponent_sweep()));
    let t = Instant::now();
    let branch = follow_alpha_branch(&AlphaOptions::default()).map_err(err);
    match &branch {
        Ok(result) => {
            passed.push(report(4, "Lennard-Jones fold", t, fold(result)));
            let t = Instant::now();
            passed.push(report(5, "Lennard-Jones index transitions", t, transitions(result)));
            let t = Instant::now();
            passed.push(report(6, "branch point at T = 14.4950", t, branch_point(result)));
        }
        Err(e) => {
            for (id, title) in [(4, "Lennard-Jones fold"), (5, "Lennard-Jones index transitions"), (6, "branch point at T = 14.4950")] {
                passed.push(report(id, title, t, Err(e.clone())));
            }
        }
    }
    let t = Instant::now();
    passed.push(report(7, "H orbit from the D_y^H pair", t, h_orbit(&q)));
    let t = Instant::now();
    passed.push(report(8, "property suites", t, properties(&q)));
    let failed = passed.iter().filter(|p| !**p).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.0} s",
        passed.len() - failed,
        passed.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
