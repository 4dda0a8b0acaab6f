//! The symmetry tags come from operator characters; here they are compared with
//! point-set symmetries of the variated orbits themselves.

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::solver::SolverOptions;
use choreo_morse::symmetry::{variated_orbit_defects, ClusterClass};

#[test]
fn tags_match_variated_orbit_symmetries() {
    let q = homogeneous_eight(1.0, 2.0, None, &SolverOptions::default()).unwrap();
    let analysis = analyze(&q, &SpectrumOptions { count: 24, ..SpectrumOptions::default() }).unwrap();
    let x_max = q.x_max();
    let tol = 1e-4 * x_max;
    let mut seen = 0;
    for c in &analysis.classification.clusters {
        if c.degeneracy != 1 || matches!(c.class, ClusterClass::Zero | ClusterClass::Trivial { .. }) {
            continue;
        }
        let [about_y, about_x, rotation] = variated_orbit_defects(&q, &c.basis[0], 0.1 * x_max, 1500);
        let (y, x, two) = (about_y < tol, about_x < tol, rotation < tol);
        assert_eq!(c.tags.y, y, "{}: y-axis defect {about_y:.2e}", c.label);
        assert_eq!(c.tags.e, y && x, "{}: axis defects {about_y:.2e} {about_x:.2e}", c.label);
        assert_eq!(c.tags.two, two, "{}: rotation defect {rotation:.2e}", c.label);
        // each simple cluster keeps at least one of the eight's symmetries
        assert!(y || x || two, "{} has no symmetry left", c.label);
        seen += 1;
    }
    assert!(seen >= 4);
}
