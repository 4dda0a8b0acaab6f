use choreo_morse::fourier::{basis_function, project, synthesize};
use choreo_morse::io::sig17;
use choreo_morse::landscape::{time_shifted, trajectory_distance};
use choreo_morse::symmetry::{apply_c, apply_sigma1, apply_sigma2, choreographic_projection};
use choreo_morse::{PeriodicTrajectory, PotentialSpec};
use proptest::prelude::*;

fn coefficients(harmonics: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 6 * (2 * harmonics + 1))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn symmetry_operators_have_their_orders(v in coefficients(7)) {
        prop_assert!(max_diff(&apply_c(&apply_c(&apply_c(&v))), &v) < 1e-13);
        prop_assert!(max_diff(&apply_sigma1(&apply_sigma1(&v)), &v) < 1e-15);
        prop_assert!(max_diff(&apply_sigma2(&apply_sigma2(&v)), &v) < 1e-15);
    }

    #[test]
    fn choreographic_projection_is_idempotent(v in coefficients(6)) {
        let p = choreographic_projection(&v);
        prop_assert!(max_diff(&choreographic_projection(&p), &p) < 1e-13);
        prop_assert!(max_diff(&apply_c(&p), &p) < 1e-13);
    }

    #[test]
    fn synthesis_matches_pointwise_sums(c in prop::collection::vec(-1.0f64..1.0, 11), period in 0.5f64..20.0) {
        let n = 24;
        let samples = synthesize(&c, period, n);
        for (j, s) in samples.iter().enumerate() {
            let t = j as f64 * period / n as f64;
            let direct: f64 = c.iter().enumerate().map(|(k, x)| x * basis_function(k, period, t)).sum();
            prop_assert!((s - direct).abs() < 1e-12);
        }
        prop_assert!(max_diff(&project(&samples, period, c.len()), &c) < 1e-12);
    }

    #[test]
    fn a_time_shift_costs_no_distance(v in coefficients(5), tau in 0.0f64..1.0) {
        let period = 7.0;
        let q = PeriodicTrajectory::new(PotentialSpec::Homogeneous { a: 1.0 }, period, v.clone()).unwrap();
        let shifted = PeriodicTrajectory::new(q.spec, period, time_shifted(&v, period, tau * period)).unwrap();
        let d = trajectory_distance(&q, &shifted).unwrap();
        prop_assert!(d.aligned < 1e-9 * (1.0 + d.raw));
        let back = trajectory_distance(&shifted, &q).unwrap();
        prop_assert!((back.raw - d.raw).abs() < 1e-14);
    }

    #[test]
    fn seventeen_digits_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let text = sig17::format(x);
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
