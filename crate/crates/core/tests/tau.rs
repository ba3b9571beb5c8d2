use proptest::prelude::*;
use sphere_oep::profiles::Branch;
use sphere_oep::tau::{build_tau_curve, default_grid, expected_critical_height, geometric_tail};
use sphere_oep::{CriticalBranch, Nonlinearity, TauCurve};
use std::sync::OnceLock;

fn curve() -> &'static TauCurve {
    static CURVE: OnceLock<TauCurve> = OnceLock::new();
    CURVE.get_or_init(|| build_tau_curve(&Nonlinearity::affine(2.0, 1.0), 1.0, &default_grid()).unwrap())
}

#[test]
fn codomains_and_monotonicity() {
    for (a, b) in [(2.0, 0.0), (2.0, 1.0), (3.0, 0.5)] {
        let c = build_tau_curve(&Nonlinearity::affine(a, b), 1.0, &default_grid()).unwrap();
        assert!(c.is_monotone(), "{:?}", c.violations());
        let t0 = c.tau0();
        assert!(c.tau1().iter().all(|t| *t > 1.0 && *t <= t0));
        assert!(c.tau2().iter().all(|t| *t >= t0));
        // g₁ falls and g₂ grows with the height
        for w in c.gradients(Branch::Lower).windows(2) {
            assert!(w[1] < w[0]);
        }
        for w in c.gradients(Branch::Upper).windows(2) {
            assert!(w[1] > w[0]);
        }
    }
}

#[test]
fn tail_extends_the_upper_branch() {
    let mut grid = default_grid::<f64>();
    grid.extend(geometric_tail::<f64>(5, 8));
    let c = build_tau_curve(&Nonlinearity::linear(2.0), 1.0, &grid).unwrap();
    assert!(c.is_monotone());
    let last = *c.tau2().last().unwrap();
    assert!(last > 10.0 * c.tau0());
    let hit = expected_critical_height(&c, 0.5 * (last + c.tau2()[19])).unwrap();
    assert_eq!(hit.branch, CriticalBranch::Upper);
    assert!(hit.r_bar > 0.95 && hit.r_bar < 1.0);
    assert!(expected_critical_height(&c, 2.0 * last).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inversion_between_grid_nodes(r in 0.01f64..0.94, upper in any::<bool>()) {
        let c = curve();
        let branch = if upper { Branch::Upper } else { Branch::Lower };
        let tau = c.evaluate(r, branch).unwrap();
        let hit = expected_critical_height(c, tau).unwrap();
        prop_assert_eq!(hit.branch.branch(), Some(branch));
        prop_assert!((hit.r_bar - r).abs() < 1e-6, "{} vs {}", hit.r_bar, r);
    }
}
