use sphere_oep::pde::{fit_model_to_annulus, max_set, solve_dirichlet, DomainSpec, Guess, Perturbation, SolveOptions, SolveRoute};
use sphere_oep::profiles::solve_annulus_profile;
use sphere_oep::{ModelProfile, Nonlinearity};

fn legendre() -> (Nonlinearity, ModelProfile) {
    let f = Nonlinearity::linear(2.0);
    let p = solve_annulus_profile(&f, 0.0, 1.0, 1e-12).unwrap();
    (f, p)
}

#[test]
fn second_order_convergence_on_the_fitted_annulus() {
    let (f, p) = legendre();
    let (r, m) = fit_model_to_annulus(p.r2().acos(), p.r1().acos(), &f, 1e-10).unwrap();
    assert!(r.abs() < 1e-8 && m == 1.0);
    let mut errors = Vec::new();
    for n in [32, 64, 128] {
        let d = DomainSpec::rotational(p.r2().acos(), p.r1().acos(), n, 16).unwrap();
        let sol = solve_dirichlet(&d, &f, Guess::Profile(&p), &SolveOptions::with_tol(1e-10)).unwrap();
        assert!(sol.residual() < 1e-10 && sol.iterations() <= 8);
        assert!(sol.ring_spread() < 1e-10);
        errors.push(sol.error_against(&p));
    }
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn affine_problem_is_one_newton_step() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let p = solve_annulus_profile(&f, 0.3, 1.2, 1e-12).unwrap();
    let d = DomainSpec::rotational(p.r2().acos(), p.r1().acos(), 48, 16).unwrap();
    let sol = solve_dirichlet(&d, &f, Guess::Zeros, &SolveOptions::with_tol(1e-10)).unwrap();
    assert_eq!(sol.route(), SolveRoute::Newton);
    assert_eq!(sol.iterations(), 1);
    assert!(sol.error_against(&p) < 1e-3);
    // maximum principle
    for i in 1..sol.n_s() {
        for j in 0..sol.n_theta() {
            assert!(sol.value(i, j) > 0.0);
        }
    }
    for j in 0..sol.n_theta() {
        assert_eq!(sol.value(0, j), 0.0);
        assert_eq!(sol.value(sol.n_s(), j), 0.0);
    }
}

#[test]
fn fit_then_solve_round_trip() {
    let f = Nonlinearity::affine(3.0, 0.5);
    let p = solve_annulus_profile(&f, -0.25, 0.8, 1e-12).unwrap();
    let (r, m) = fit_model_to_annulus(p.r2().acos(), p.r1().acos(), &f, 1e-10).unwrap();
    assert!((r + 0.25).abs() < 1e-6 && (m - 0.8).abs() < 1e-6);
    let q = solve_annulus_profile(&f, r, m, 1e-12).unwrap();
    let d = DomainSpec::rotational(q.r2().acos(), q.r1().acos(), 64, 16).unwrap();
    let sol = solve_dirichlet(&d, &f, Guess::Profile(&q), &SolveOptions::with_tol(1e-10)).unwrap();
    let max_set = max_set(&sol, 1e-3);
    assert!(max_set.is_single_closed_curve());
    assert!((sol.node_max() - 0.8).abs() < 1e-3);
}

#[test]
fn perturbed_max_set_is_stable_under_refinement() {
    let (f, p) = legendre();
    let pert = Perturbation::new(0.01, 3);
    let mut maxima = Vec::new();
    for n in [48, 96] {
        let d = DomainSpec::perturbed(p.r2().acos(), p.r1().acos(), pert, pert, n, n).unwrap();
        let sol = solve_dirichlet(&d, &f, Guess::Profile(&p), &SolveOptions::with_tol(1e-9)).unwrap();
        assert_eq!(sol.route(), SolveRoute::Eigen);
        assert!(sol.residual() < 1e-9);
        let set = max_set(&sol, 1e-2);
        assert!(set.is_single_closed_curve(), "n = {n}");
        assert!(sol.ring_spread() > 1e-4);
        maxima.push(sol.node_max());
    }
    assert!((maxima[0] - maxima[1]).abs() < 1e-3, "{maxima:?}");
}

#[test]
fn rejects_bad_domains() {
    assert!(DomainSpec::rotational(1.0, 0.5, 32, 16).is_err());
    assert!(DomainSpec::rotational(0.5, 1.0, 32, 7).is_err());
    assert!(DomainSpec::rotational(0.5, 1.0, 2, 16).is_err());
}
