use sphere_oep::levelset::{
    extract_level_curves, geodesic_curvature, geodesic_curvature_rotational, killing_closed_form, killing_derivative, max_curve,
    radial_graph_grid, radial_graph_profile, Normal, SampleKind,
};
use sphere_oep::profiles::{solve_annulus_profile, Branch};
use sphere_oep::{ComparisonTriple, GridSolution, Nonlinearity};
use std::f64::consts::{FRAC_PI_2, TAU};

#[test]
fn extracted_parallels_converge() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let p = solve_annulus_profile(&f, 0.3, 1.0, 1e-12).unwrap();
    let c = 0.5;
    let mut length_err = Vec::new();
    let mut kappa_err = Vec::new();
    for n in [32, 64, 128] {
        let sol = GridSolution::from_profile(&p, n, n).unwrap();
        let curves = extract_level_curves(&sol, c).unwrap();
        assert_eq!(curves.len(), 2);
        let (mut le, mut ke) = (0.0f64, 0.0f64);
        for branch in [Branch::Lower, Branch::Upper] {
            let r = ComparisonTriple::of_model(p.clone(), branch).unwrap().pseudo_radial(c).unwrap();
            let s = r.acos();
            let curve = curves.iter().min_by(|a, b| (a.mean_s() - s).abs().total_cmp(&(b.mean_s() - s).abs())).unwrap();
            assert!(curve.closed && curve.winding == 1);
            le = le.max((curve.length - TAU * s.sin()).abs());
            let exact = r / (1.0 - r * r).sqrt();
            for k in &curve.curvature {
                ke = ke.max((k - exact).abs());
            }
        }
        length_err.push(le);
        kappa_err.push(ke);
    }
    // the edge interpolation error depends on where the level falls inside
    // a cell, so the check is a bound C·h² rather than a fixed ratio
    for (k, n) in [32.0f64, 64.0, 128.0].iter().enumerate() {
        assert!(length_err[k] * n * n < 3.0, "{length_err:?}");
        assert!(kappa_err[k] * n < 1.0, "{kappa_err:?}");
    }
    assert!(length_err[2] < length_err[0] / 16.0 && kappa_err[2] < kappa_err[0] / 2.0, "{length_err:?} {kappa_err:?}");
}

#[test]
fn level_near_the_maximum_hugs_the_max_parallel() {
    let f = Nonlinearity::linear(2.0);
    let p = solve_annulus_profile(&f, 0.0, 1.0, 1e-12).unwrap();
    let sol = GridSolution::from_profile(&p, 128, 32).unwrap();
    let curves = extract_level_curves(&sol, 1.0 - 1e-4).unwrap();
    assert_eq!(curves.len(), 2);
    for c in &curves {
        assert!((c.mean_s() - FRAC_PI_2).abs() < 0.02);
    }
    assert!(extract_level_curves(&sol, 1.5).is_err());
    let gamma = max_curve(&sol, 1e-3).unwrap();
    assert!((gamma.length - TAU).abs() < 1e-3);
    assert!(gamma.curvature.iter().all(|k| k.abs() < 1e-6));
}

#[test]
fn boundary_curvature_formula() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let p = solve_annulus_profile(&f, 0.3, 1.0, 1e-12).unwrap();
    let r2 = p.r2();
    let exact = -r2 / (1.0 - r2 * r2).sqrt();
    let analytic = geodesic_curvature_rotational(&p, r2, Normal::Gradient).unwrap();
    assert!((analytic - exact).abs() < 1e-8);
    let mut errs = Vec::new();
    for n in [32, 64, 128] {
        let sol = GridSolution::from_profile(&p, n, 16).unwrap();
        errs.push((geodesic_curvature(&sol, 0, 0, Normal::Gradient).unwrap() - exact).abs());
    }
    assert!(errs[2] < errs[1] && errs[1] < errs[0], "{errs:?}");
    assert!(errs[2] < 1e-3);
}

#[test]
fn contact_angles_on_models() {
    for (a, b, r) in [(2.0, 0.0, 0.0), (2.0, 1.0, 0.4)] {
        let f = Nonlinearity::affine(a, b);
        let p = solve_annulus_profile(&f, r, 1.0, 1e-12).unwrap();
        let g = radial_graph_profile(&p, 64);
        for st in &g.stats {
            match st.kind {
                SampleKind::MaxCurve => {
                    assert!((st.mean - 1.0).abs() < 1e-8 && (st.min - 1.0).abs() < 1e-8);
                    assert!((st.radius - 1.0).abs() < 1e-10 * 2.0);
                }
                SampleKind::Boundary(_) => {
                    assert!(st.std_dev < 1e-6);
                    assert!((st.radius - 2.0).abs() < 1e-10);
                    assert!(st.mean > 0.0 && st.mean < 1.0);
                }
            }
        }
        // the grid version of the same model agrees with the exact one
        let sol = GridSolution::from_profile(&p, 96, 32).unwrap();
        let gg = radial_graph_grid(&sol);
        for (e, d) in g.stats.iter().zip(&gg.stats) {
            assert_eq!(e.kind, d.kind);
            assert!((e.mean - d.mean).abs() < 1e-3, "{e:?} {d:?}");
        }
    }
}

#[test]
fn killing_field_examples() {
    let f = Nonlinearity::linear(2.0);
    let p = solve_annulus_profile(&f, 0.0, 1.0, 1e-12).unwrap();
    let v = killing_closed_form(&p, 0.5, 0.0);
    assert!((v.abs() - 1.0530).abs() < 1e-3, "{v}");
    assert!((killing_derivative(&p, 0.5, 0.0) - v).abs() < 1e-6);
    assert!(killing_closed_form(&p, 0.5, FRAC_PI_2).abs() < 1e-12);
    assert!(killing_derivative(&p, 0.5, FRAC_PI_2).abs() < 1e-6);
    assert!(killing_closed_form(&p, 0.0, 0.7).abs() < 1e-12);
    for (r, th) in [(0.2, 0.3), (-0.6, 2.0), (0.7, 4.0)] {
        assert!((killing_derivative(&p, r, th) - killing_closed_form(&p, r, th)).abs() < 1e-6);
    }
}
