use proptest::prelude::*;
use sphere_oep::profiles::{check_sign_lemmas, compute_h, solve_annulus_profile, solve_disk_profile, Branch};
use sphere_oep::Nonlinearity;

/// Fixed-step RK4 for `V'' + cot(s) V' + a V + b = 0` from a three-term
/// series start, stopped at the first sign change and refined by bisecting
/// the length of the final step. Returns `(s_M, h)`.
fn rk4_disk(a: f64, b: f64, m: f64, n: usize) -> (f64, f64) {
    let fm = a * m + b;
    let c2 = -fm / 4.0;
    let c4 = c2 * (2.0 / 3.0 - a) / 16.0;
    let s0 = 1e-3;
    let mut y = [m + c2 * s0 * s0 + c4 * s0.powi(4), 2.0 * c2 * s0 + 4.0 * c4 * s0.powi(3)];
    let rhs = |s: f64, y: [f64; 2]| [y[1], -y[1] * s.cos() / s.sin() - (a * y[0] + b)];
    let h = (3.0 - s0) / n as f64;
    let mut s = s0;
    loop {
        let k1 = rhs(s, y);
        let k2 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(s + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(s + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let next = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 {
            let mut lo = 0.0;
            let mut hi = h;
            let step = |dh: f64| {
                let k1 = rhs(s, y);
                let k2 = rhs(s + dh / 2.0, [y[0] + dh / 2.0 * k1[0], y[1] + dh / 2.0 * k1[1]]);
                let k3 = rhs(s + dh / 2.0, [y[0] + dh / 2.0 * k2[0], y[1] + dh / 2.0 * k2[1]]);
                let k4 = rhs(s + dh, [y[0] + dh * k3[0], y[1] + dh * k3[1]]);
                [
                    y[0] + dh / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                    y[1] + dh / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
                ]
            };
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if step(mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let end = step(0.5 * (lo + hi));
            return (s + 0.5 * (lo + hi), -end[1]);
        }
        y = next;
        s += h;
    }
}

#[test]
fn golden_h_for_two_x_plus_one() {
    let (_, coarse) = rk4_disk(2.0, 1.0, 1.0, 4000);
    let (s_fine, fine) = rk4_disk(2.0, 1.0, 1.0, 8000);
    let richardson = fine + (fine - coarse) / 15.0;
    assert!((richardson - fine).abs() < 1e-9, "{coarse} {fine}");
    let golden = 1.414_213_562_373_095;
    assert!((richardson - golden).abs() < 1e-9);
    // also V = (3/2) cos s - 1/2 in closed form
    assert!((s_fine - (1.0f64 / 3.0).acos()).abs() < 1e-8);

    let h = compute_h(&Nonlinearity::affine(2.0, 1.0), 1.0).unwrap();
    assert!((h - golden).abs() < 1e-9, "{h}");
}

#[test]
fn disk_for_general_affine_matches_rk4() {
    let (s_ref, h_ref) = rk4_disk(3.0, 0.5, 1.2, 8000);
    let d = solve_disk_profile(&Nonlinearity::affine(3.0, 0.5), 1.2, 1e-10).unwrap();
    assert!((d.s_m() - s_ref).abs() < 1e-8);
    assert!((d.h() - h_ref).abs() < 1e-8);
    assert!(d.samples().iter().all(|row| row.v >= -1e-10));
}

/// `U'(r) = -(1/(1 - r²)) ∫_R^r f(U(x)) dx`, by composite Simpson on the
/// dense output.
#[test]
fn implicit_representation() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let (h, m) = (0.35, 1.3);
    let p = solve_annulus_profile(&f, h, m, 1e-11).unwrap();
    for row in p.samples().iter().step_by(3) {
        let n = 400;
        let dx = (row.r - h) / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f.evaluate(p.u(h + k as f64 * dx).max(0.0)).unwrap();
        }
        let integral = acc * dx / 3.0;
        let expected = -integral / (1.0 - row.r * row.r);
        assert!((row.du - expected).abs() < 1e-8 * (1.0 + expected.abs()), "r={} {} vs {}", row.r, row.du, expected);
    }
}

#[test]
fn variation_matches_finite_differences_in_r() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let (h, m) = (0.2, 1.0);
    let p = solve_annulus_profile(&f, h, m, 1e-12).unwrap();
    let mut errs = Vec::new();
    for delta in [1e-2, 5e-3] {
        let up = solve_annulus_profile(&f, h + delta, m, 1e-12).unwrap();
        let down = solve_annulus_profile(&f, h - delta, m, 1e-12).unwrap();
        let mut worst: f64 = 0.0;
        for k in 1..20 {
            let r = p.r1() + 0.1 + (p.r2() - p.r1() - 0.2) * k as f64 / 20.0;
            let fd = (up.u(r) - down.u(r)) / (2.0 * delta);
            worst = worst.max((fd - p.state(r).z).abs());
        }
        errs.push(worst);
    }
    // second order: halving δ cuts the error by about 4
    assert!(errs[0] < 1e-3, "{errs:?}");
    let ratio = errs[0] / errs[1];
    assert!((3.0..5.0).contains(&ratio), "{errs:?}");
}

#[test]
fn tolerance_halving_stays_within_error_bound() {
    let f = Nonlinearity::affine(2.0, 1.0);
    let a = solve_annulus_profile(&f, 0.3, 1.0, 1e-8).unwrap();
    let b = solve_annulus_profile(&f, 0.3, 1.0, 5e-9).unwrap();
    for br in [Branch::Lower, Branch::Upper] {
        let bound = a.zero_error_bound(br);
        assert!((a.zero(br) - b.zero(br)).abs() <= bound, "{br:?}: {} vs bound {bound}", (a.zero(br) - b.zero(br)).abs());
    }
}

#[test]
fn legendre_boundary_gradient_diverges() {
    let f = Nonlinearity::linear(2.0);
    let g: Vec<f64> = [0.5, 0.9, 0.99, 0.999]
        .iter()
        .map(|&h| solve_annulus_profile(&f, h, 1.0, 1e-10).unwrap().boundary_gradient(Branch::Upper))
        .collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]), "{g:?}");
    assert!(g[3] > 5.0 * g[0]);
    // closed form at R = 0.5: √(1 - r₂²)|U'(r₂)| = 3.6405248046
    assert!((g[0] - 3.640_524_804_630_694).abs() < 1e-8);
}

fn admissible() -> impl Strategy<Value = (f64, f64)> {
    (2.0f64..4.0, 0.0f64..1.5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zeros_are_nondecreasing_in_height((a, b) in admissible(), h in 0.0f64..0.8, m in 0.3f64..3.0) {
        let f = Nonlinearity::affine(a, b);
        let p = solve_annulus_profile(&f, h, m, 1e-10).unwrap();
        let q = solve_annulus_profile(&f, h + 0.05, m, 1e-10).unwrap();
        prop_assert!(q.r1() >= p.r1() - 1e-12);
        prop_assert!(q.r2() >= p.r2() - 1e-12);
    }

    #[test]
    fn reflection((a, b) in admissible(), h in -0.9f64..0.9, m in 0.3f64..3.0) {
        let f = Nonlinearity::affine(a, b);
        let p = solve_annulus_profile(&f, h, m, 1e-10).unwrap();
        let q = solve_annulus_profile(&f, -h, m, 1e-10).unwrap();
        prop_assert!((p.r1() + q.r2()).abs() < 1e-9);
        for k in 1..10 {
            let r = p.r1() + (p.r2() - p.r1()) * k as f64 / 10.0;
            prop_assert!((p.u(r) - q.u(-r)).abs() < 1e-9);
        }
    }

    #[test]
    fn profile_shape((a, b) in admissible(), h in -0.95f64..0.95, m in 0.1f64..5.0) {
        let f = Nonlinearity::affine(a, b);
        let p = solve_annulus_profile(&f, h, m, 1e-10).unwrap();
        prop_assert!(-1.0 < p.r1() && p.r1() < h && h < p.r2() && p.r2() <= 1.0);
        let st = p.state(h);
        prop_assert_eq!(st.u, m);
        prop_assert_eq!(st.du, 0.0);
        for row in &p.samples()[1..p.samples().len() - 1] {
            prop_assert!(row.u > 0.0);
            if row.r < h - 1e-12 { prop_assert!(row.du > 0.0); }
            if row.r > h + 1e-12 { prop_assert!(row.du < 0.0); }
        }
        let rep = check_sign_lemmas(&p, None, 200);
        prop_assert!(rep.z_pattern.pass, "{:?}", rep);
        // G''(R) = -2R f(M)²/(1 - R²)³ picks the side that can hold
        if h > 0.0 { prop_assert!(rep.g_upper.pass, "{:?}", rep); }
        if h < 0.0 { prop_assert!(rep.g_lower.pass, "{:?}", rep); }
    }
}
