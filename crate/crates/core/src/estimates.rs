//! Gradient, curvature and length estimates of a grid solution against a
//! comparison triple.
//!
//! A component of `Ω \ Max(u)` is selected by its side of the ridge of
//! column maxima: [`Branch::Upper`] is the part between the ridge and the
//! northern wall (`σ = 0`), [`Branch::Lower`] the part towards the southern
//! wall. The branch of the triple is independent of that and follows from
//! `τ̄` alone.

use serde::Serialize;

use crate::comparison::ComparisonTriple;
use crate::error::{Error, Result};
use crate::levelset::{geodesic_curvature, max_curve, metric_length, ridge, LevelCurve, Normal, RidgePoint};
use crate::pde::GridSolution;
use crate::profiles::{compute_h, Branch};
use crate::scalar::Real;
use crate::tau::{build_tau_curve, default_grid, tau_of_boundary};

/// Constant in the default gradient slack `C·h²`, `h = 1/n_s`, calibrated
/// on the rotational equality case (see the crate tests).
pub const GRADIENT_SLACK_C: f64 = 10.0;

pub fn default_gradient_slack<T: Real>(solution: &GridSolution<T>) -> T {
    let h = solution.domain().h_sigma();
    T::lit(GRADIENT_SLACK_C) * h * h
}

/// Summary of the triple a report was computed against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleSummary {
    pub branch: u8,
    pub max_value: f64,
    pub r_bar: f64,
    pub r_bar_i: f64,
    pub tau_target: f64,
    pub tau_model: f64,
}

impl TripleSummary {
    pub fn of<T: Real>(t: &ComparisonTriple<T>) -> Self {
        Self {
            branch: t.branch().index(),
            max_value: t.max_value().as_f64(),
            r_bar: t.r_bar().as_f64(),
            r_bar_i: t.r_bar_i().as_f64(),
            tau_target: t.tau_target().as_f64(),
            tau_model: t.tau_model().as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeLocation {
    pub i: usize,
    pub j: usize,
    pub s: f64,
    pub theta: f64,
}

fn locate<T: Real>(solution: &GridSolution<T>, i: usize, j: usize) -> NodeLocation {
    NodeLocation { i, j, s: solution.s(i, j).as_f64(), theta: solution.theta(j).as_f64() }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub side: u8,
    pub triple: TripleSummary,
    pub nodes: usize,
    /// `max(W - W̄)` over the interior nodes of the component.
    pub max_violation: f64,
    pub location: Option<NodeLocation>,
    pub max_abs_difference: f64,
    /// `max (W - W̄)/|Ū'(Ψ)|` away from the critical collar.
    pub max_f_beta: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Interior nodes of the component on `side` of the ridge.
pub fn component_nodes<T: Real>(solution: &GridSolution<T>, side: Branch, ridge: &[RidgePoint<T>]) -> Vec<(usize, usize)> {
    let d = solution.domain();
    let mut out = Vec::new();
    for i in 1..solution.n_s() {
        let sigma = d.sigma(i);
        for (j, p) in ridge.iter().enumerate() {
            let inside = match side {
                Branch::Upper => sigma < p.sigma,
                Branch::Lower => sigma > p.sigma,
            };
            if inside {
                out.push((i, j));
            }
        }
    }
    out
}

fn boundary_row<T: Real>(solution: &GridSolution<T>, side: Branch) -> usize {
    match side {
        Branch::Upper => 0,
        Branch::Lower => solution.n_s(),
    }
}

fn check_max<T: Real>(solution: &GridSolution<T>, triple: &ComparisonTriple<T>, tol: T) -> Result<T> {
    let found = crate::levelset::interpolated_max(solution);
    let m = triple.max_value();
    if (found - m).abs() > tol * m.max(T::one()) {
        return Err(Error::MaximumMismatch { found: found.as_f64(), expected: m.as_f64() });
    }
    Ok(found)
}

/// Checks `W ≤ W̄ + slack` on the interior nodes of one component.
/// `max_tol` bounds the relative mismatch between the interpolated maximum
/// of `u` and the `M` of the triple.
pub fn verify_gradient_estimate<T: Real>(
    solution: &GridSolution<T>,
    side: Branch,
    triple: &ComparisonTriple<T>,
    slack: T,
    max_tol: T,
) -> Result<ComparisonReport> {
    check_max(solution, triple, max_tol)?;
    let m = triple.max_value();
    let ridge = ridge(solution);
    let nodes = component_nodes(solution, side, &ridge);
    let mut worst = T::neg_infinity();
    let mut worst_at = None;
    let mut abs_diff = T::zero();
    let mut f_beta = T::neg_infinity();
    let collar = T::lit(1e-3) * (triple.r_bar_i() - triple.r_bar()).abs();
    for &(i, j) in &nodes {
        let u = solution.value(i, j).min(m);
        let w = solution.gradient(i, j).norm_sq;
        let psi = triple.pseudo_radial(u)?;
        let wbar = triple.wbar(u)?;
        let diff = w - wbar;
        abs_diff = abs_diff.max(diff.abs());
        if diff > worst {
            worst = diff;
            worst_at = Some(locate(solution, i, j));
        }
        if (psi - triple.r_bar()).abs() > collar {
            let du = (wbar / (T::one() - psi * psi)).sqrt();
            f_beta = f_beta.max(diff / du);
        }
    }
    Ok(ComparisonReport {
        side: side.index(),
        triple: TripleSummary::of(triple),
        nodes: nodes.len(),
        max_violation: worst.as_f64(),
        location: worst_at,
        max_abs_difference: abs_diff.as_f64(),
        max_f_beta: f_beta.as_f64(),
        slack: slack.as_f64(),
        pass: !nodes.is_empty() && worst <= slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureOptions {
    /// Wall allowance `C·(1 + |bound|)·(Δs/sin s)²` with `Δs` the first
    /// radial cell at the wall node; the relative cell size `Δs/sin s` is
    /// what the differenced formula's error scales with near the poles.
    pub boundary_slack_c: f64,
    pub curve_slack: f64,
    /// Collar below `u_max` used to confirm the maximum set encircles.
    pub collar: f64,
    pub max_tol: f64,
}

impl CurvatureOptions {
    /// Second-order allowance at the wall and `C·h` along the ridge polyline.
    pub fn for_solution<T: Real>(solution: &GridSolution<T>) -> Self {
        let h = solution.domain().h_sigma().as_f64();
        Self { boundary_slack_c: 2.0, curve_slack: 2.0 * h, collar: 1e-2, max_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCurvature {
    pub location: NodeLocation,
    pub grad_sq: f64,
    /// Curvature of the wall with respect to the normal into the component.
    pub kappa: f64,
    pub bound: f64,
    /// `bound - κ`; nonnegative when the estimate holds exactly.
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxCurveCurvature {
    pub samples: usize,
    pub max_kappa: f64,
    pub min_kappa: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub side: u8,
    pub triple: TripleSummary,
    pub boundary: BoundaryCurvature,
    pub max_curve: MaxCurveCurvature,
    pub options: CurvatureOptions,
    pub pass: bool,
}

/// Ridge curvature with respect to the normal pointing into the component.
fn inner_curvature<T: Real>(curve: &LevelCurve<T>, side: Branch) -> Vec<T> {
    // the ridge is traversed with increasing θ, left normal pointing north
    curve
        .curvature
        .iter()
        .map(|k| match side {
            Branch::Upper => *k,
            Branch::Lower => -*k,
        })
        .collect()
}

/// Boundary curvature at the point of largest `|∇u|²` on the component's
/// wall and curvature of the ridge, against the bounds of the triple.
pub fn verify_curvature_estimates<T: Real>(
    solution: &GridSolution<T>,
    side: Branch,
    triple: &ComparisonTriple<T>,
    opts: &CurvatureOptions,
) -> Result<CurvatureReport> {
    check_max(solution, triple, T::lit(opts.max_tol))?;
    let i = boundary_row(solution, side);
    let w: Vec<T> = (0..solution.n_theta()).map(|j| solution.gradient(i, j).norm_sq).collect();
    let j = (0..w.len()).fold(0, |b, k| if w[k] > w[b] { k } else { b });
    let kappa = geodesic_curvature(solution, i, j, Normal::Gradient)?.as_f64();
    let bound = triple.boundary_curvature_bound().as_f64();
    let inner = if i == 0 { 1 } else { i - 1 };
    let s = solution.s(i, j);
    let cell = ((solution.s(inner, j) - s).abs() / s.sin()).as_f64();
    let slack = opts.boundary_slack_c * (1.0 + bound.abs()) * cell * cell;
    let boundary = BoundaryCurvature {
        location: locate(solution, i, j),
        grad_sq: w[j].as_f64(),
        kappa,
        bound,
        margin: bound - kappa,
        slack,
        pass: kappa <= bound + slack,
    };

    let curve = max_curve(solution, T::lit(opts.collar) * solution.node_max())?;
    let ks = inner_curvature(&curve, side);
    let hi = ks.iter().fold(T::neg_infinity(), |m, k| m.max(*k)).as_f64();
    let lo = ks.iter().fold(T::infinity(), |m, k| m.min(*k)).as_f64();
    let cb = triple.max_curve_curvature_bound().as_f64();
    let max_curve = MaxCurveCurvature {
        samples: ks.len(),
        max_kappa: hi,
        min_kappa: lo,
        bound: cb,
        margin: cb - hi,
        pass: hi <= cb + opts.curve_slack,
    };
    let pass = boundary.pass && max_curve.pass;
    Ok(CurvatureReport { side: side.index(), triple: TripleSummary::of(triple), boundary, max_curve, options: *opts, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLengthBound {
    pub boundary_length: f64,
    /// `2π√(1 - r̄ᵢ²)`.
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LengthReport {
    pub side: u8,
    pub triple: TripleSummary,
    /// `|γ|`, the ridge length.
    pub max_curve_length: f64,
    /// `|Γ|`, the length of the component's wall.
    pub boundary_length: f64,
    pub factor: f64,
    /// `factor·|Γ|`.
    pub bound: f64,
    pub margin: f64,
    pub slack: f64,
    pub pass: bool,
    /// Only evaluated when `f(0) = 0`.
    pub zero_source_bound: Option<BoundaryLengthBound>,
}

/// `|γ| ≤ √((1 - R̄²)/(1 - r̄ᵢ²))·|Γ|` for one component, plus
/// `|Γ| ≤ 2π√(1 - r̄ᵢ²)` when `f(0) = 0`.
pub fn verify_length_estimate<T: Real>(
    solution: &GridSolution<T>,
    side: Branch,
    triple: &ComparisonTriple<T>,
    slack: T,
    collar: T,
    max_tol: T,
) -> Result<LengthReport> {
    check_max(solution, triple, max_tol)?;
    let gamma = max_curve(solution, collar * solution.node_max())?;
    let i = boundary_row(solution, side);
    let wall: Vec<(T, T)> = (0..solution.n_theta()).map(|j| (solution.s(i, j), solution.theta(j))).collect();
    let big_gamma = metric_length(&wall, true);
    let factor = triple.length_factor();
    let bound = factor * big_gamma;
    let margin = bound - gamma.length;
    let zero_source_bound = (triple.nonlinearity().value(T::zero()) == T::zero()).then(|| {
        let b = triple.model_boundary_length();
        BoundaryLengthBound {
            boundary_length: big_gamma.as_f64(),
            bound: b.as_f64(),
            margin: (b - big_gamma).as_f64(),
            pass: big_gamma <= b + slack,
        }
    });
    Ok(LengthReport {
        side: side.index(),
        triple: TripleSummary::of(triple),
        max_curve_length: gamma.length.as_f64(),
        boundary_length: big_gamma.as_f64(),
        factor: factor.as_f64(),
        bound: bound.as_f64(),
        margin: margin.as_f64(),
        slack: slack.as_f64(),
        pass: margin >= -slack,
        zero_source_bound,
    })
}

/// `τ̄` of the component on `side`: its largest wall value of `|∇u|²` over
/// `h(M)²`, with `M` the interpolated maximum of `u`.
pub fn component_tau<T: Real>(solution: &GridSolution<T>, side: Branch) -> Result<(T, T)> {
    let m = crate::levelset::interpolated_max(solution);
    let i = boundary_row(solution, side);
    let w = (0..solution.n_theta()).map(|j| solution.gradient(i, j).norm_sq).fold(T::zero(), |a, b| a.max(b));
    Ok((m, tau_of_boundary(w, m, solution.nonlinearity())?))
}

/// Associated model triple of the component on `side`, from the τ̄ curve of
/// the solution's nonlinearity at its interpolated maximum.
pub fn associated_triple<T: Real>(solution: &GridSolution<T>, side: Branch) -> Result<ComparisonTriple<T>> {
    let (m, tau) = component_tau(solution, side)?;
    let f = solution.nonlinearity();
    compute_h(f, m)?;
    let curve = build_tau_curve(f, m, &default_grid())?;
    ComparisonTriple::associated(&curve, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::profiles::solve_annulus_profile;

    #[test]
    fn model_solution_is_an_equality_case() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.3, 1.0, 1e-12).unwrap();
        let sol = GridSolution::from_profile(&p, 64, 32).unwrap();
        for side in [Branch::Upper, Branch::Lower] {
            let t = ComparisonTriple::of_model(p.clone(), side).unwrap();
            let g = verify_gradient_estimate(&sol, side, &t, default_gradient_slack(&sol), 1e-6).unwrap();
            assert!(g.pass && g.max_abs_difference < 1e-3, "{g:?}");
            let c = verify_curvature_estimates(&sol, side, &t, &CurvatureOptions::for_solution(&sol)).unwrap();
            assert!(c.pass, "{c:?}");
            assert!(c.boundary.margin.abs() < 5e-3, "{c:?}");
            assert!(c.max_curve.margin.abs() < 1e-6, "{c:?}");
            let l = verify_length_estimate(&sol, side, &t, 1e-6, 1e-2, 1e-6).unwrap();
            assert!(l.pass && l.margin.abs() < 1e-6, "{l:?}");
            assert!(l.zero_source_bound.is_none());
        }
    }

    #[test]
    fn mismatched_maximum_is_an_error() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.3, 1.0, 1e-12).unwrap();
        let q = solve_annulus_profile(&f, 0.3, 1.2, 1e-12).unwrap();
        let sol = GridSolution::from_profile(&p, 32, 16).unwrap();
        let t = ComparisonTriple::of_model(q, Branch::Upper).unwrap();
        assert!(matches!(
            verify_gradient_estimate(&sol, Branch::Upper, &t, 1e-3, 1e-3),
            Err(Error::MaximumMismatch { .. })
        ));
    }

    #[test]
    fn associated_triple_of_a_model_recovers_its_height() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.25, 1.0, 1e-12).unwrap();
        let sol = GridSolution::from_profile(&p, 96, 16).unwrap();
        let t = associated_triple(&sol, Branch::Upper).unwrap();
        assert_eq!(t.branch(), Branch::Upper);
        assert!((t.r_bar() - 0.25).abs() < 1e-4, "{}", t.r_bar());
        let t = associated_triple(&sol, Branch::Lower).unwrap();
        assert_eq!(t.branch(), Branch::Lower);
        assert!((t.r_bar() - 0.25).abs() < 1e-4, "{}", t.r_bar());
    }
}
