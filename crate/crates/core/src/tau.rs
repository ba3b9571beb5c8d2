//! τ̄-functions of model solutions and the expected critical height.
//!
//! For a model solution `u_{R,M}` the τ̄ of the component adjacent to `Γⁱ`
//! is `gᵢ(R)² / h(M)²` where `gᵢ` is the boundary gradient at `rᵢ` and
//! `h(M)` the boundary slope of the disk solution with the same maximum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::{Branch, DiskProfile, ModelProfile, ProfileOptions};
use crate::roots::{bracket_monotone, brent, BrentOptions};
use crate::scalar::Real;

/// `{0, 0.05, …, 0.95}`.
pub fn default_grid<T: Real>() -> Vec<T> {
    (0..20).map(|k| T::lit(0.05 * k as f64)).collect()
}

/// `1 - 2⁻ᵏ` for `k = k0..=k1`, for extending τ̄₂ toward the pole.
pub fn geometric_tail<T: Real>(k0: u32, k1: u32) -> Vec<T> {
    (k0..=k1).map(|k| T::one() - T::lit(0.5f64.powi(k as i32))).collect()
}

/// Tabulated τ̄₁, τ̄₂ for fixed `M`.
#[derive(Debug, Clone)]
pub struct TauCurve<T: Real> {
    f: Nonlinearity<T>,
    max_value: T,
    grid: Vec<T>,
    g1: Vec<T>,
    g2: Vec<T>,
    tau1: Vec<T>,
    tau2: Vec<T>,
    h: T,
    options: ProfileOptions<T>,
    violations: Vec<MonotonicityViolation>,
}

/// A pair of consecutive grid samples where the expected strict
/// monotonicity fails (usually a tolerance that is too loose).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub branch: Branch,
    pub index: usize,
    pub r: f64,
    pub step: f64,
}

/// How the expected critical height was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalBranch {
    /// `τ ≤ 1`: the disk case, `R̄ = 1`.
    Disk,
    /// `τ = τ₀`: both branches give `R̄ = 0`.
    Both,
    Lower,
    Upper,
}

impl CriticalBranch {
    pub fn branch(self) -> Option<Branch> {
        match self {
            CriticalBranch::Lower => Some(Branch::Lower),
            CriticalBranch::Upper => Some(Branch::Upper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalHeight<T> {
    pub r_bar: T,
    pub branch: CriticalBranch,
}

/// Builds the τ̄ table with the default profile tolerance.
pub fn build_tau_curve<T: Real>(f: &Nonlinearity<T>, max_value: T, grid: &[T]) -> Result<TauCurve<T>> {
    TauCurve::build(f, max_value, grid, &ProfileOptions::default())
}

impl<T: Real> TauCurve<T> {
    /// Solves one profile per grid sample in parallel. `R = 0` is added to
    /// the grid when missing so that `τ₀` is always tabulated.
    pub fn build(f: &Nonlinearity<T>, max_value: T, grid: &[T], options: &ProfileOptions<T>) -> Result<Self> {
        let mut grid: Vec<T> = grid.to_vec();
        if grid.first().map_or(true, |&r| r != T::zero()) {
            grid.insert(0, T::zero());
        }
        if grid.iter().any(|&r| !(r >= T::zero() && r < T::one())) {
            return Err(Error::InvalidInput("τ grid must lie in [0, 1)".into()));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("τ grid must be strictly ascending".into()));
        }
        let h = DiskProfile::solve(f, max_value, options)?.h();
        let gradients: Vec<(T, T)> = grid
            .par_iter()
            .map(|&r| {
                let p = ModelProfile::solve(f, r, max_value, options)?;
                Ok((p.boundary_gradient(Branch::Lower), p.boundary_gradient(Branch::Upper)))
            })
            .collect::<Result<_>>()?;
        let (g1, g2): (Vec<T>, Vec<T>) = gradients.into_iter().unzip();
        let h2 = h * h;
        let tau1: Vec<T> = g1.iter().map(|&g| g * g / h2).collect();
        let tau2: Vec<T> = g2.iter().map(|&g| g * g / h2).collect();

        let mut violations = Vec::new();
        for k in 0..grid.len() - 1 {
            if !(tau1[k + 1] < tau1[k]) {
                violations.push(MonotonicityViolation {
                    branch: Branch::Lower,
                    index: k,
                    r: grid[k + 1].as_f64(),
                    step: (tau1[k + 1] - tau1[k]).as_f64(),
                });
            }
            if !(tau2[k + 1] > tau2[k]) {
                violations.push(MonotonicityViolation {
                    branch: Branch::Upper,
                    index: k,
                    r: grid[k + 1].as_f64(),
                    step: (tau2[k + 1] - tau2[k]).as_f64(),
                });
            }
        }
        Ok(Self {
            f: f.clone(),
            max_value,
            grid,
            g1,
            g2,
            tau1,
            tau2,
            h,
            options: *options,
            violations,
        })
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.f
    }

    pub fn max_value(&self) -> T {
        self.max_value
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn tau1(&self) -> &[T] {
        &self.tau1
    }

    pub fn tau2(&self) -> &[T] {
        &self.tau2
    }

    pub fn tau(&self, branch: Branch) -> &[T] {
        match branch {
            Branch::Lower => &self.tau1,
            Branch::Upper => &self.tau2,
        }
    }

    /// Boundary gradients `g₁(R)`, `g₂(R)` before normalization.
    pub fn gradients(&self, branch: Branch) -> &[T] {
        match branch {
            Branch::Lower => &self.g1,
            Branch::Upper => &self.g2,
        }
    }

    /// `τ₀(M)`, the common value at `R = 0`.
    pub fn tau0(&self) -> T {
        // the two are equal up to the solver tolerance; average for symmetry
        (self.tau1[0] + self.tau2[0]) / T::lit(2.0)
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// Grid pairs where strict monotonicity failed; empty when the table is
    /// consistent.
    pub fn violations(&self) -> &[MonotonicityViolation] {
        &self.violations
    }

    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// τ̄ of a fresh model solution at height `r`.
    pub fn evaluate(&self, r: T, branch: Branch) -> Result<T> {
        let p = ModelProfile::solve(&self.f, r, self.max_value, &self.options)?;
        let g = p.boundary_gradient(branch);
        Ok(g * g / (self.h * self.h))
    }
}

/// Inverts the monotone τ̄ branches: `R̄ = 1` for `τ ≤ 1`, the τ̄₁ inverse on
/// `(1, τ₀)`, the τ̄₂ inverse on `[τ₀, ∞)`. The tabulation brackets the
/// answer and Brent's method refines it on fresh profile solves.
pub fn expected_critical_height<T: Real>(curve: &TauCurve<T>, tau_value: T) -> Result<CriticalHeight<T>> {
    if !(tau_value >= T::zero()) {
        return Err(Error::InvalidInput(format!("τ must be non-negative (got {tau_value})")));
    }
    if tau_value <= T::one() {
        return Ok(CriticalHeight { r_bar: T::one(), branch: CriticalBranch::Disk });
    }
    let tau0 = curve.tau0();
    let same = T::lit(1e-12) * tau0;
    if (tau_value - tau0).abs() <= same {
        return Ok(CriticalHeight { r_bar: T::zero(), branch: CriticalBranch::Both });
    }
    let (branch, kind) = if tau_value > tau0 {
        (Branch::Upper, CriticalBranch::Upper)
    } else {
        (Branch::Lower, CriticalBranch::Lower)
    };
    let table = curve.tau(branch);
    let grid = curve.grid();
    let k = bracket_monotone(table, tau_value).ok_or_else(|| {
        let (lo, hi) = match branch {
            Branch::Upper => (tau0, table[table.len() - 1]),
            Branch::Lower => (table[table.len() - 1], tau0),
        };
        Error::OutOfRange { value: tau_value.as_f64(), min: lo.as_f64(), max: hi.as_f64() }
    })?;
    for j in [k, k + 1] {
        if (table[j] - tau_value).abs() <= same {
            return Ok(CriticalHeight { r_bar: grid[j], branch: kind });
        }
    }
    let opts = BrentOptions { xtol: T::lit(1e-12), ftol: T::zero(), max_iter: 100 };
    // the tabulated endpoint values seed the bracket; interior evaluations are fresh solves
    let (a, b) = (grid[k], grid[k + 1]);
    let (ta, tb) = (table[k] - tau_value, table[k + 1] - tau_value);
    let r_bar = brent(
        |r| {
            if r == a {
                Ok(ta)
            } else if r == b {
                Ok(tb)
            } else {
                Ok(curve.evaluate(r, branch)? - tau_value)
            }
        },
        a,
        b,
        &opts,
    )?;
    Ok(CriticalHeight { r_bar, branch: kind })
}

/// `τ̄ = max|∇u|² / h(M)²` on one boundary component (a component that does
/// not meet the boundary gets `max_grad_sq = 0`).
pub fn tau_of_boundary<T: Real>(max_grad_sq: T, max_value: T, f: &Nonlinearity<T>) -> Result<T> {
    if !(max_value > T::zero()) {
        return Err(Error::InvalidInput(format!("maximum must be positive (got {max_value})")));
    }
    if max_grad_sq == T::zero() {
        return Ok(T::zero());
    }
    let h = DiskProfile::solve(f, max_value, &ProfileOptions::default())?.h();
    Ok(max_grad_sq / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin2() -> Nonlinearity<f64> {
        Nonlinearity::linear(2.0)
    }

    fn legendre_tau0() -> f64 {
        let (mut a, mut b) = (0.5f64, 0.99f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m * m.atanh() < 1.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let r = 0.5 * (a + b);
        let g = (1.0 - r * r).sqrt() * (r.atanh() + r / (1.0 - r * r));
        g * g
    }

    #[test]
    fn tau0_legendre() {
        let c = build_tau_curve(&lin2(), 1.0, &default_grid()).unwrap();
        assert!((c.tau0() - 4.7167).abs() < 1e-3);
        assert!((c.tau0() - legendre_tau0()).abs() < 1e-9);
        assert!((c.tau1()[0] - c.tau2()[0]).abs() < 1e-10);
        assert!(c.is_monotone(), "{:?}", c.violations());
        assert!(c.tau1().iter().all(|&t| t > 1.0));
    }

    #[test]
    fn scale_invariance_for_linear_f() {
        let a = build_tau_curve(&lin2(), 1.0, &[0.0, 0.5]).unwrap();
        let b = build_tau_curve(&lin2(), 2.0, &[0.0, 0.5]).unwrap();
        assert!((a.tau0() - b.tau0()).abs() < 1e-9);
        assert!((a.tau2()[1] - b.tau2()[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_is_prepended() {
        let c = build_tau_curve(&lin2(), 1.0, &[0.3, 0.6]).unwrap();
        assert_eq!(c.grid(), &[0.0, 0.3, 0.6]);
    }

    #[test]
    fn bad_grids() {
        assert!(build_tau_curve(&lin2(), 1.0, &[0.0, 0.5, 0.4]).is_err());
        assert!(build_tau_curve(&lin2(), 1.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn inversion_cases() {
        let c = build_tau_curve(&lin2(), 1.0, &default_grid()).unwrap();
        let disk = expected_critical_height(&c, 0.7).unwrap();
        assert_eq!(disk, CriticalHeight { r_bar: 1.0, branch: CriticalBranch::Disk });
        let eq = expected_critical_height(&c, c.tau0()).unwrap();
        assert_eq!(eq.r_bar, 0.0);
        let near = expected_critical_height(&c, 4.7167).unwrap();
        assert!(near.r_bar.abs() < 1e-3);
        let big = c.tau2()[c.tau2().len() - 1] * 1.01;
        assert!(matches!(expected_critical_height(&c, big), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn inversion_between_nodes_solves_fresh_profiles() {
        let c = build_tau_curve(&lin2(), 1.0, &default_grid()).unwrap();
        for (r, br) in [(0.123, Branch::Upper), (0.377, Branch::Lower)] {
            let t = c.evaluate(r, br).unwrap();
            let inv = expected_critical_height(&c, t).unwrap();
            assert!((inv.r_bar - r).abs() < 1e-8, "{r} {inv:?}");
            assert_eq!(inv.branch.branch(), Some(br));
        }
    }

    #[test]
    fn tau_of_boundary_cases() {
        let f = Nonlinearity::affine(2.0, 1.0);
        let h: f64 = crate::profiles::compute_h(&f, 1.0).unwrap();
        assert!((tau_of_boundary(h * h, 1.0, &f).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(tau_of_boundary(0.0, 1.0, &f).unwrap(), 0.0);
        assert!((tau_of_boundary(4.7167, 1.0, &lin2()).unwrap() - 4.7167).abs() < 1e-9);
    }
}
