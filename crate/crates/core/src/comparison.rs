//! Comparison triples, pseudo-radial functions and the comparison field W̄.
//!
//! A comparison triple fixes a model profile `Ū = U_{R̄,M}` and the side of
//! its maximum (branch) used to compare a component of a general solution.
//! The pseudo-radial function `χ` inverts `Ū` on that side, and
//! `W̄ = (1 - Ψ²) Ū'(Ψ)²` with `Ψ = χ(u)` is the squared gradient the model
//! would have at the same value of `u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::{Branch, DiskProfile, ModelProfile, ProfileOptions};
use crate::roots::{brent, BrentOptions};
use crate::scalar::Real;
use crate::tau::{expected_critical_height, CriticalBranch, TauCurve};

#[derive(Debug, Clone)]
pub struct ComparisonTriple<T: Real> {
    profile: ModelProfile<T>,
    branch: Branch,
    tau_target: T,
    tau_model: T,
    h: T,
}

/// `χ(u)`, `W̄(u)` and the diagnostic `φ(Ψ)` at one value of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WbarSample<T> {
    pub u: T,
    pub psi: T,
    pub wbar: T,
    /// `None` inside the collar around `R̄` where `Ū' → 0`.
    pub phi: Option<T>,
}

impl<T: Real> ComparisonTriple<T> {
    /// Checks `τ̄(component) ≤ τ̄(model side)`. Components with `τ̄ = 0`
    /// (not touching the boundary) are rejected.
    pub fn new(profile: ModelProfile<T>, branch: Branch, tau_target: T) -> Result<Self> {
        let h = DiskProfile::solve(profile.nonlinearity(), profile.max_value(), &ProfileOptions::default())?.h();
        let g = profile.boundary_gradient(branch);
        let tau_model = g * g / (h * h);
        if !(tau_target > T::zero()) {
            return Err(Error::NotAComparisonTriple(format!(
                "component τ̄ must be positive (got {tau_target}); interior components are not compared"
            )));
        }
        let slack = T::lit(1e-9) * tau_model;
        if tau_target > tau_model + slack {
            return Err(Error::NotAComparisonTriple(format!(
                "component τ̄ = {tau_target} exceeds the model value {tau_model} on branch {}",
                branch.index()
            )));
        }
        Ok(Self { profile, branch, tau_target, tau_model, h })
    }

    /// The model itself on one side, compared against itself.
    pub fn of_model(profile: ModelProfile<T>, branch: Branch) -> Result<Self> {
        let h = DiskProfile::solve(profile.nonlinearity(), profile.max_value(), &ProfileOptions::default())?.h();
        let g = profile.boundary_gradient(branch);
        Self::new(profile, branch, g * g / (h * h))
    }

    /// Associated model triple of a component with the given τ̄: `R̄` from
    /// inverting the τ̄ curve, branch 2 when `τ̄ ≥ τ₀`.
    pub fn associated(curve: &TauCurve<T>, tau_value: T) -> Result<Self> {
        let crit = expected_critical_height(curve, tau_value)?;
        let branch = match crit.branch {
            CriticalBranch::Disk => {
                return Err(Error::NotAComparisonTriple(format!("τ̄ = {tau_value} ≤ 1 gives the disk case R̄ = 1")));
            }
            CriticalBranch::Both | CriticalBranch::Upper => Branch::Upper,
            CriticalBranch::Lower => Branch::Lower,
        };
        let profile = ModelProfile::solve(curve.nonlinearity(), crit.r_bar, curve.max_value(), &ProfileOptions::default())?;
        let g = profile.boundary_gradient(branch);
        let tau_model = g * g / (curve.h() * curve.h());
        // the inversion is accurate to ~1e-12 in R̄; accept the target as
        // long as it does not exceed the model value by more than that
        let tau_target = tau_value.min(tau_model);
        Self::new(profile, branch, tau_target)
    }

    pub fn profile(&self) -> &ModelProfile<T> {
        &self.profile
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        self.profile.nonlinearity()
    }

    pub fn max_value(&self) -> T {
        self.profile.max_value()
    }

    /// Critical height `R̄`.
    pub fn r_bar(&self) -> T {
        self.profile.height()
    }

    /// The model zero `r̄ᵢ` on the compared side.
    pub fn r_bar_i(&self) -> T {
        self.profile.zero(self.branch)
    }

    pub fn tau_target(&self) -> T {
        self.tau_target
    }

    pub fn tau_model(&self) -> T {
        self.tau_model
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// `χ(u)`: the height on the compared side with `Ū(χ) = u`.
    pub fn pseudo_radial(&self, u: T) -> Result<T> {
        let m = self.max_value();
        if !(u >= T::zero() && u <= m) {
            return Err(Error::Domain { x: u.as_f64(), max: m.as_f64() });
        }
        let rb = self.r_bar();
        let ri = self.r_bar_i();
        if u == m {
            return Ok(rb);
        }
        if u == T::zero() {
            return Ok(ri);
        }
        let opts = BrentOptions { xtol: T::zero(), ftol: T::zero(), max_iter: 200 };
        let (mu, zero) = (m - u, -u);
        brent(
            |r| {
                Ok(if r == rb {
                    mu
                } else if r == ri {
                    zero
                } else {
                    self.profile.u(r) - u
                })
            },
            rb,
            ri,
            &opts,
        )
    }

    /// `χ̇ = 1/Ū'(χ(u))`.
    pub fn chi_dot(&self, u: T) -> Result<T> {
        Ok(T::one() / self.profile.du(self.pseudo_radial(u)?))
    }

    /// `φ(r) = (f(Ū) - 2rŪ') / ((1 - r²) Ū'²)`, undefined at `R̄`.
    pub fn phi_at(&self, r: T) -> T {
        let st = self.profile.state(r);
        let f = self.nonlinearity().value(st.u);
        (f - T::lit(2.0) * r * st.du) / ((T::one() - r * r) * st.du * st.du)
    }

    /// `χ̈ = φ(χ)/Ū'(χ)`.
    pub fn chi_ddot(&self, u: T) -> Result<T> {
        let psi = self.pseudo_radial(u)?;
        Ok(self.phi_at(psi) / self.profile.du(psi))
    }

    /// `W̄(u) = (1 - Ψ²) Ū'(Ψ)²`.
    pub fn wbar(&self, u: T) -> Result<T> {
        let psi = self.pseudo_radial(u)?;
        Ok(self.wbar_at_psi(psi))
    }

    fn wbar_at_psi(&self, psi: T) -> T {
        if psi == self.r_bar_i() {
            self.profile.boundary_gradient(self.branch).powi(2)
        } else {
            self.profile.grad_sq(psi)
        }
    }

    /// `dW̄/du = 2(ΨŪ'(Ψ) - f(u))`.
    pub fn dwbar_du(&self, u: T) -> Result<T> {
        let psi = self.pseudo_radial(u)?;
        Ok(T::lit(2.0) * (psi * self.profile.du(psi) - self.nonlinearity().value(u)))
    }

    /// `W̄`, `Ψ` and `φ` at each value; `φ` is withheld within `collar` of
    /// `R̄` (default `10⁻³·(r̄₂ - r̄₁)`).
    pub fn wbar_field(&self, us: &[T], collar: Option<T>) -> Result<Vec<WbarSample<T>>> {
        let p = &self.profile;
        let collar = collar.unwrap_or_else(|| T::lit(1e-3) * (p.r2() - p.r1()));
        us.iter()
            .map(|&u| {
                let psi = self.pseudo_radial(u)?;
                let phi = ((psi - self.r_bar()).abs() >= collar).then(|| self.phi_at(psi));
                Ok(WbarSample { u, psi, wbar: self.wbar_at_psi(psi), phi })
            })
            .collect()
    }

    /// Geodesic curvature of the parallel `Ψ = r` seen from the compared
    /// component: `r/√(1 - r²)` toward the north on branch 2, the negative
    /// on branch 1.
    pub fn model_curvature(&self, r: T) -> T {
        let k = r / (T::one() - r * r).sqrt();
        match self.branch {
            Branch::Upper => k,
            Branch::Lower => -k,
        }
    }

    /// Bound on the boundary curvature at the point of maximal gradient:
    /// `-r̄₂/√(1 - r̄₂²)` on branch 2, `r̄₁/√(1 - r̄₁²)` on branch 1.
    pub fn boundary_curvature_bound(&self) -> T {
        -self.model_curvature(self.r_bar_i())
    }

    /// Bound on the curvature of a maximum curve: `R̄/√(1 - R̄²)` on branch 2,
    /// `-R̄/√(1 - R̄²)` on branch 1.
    pub fn max_curve_curvature_bound(&self) -> T {
        self.model_curvature(self.r_bar())
    }

    /// `√((1 - R̄²)/(1 - r̄ᵢ²))`, the factor in `|γ| ≤ factor·|Γ|`.
    pub fn length_factor(&self) -> T {
        let rb = self.r_bar();
        let rho = self.profile.zero_rho(self.branch);
        // 1/(1 - r̄ᵢ²) = cosh²ρᵢ
        ((T::one() - rb * rb)).sqrt() * rho.cosh()
    }

    /// `2π√(1 - r̄ᵢ²)`, the length of the model boundary parallel.
    pub fn model_boundary_length(&self) -> T {
        T::lit(2.0) * T::PI() / self.profile.zero_rho(self.branch).cosh()
    }
}

/// `χ(u)` for a triple.
pub fn pseudo_radial<T: Real>(triple: &ComparisonTriple<T>, u: T) -> Result<T> {
    triple.pseudo_radial(u)
}

/// `W̄` (with `Ψ` and `φ`) at each value of `u`.
pub fn wbar_field<T: Real>(triple: &ComparisonTriple<T>, us: &[T]) -> Result<Vec<WbarSample<T>>> {
    triple.wbar_field(us, None)
}
