//! Spherical annuli `{sᵢₙ(θ) < s < sₒᵤₜ(θ)}` in colatitude/longitude and the
//! boundary-fitted `(σ, θ)` grid laid over them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Boundary displacement `δ(θ) = amplitude·cos(mode·θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation<T> {
    pub amplitude: T,
    pub mode: u32,
}

impl<T: Real> Perturbation<T> {
    pub fn none() -> Self {
        Self { amplitude: T::zero(), mode: 0 }
    }

    pub fn new(amplitude: T, mode: u32) -> Self {
        Self { amplitude, mode }
    }

    pub fn is_none(&self) -> bool {
        self.amplitude == T::zero() || self.mode == 0
    }

    /// `(δ, δ', δ'')` at `θ`.
    pub fn eval(&self, theta: T) -> (T, T, T) {
        if self.is_none() {
            return (T::zero(), T::zero(), T::zero());
        }
        let k = T::from_u32(self.mode).unwrap();
        let (sn, cs) = (k * theta).sin_cos();
        (self.amplitude * cs, -self.amplitude * k * sn, -self.amplitude * k * k * cs)
    }
}

impl<T: Real> Default for Perturbation<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// Upper bound on the stretching parameter that keeps the ratio of the
/// largest to the smallest radial cell at or below 1.2.
pub const MAX_STRETCH: f64 = 1.0 / 11.0;
pub const DEFAULT_STRETCH: f64 = 0.09;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec<T> {
    /// Colatitude of the northern (inner) boundary, `Γ₂` for the model.
    pub s1: T,
    /// Colatitude of the southern boundary, `Γ₁` for the model.
    pub s2: T,
    pub inner: Perturbation<T>,
    pub outer: Perturbation<T>,
    /// Radial intervals; the grid has `n_s + 1` node rows.
    pub n_s: usize,
    /// Nodes per ring, periodic.
    pub n_theta: usize,
    /// `α` in `ξ(σ) = σ - α/(2π)·sin 2πσ`, clustering nodes at both walls.
    pub stretch: T,
}

impl<T: Real> DomainSpec<T> {
    pub fn rotational(s1: T, s2: T, n_s: usize, n_theta: usize) -> Result<Self> {
        Self::perturbed(s1, s2, Perturbation::none(), Perturbation::none(), n_s, n_theta)
    }

    pub fn perturbed(
        s1: T,
        s2: T,
        inner: Perturbation<T>,
        outer: Perturbation<T>,
        n_s: usize,
        n_theta: usize,
    ) -> Result<Self> {
        let d = Self { s1, s2, inner, outer, n_s, n_theta, stretch: T::lit(DEFAULT_STRETCH) };
        d.validate()?;
        Ok(d)
    }

    pub fn with_stretch(mut self, stretch: T) -> Result<Self> {
        self.stretch = stretch;
        self.validate()?;
        Ok(self)
    }

    pub fn with_resolution(&self, n_s: usize, n_theta: usize) -> Result<Self> {
        let d = Self { n_s, n_theta, ..self.clone() };
        d.validate()?;
        Ok(d)
    }

    pub fn is_rotational(&self) -> bool {
        self.inner.is_none() && self.outer.is_none()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        let (a1, a2) = (self.inner.amplitude.abs(), self.outer.amplitude.abs());
        if !(self.s1 > T::zero() && self.s1 < self.s2 && self.s2 < T::PI()) {
            return bad(format!("need 0 < s1 < s2 < π, got s1 = {}, s2 = {}", self.s1, self.s2));
        }
        if !(self.s1 - a1 > T::zero() && self.s2 + a2 < T::PI() && self.s1 + a1 < self.s2 - a2) {
            return bad("perturbed boundaries leave (0, π) or touch each other".into());
        }
        if self.n_s < 4 {
            return bad(format!("n_s = {} is too small for the fourth-order closures", self.n_s));
        }
        if self.n_theta < 8 || self.n_theta % 2 != 0 {
            return bad(format!("n_theta must be even and at least 8, got {}", self.n_theta));
        }
        if !(self.stretch >= T::zero() && self.stretch <= T::lit(MAX_STRETCH)) {
            return bad(format!("stretch {} outside [0, 1/11]", self.stretch));
        }
        Ok(())
    }

    pub fn h_sigma(&self) -> T {
        T::one() / T::from_usize(self.n_s).unwrap()
    }

    pub fn h_theta(&self) -> T {
        T::TAU() / T::from_usize(self.n_theta).unwrap()
    }

    pub fn sigma(&self, i: usize) -> T {
        T::from_usize(i).unwrap() * self.h_sigma()
    }

    pub fn theta(&self, j: usize) -> T {
        T::from_usize(j).unwrap() * self.h_theta()
    }

    /// `(ξ, ξ', ξ'')` at `σ`.
    pub fn xi(&self, sigma: T) -> (T, T, T) {
        let w = T::TAU() * sigma;
        let (sn, cs) = w.sin_cos();
        (sigma - self.stretch / T::TAU() * sn, T::one() - self.stretch * cs, T::TAU() * self.stretch * sn)
    }

    /// Inner and outer boundary colatitudes at `θ`.
    pub fn boundaries(&self, theta: T) -> (T, T) {
        (self.s1 + self.inner.eval(theta).0, self.s2 + self.outer.eval(theta).0)
    }

    /// Colatitude of the mapped point `(σ, θ)`.
    pub fn s_at(&self, sigma: T, theta: T) -> T {
        let (a, b) = self.boundaries(theta);
        a + self.xi(sigma).0 * (b - a)
    }

    /// Map derivatives at `(σ, θ)`: `(S, S_σ, S_σσ, S_θ, S_σθ, S_θθ)`.
    fn map_jet(&self, sigma: T, theta: T) -> [T; 6] {
        let (d1, d1p, d1pp) = self.inner.eval(theta);
        let (d2, d2p, d2pp) = self.outer.eval(theta);
        let s_in = self.s1 + d1;
        let len = self.s2 + d2 - s_in;
        let (lp, lpp) = (d2p - d1p, d2pp - d1pp);
        let (x, xp, xpp) = self.xi(sigma);
        [s_in + x * len, xp * len, xpp * len, d1p + x * lp, xp * lp, d1pp + x * lpp]
    }

    /// Chain-rule coefficients of the Laplacian at a node.
    pub fn metric(&self, sigma: T, theta: T) -> NodeMetric<T> {
        let [s, ss, sss, st, sst, stt] = self.map_jet(sigma, theta);
        let sin = s.sin();
        let m = T::one() / (sin * sin);
        let sig_s = T::one() / ss;
        let sig_t = -st / ss;
        let sig_ss = -sss * sig_s * sig_s * sig_s;
        let ss2 = ss * ss;
        let q_t = -(stt * ss - st * sst) / ss2;
        let q_s = -(sst * ss - st * sss) / ss2;
        let sig_tt = q_t + q_s * sig_t;
        NodeMetric {
            s,
            sig_s,
            sig_t,
            inv_sin2: m,
            a: sig_s * sig_s + m * sig_t * sig_t,
            b: T::lit(2.0) * m * sig_t,
            c: m,
            d: sig_ss + s.cos() / sin * sig_s + m * sig_tt,
        }
    }
}

/// `Δu = a·u_σσ + b·u_σθ + c·u_θθ + d·u_σ` at a node, plus what the gradient
/// needs: `u_s = σ_s·u_σ` and `u_θ|_s = σ_θ·u_σ + u_θ|_σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMetric<T> {
    pub s: T,
    pub sig_s: T,
    pub sig_t: T,
    pub inv_sin2: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}
