//! Rotationally symmetric model solutions.
//!
//! In cylindrical coordinates `(r, θ)` (height `r = cos s`) a rotational
//! solution `u = U(r)` satisfies
//!
//! ```text
//! (1 - r²) U'' - 2 r U' + f(U) = 0,    U(R) = M,  U'(R) = 0.
//! ```
//!
//! [`solve_annulus_profile`] integrates this from the maximum at `R` toward
//! both poles until `U` vanishes, together with the variation `Z = ∂U/∂R`,
//! which solves the linearized equation with `Z(R) = 0` and
//! `Z'(R) = f(M)/(1 - R²)` (differentiate `U(R) = M` and `U'(R) = 0` in `R`
//! and use the equation at `r = R`).
//!
//! [`solve_disk_profile`] handles the geodesic-disk member of the family,
//! written in colatitude `s`: `V'' + cot(s) V' + f(V) = 0` with `V(0) = M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::ode::{integrate_to_event, Tolerances, Trajectory};
use crate::scalar::Real;

/// Which boundary component (zero of the profile) a quantity refers to:
/// `Lower` is `r₁` (the component Γ¹), `Upper` is `r₂` (Γ²).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

impl Branch {
    /// 1 for Γ¹, 2 for Γ².
    pub fn index(self) -> u8 {
        match self {
            Branch::Lower => 1,
            Branch::Upper => 2,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Branch::Lower),
            2 => Some(Branch::Upper),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions<T> {
    /// Required `|U(rᵢ)|` at the refined zeros.
    pub zero_tol: T,
    pub integrator: Tolerances<T>,
}

impl<T: Real> ProfileOptions<T> {
    /// Zero tolerance `tol`; the integrator runs at `min(tol, DEFAULT_TOL)`.
    pub fn with_tol(tol: T) -> Self {
        let itol = tol.min(T::lit(T::DEFAULT_TOL));
        Self { zero_tol: tol, integrator: Tolerances::uniform(itol) }
    }
}

impl<T: Real> Default for ProfileOptions<T> {
    fn default() -> Self {
        Self::with_tol(T::lit(T::DEFAULT_TOL * 100.0))
    }
}

/// State of the profile and its variation at one height.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState<T> {
    pub u: T,
    pub du: T,
    pub z: T,
    pub dz: T,
}

/// One row of the profile table `r, U, U', Z, Z', G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample<T> {
    pub r: T,
    pub u: T,
    pub du: T,
    pub z: T,
    pub dz: T,
    pub g: T,
}

/// Annular model solution `U_{R,M}` on `[r₁, r₂]`.
#[derive(Debug, Clone)]
pub struct ModelProfile<T: Real> {
    f: Nonlinearity<T>,
    height: T,
    max_value: T,
    rho_height: T,
    rho: [T; 2],
    r1: T,
    r2: T,
    options: ProfileOptions<T>,
    zero_error: [T; 2],
    lower: Trajectory<T, 4>,
    upper: Trajectory<T, 4>,
    samples: Vec<ProfileSample<T>>,
}

/// Geodesic-disk solution `V_{0,M}` on `[0, s_M]`.
#[derive(Debug, Clone)]
pub struct DiskProfile<T: Real> {
    f: Nonlinearity<T>,
    max_value: T,
    s_m: T,
    h: T,
    s0: T,
    series: [T; 2],
    traj: Trajectory<T, 2>,
    samples: Vec<DiskSample<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSample<T> {
    pub s: T,
    pub v: T,
    pub dv: T,
}

fn check_inputs<T: Real>(f: &Nonlinearity<T>, max_value: T) -> Result<()> {
    if !(max_value > T::zero()) || !max_value.is_finite() {
        return Err(Error::InvalidInput(format!("maximum must be positive (got {max_value})")));
    }
    let fm = f.evaluate(max_value)?;
    let f0 = f.evaluate(T::zero())?;
    if !fm.is_finite() || !f0.is_finite() {
        return Err(Error::InvalidInput(format!("f is not finite on [0, {max_value}]")));
    }
    Ok(())
}

/// Solves the annular model profile with Cauchy data `U(R) = M, U'(R) = 0`.
pub fn solve_annulus_profile<T: Real>(f: &Nonlinearity<T>, height: T, max_value: T, tol: T) -> Result<ModelProfile<T>> {
    ModelProfile::solve(f, height, max_value, &ProfileOptions::with_tol(tol))
}

/// Solves the disk profile `V_{0,M}` and its first zero `s_M`.
pub fn solve_disk_profile<T: Real>(f: &Nonlinearity<T>, max_value: T, tol: T) -> Result<DiskProfile<T>> {
    DiskProfile::solve(f, max_value, &ProfileOptions::with_tol(tol))
}

/// Boundary slope `h(M) = -V'_{0,M}(s_M)` of the disk solution.
pub fn compute_h<T: Real>(f: &Nonlinearity<T>, max_value: T) -> Result<T> {
    Ok(DiskProfile::solve(f, max_value, &ProfileOptions::default())?.h)
}

impl<T: Real> ModelProfile<T> {
    /// Largest `ρ = artanh r` the integration may reach before a missing
    /// zero is reported; `cosh ρ` stays finite below it.
    pub fn rho_limit() -> T {
        T::max_value().ln() - T::lit(2.0)
    }

    pub fn solve(f: &Nonlinearity<T>, height: T, max_value: T, options: &ProfileOptions<T>) -> Result<Self> {
        if !(height.abs() < T::one()) {
            return Err(Error::InvalidInput(format!("height R must lie in (-1, 1) (got {height})")));
        }
        check_inputs(f, max_value)?;
        if !(options.zero_tol > T::zero()) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }

        // With r = tanh ρ the equation becomes U_ρρ = -sech²ρ f(U), regular
        // up to the poles; zeros for R near 1 sit far closer to r = 1 than
        // the floating point grid in r resolves.
        let rhs = |rho: T, y: &[T; 4]| {
            let w = sech_sq(rho);
            [y[1], -w * f.value(y[0]), y[3], -w * f.slope(y[0]) * y[2]]
        };
        let rho_r = height.atanh();
        let y0 = [max_value, T::zero(), T::zero(), f.value(max_value)];
        let limit = Self::rho_limit();

        let run = |end: T| -> Result<(Trajectory<T, 4>, T)> {
            let out = integrate_to_event(rhs, rho_r, y0, end, &options.integrator, |_, y| y[0])?;
            match out.event {
                Some(rho) => Ok((out.trajectory, rho)),
                None => Err(Error::NoZeroFound {
                    reached: out.trajectory.span().map(|s| s.1.tanh()).unwrap_or(height).as_f64(),
                    limit: end.tanh().as_f64(),
                }),
            }
        };
        let (upper, rho2) = run(limit)?;
        let (lower, rho1) = run(-limit)?;

        let mut profile = Self {
            f: f.clone(),
            height,
            max_value,
            rho_height: rho_r,
            rho: [rho1, rho2],
            r1: rho1.tanh(),
            r2: rho2.tanh(),
            options: *options,
            zero_error: [T::zero(); 2],
            lower,
            upper,
            samples: Vec::new(),
        };
        let scale = options.integrator.atol + options.integrator.rtol * max_value;
        for (k, rho) in [rho1, rho2].into_iter().enumerate() {
            let y = profile.eval_rho(rho);
            if y[0].abs() > options.zero_tol {
                return Err(Error::NoSolution { residual: y[0].abs().as_f64(), tol: options.zero_tol.as_f64() });
            }
            // |δρ| ≈ |U|/|U_ρ| and dr = sech²ρ dρ
            profile.zero_error[k] = (y[0].abs() + scale) / y[1].abs() * sech_sq(rho);
        }
        profile.samples = profile.build_table();
        Ok(profile)
    }

    fn build_table(&self) -> Vec<ProfileSample<T>> {
        let [rho1, rho2] = self.rho;
        let mut nodes = vec![rho1];
        let lower: Vec<T> = self.lower.steps().iter().map(|s| s.t0).filter(|&x| x > rho1).collect();
        nodes.extend(lower.into_iter().rev());
        nodes.extend(self.upper.steps().iter().skip(1).map(|s| s.t0).filter(|&x| x < rho2));
        nodes.push(rho2);
        nodes.into_iter().map(|x| self.sample_rho(x)).collect()
    }

    fn eval_rho(&self, rho: T) -> [T; 4] {
        if rho >= self.rho_height {
            self.upper.eval(rho)
        } else {
            self.lower.eval(rho)
        }
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.f
    }

    /// Height `R` of the maximum.
    pub fn height(&self) -> T {
        self.height
    }

    /// Maximum value `M`.
    pub fn max_value(&self) -> T {
        self.max_value
    }

    pub fn r1(&self) -> T {
        self.r1
    }

    pub fn r2(&self) -> T {
        self.r2
    }

    pub fn zero(&self, branch: Branch) -> T {
        match branch {
            Branch::Lower => self.r1,
            Branch::Upper => self.r2,
        }
    }

    /// The zero in the variable `ρ = artanh r`, which stays resolvable when
    /// `rᵢ` rounds to `±1`.
    pub fn zero_rho(&self, branch: Branch) -> T {
        match branch {
            Branch::Lower => self.rho[0],
            Branch::Upper => self.rho[1],
        }
    }

    /// Error estimate for the located zero (from `|U(rᵢ)|`, the integrator
    /// tolerance and `|U'(rᵢ)|`).
    pub fn zero_error_bound(&self, branch: Branch) -> T {
        match branch {
            Branch::Lower => self.zero_error[0],
            Branch::Upper => self.zero_error[1],
        }
    }

    pub fn options(&self) -> &ProfileOptions<T> {
        &self.options
    }

    /// Degree of the piecewise polynomial used between table rows.
    pub fn interpolation_order(&self) -> usize {
        4
    }

    /// Rows at the integrator mesh, ascending in `r`, first and last rows at
    /// the zeros.
    pub fn samples(&self) -> &[ProfileSample<T>] {
        &self.samples
    }

    pub fn state(&self, r: T) -> ProfileState<T> {
        self.state_rho(r.atanh())
    }

    /// State at `r = tanh ρ` with derivatives still taken in `r`.
    pub fn state_rho(&self, rho: T) -> ProfileState<T> {
        let y = self.eval_rho(rho);
        let c2 = rho.cosh().powi(2);
        ProfileState { u: y[0], du: y[1] * c2, z: y[2], dz: y[3] * c2 }
    }

    pub fn u(&self, r: T) -> T {
        self.state(r).u
    }

    pub fn du(&self, r: T) -> T {
        self.state(r).du
    }

    /// `U''` read off the equation rather than differenced.
    pub fn d2u(&self, r: T) -> T {
        let st = self.state(r);
        self.d2u_from(r, &st)
    }

    fn d2u_from(&self, r: T, st: &ProfileState<T>) -> T {
        (T::lit(2.0) * r * st.du - self.f.value(st.u)) / ((T::one() - r) * (T::one() + r))
    }

    /// `G = U''Z - U'Z'`.
    pub fn g(&self, r: T) -> T {
        self.sample_at(r).g
    }

    pub fn sample_at(&self, r: T) -> ProfileSample<T> {
        self.sample_rho(r.atanh())
    }

    fn sample_rho(&self, rho: T) -> ProfileSample<T> {
        let st = self.state_rho(rho);
        let r = rho.tanh();
        let d2u = (T::lit(2.0) * r * st.du - self.f.value(st.u)) * rho.cosh().powi(2);
        ProfileSample { r, u: st.u, du: st.du, z: st.z, dz: st.dz, g: d2u * st.z - st.du * st.dz }
    }

    /// `n + 1` equally spaced rows over `[r₁, r₂]`.
    pub fn sample_uniform(&self, n: usize) -> Vec<ProfileSample<T>> {
        let n = n.max(1);
        let len = self.r2 - self.r1;
        (0..=n)
            .map(|k| match k {
                0 => self.sample_rho(self.rho[0]),
                k if k == n => self.sample_rho(self.rho[1]),
                _ => self.sample_at(self.r1 + len * T::from_usize(k).unwrap() / T::from_usize(n).unwrap()),
            })
            .collect()
    }

    /// `|∇u| = √(1 - rᵢ²)·|U'(rᵢ)|` on the boundary component.
    pub fn boundary_gradient(&self, branch: Branch) -> T {
        let rho = self.zero_rho(branch);
        self.eval_rho(rho)[1].abs() * rho.cosh()
    }

    /// Squared gradient `(1 - r²)U'(r)²` of the rotational solution.
    pub fn grad_sq(&self, r: T) -> T {
        let rho = r.atanh();
        (self.eval_rho(rho)[1] * rho.cosh()).powi(2)
    }
}

fn sech_sq<T: Real>(rho: T) -> T {
    let c = rho.cosh();
    T::one() / (c * c)
}

/// `√(1 - rᵢ²)·|U'(rᵢ)|` at the requested zero.
pub fn boundary_gradient<T: Real>(profile: &ModelProfile<T>, branch: Branch) -> T {
    profile.boundary_gradient(branch)
}

/// Worst-margin summary for one sign pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignCheck {
    pub pass: bool,
    /// Smallest signed margin (positive means the expected sign holds).
    pub worst_margin: f64,
    pub worst_at: f64,
    pub samples: usize,
}

impl SignCheck {
    fn new() -> Self {
        Self { pass: true, worst_margin: f64::INFINITY, worst_at: f64::NAN, samples: 0 }
    }

    fn push(&mut self, r: f64, margin: f64) {
        self.samples += 1;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_at = r;
        }
        if !(margin > 0.0) {
            self.pass = false;
        }
    }
}

/// Sign patterns of `Z` (negative below `R`, positive above), `G` (expected
/// positive on `[r₁, R)` and negative on `(R, r₂]`, checked separately) and
/// concavity `U'' < 0`.
///
/// `G''(R) = -2R f(M)²/(1 - R²)³`, so for `R > 0` the lower-side pattern
/// fails next to the maximum and the report says so.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub z_pattern: SignCheck,
    pub g_lower: SignCheck,
    pub g_upper: SignCheck,
    pub concavity: SignCheck,
    pub collar: f64,
}

impl SignReport {
    pub fn all_pass(&self) -> bool {
        self.z_pattern.pass && self.g_lower.pass && self.g_upper.pass && self.concavity.pass
    }
}

/// Checks the sign lemmas on the integrator mesh plus `n_uniform` equally
/// spaced samples, skipping `|r - R| < collar` where all three quantities
/// vanish. `collar = None` uses `10⁻³·(r₂ - r₁)`.
pub fn check_sign_lemmas<T: Real>(profile: &ModelProfile<T>, collar: Option<T>, n_uniform: usize) -> SignReport {
    let collar = collar.unwrap_or_else(|| T::lit(1e-3) * (profile.r2 - profile.r1));
    let mut z = SignCheck::new();
    let mut gl = SignCheck::new();
    let mut gu = SignCheck::new();
    let mut c = SignCheck::new();
    let mut rows: Vec<ProfileSample<T>> = profile.samples().to_vec();
    rows.extend(profile.sample_uniform(n_uniform));
    for row in rows {
        let r = row.r;
        if (r - profile.height).abs() < collar {
            continue;
        }
        let below = r < profile.height;
        let interior = r > profile.r1 && r < profile.r2;
        if interior {
            z.push(r.as_f64(), if below { -row.z } else { row.z }.as_f64());
            c.push(r.as_f64(), (-profile.d2u(r)).as_f64());
        }
        if below {
            gl.push(r.as_f64(), row.g.as_f64());
        } else {
            gu.push(r.as_f64(), (-row.g).as_f64());
        }
    }
    SignReport { z_pattern: z, g_lower: gl, g_upper: gu, concavity: c, collar: collar.as_f64() }
}

impl<T: Real> DiskProfile<T> {
    /// Series start at `s₀ = 10⁻⁴`.
    pub const SERIES_START: f64 = 1e-4;

    pub fn solve(f: &Nonlinearity<T>, max_value: T, options: &ProfileOptions<T>) -> Result<Self> {
        check_inputs(f, max_value)?;
        let s0 = T::lit(Self::SERIES_START);
        // V = M + a s² + b s⁴ + O(s⁶) with a = -f(M)/4 and
        // b = a (2/3 - f'(M)) / 16, from matching powers with cot s ≈ 1/s - s/3.
        let a = -f.value(max_value) / T::lit(4.0);
        let b = a * (T::lit(2.0 / 3.0) - f.slope(max_value)) / T::lit(16.0);
        let v0 = max_value + a * s0 * s0 + b * s0.powi(4);
        let dv0 = T::lit(2.0) * a * s0 + T::lit(4.0) * b * s0.powi(3);

        let rhs = |s: T, y: &[T; 2]| [y[1], -y[1] / s.tan() - f.value(y[0])];
        let limit = T::PI() - T::epsilon().sqrt();
        let out = integrate_to_event(rhs, s0, [v0, dv0], limit, &options.integrator, |_, y| y[0])?;
        let s_m = out.event.ok_or(Error::NoZeroFound {
            reached: out.trajectory.span().map(|s| s.1).unwrap_or(s0).as_f64(),
            limit: limit.as_f64(),
        })?;
        let end = out.trajectory.eval(s_m);
        if end[0].abs() > options.zero_tol {
            return Err(Error::NoSolution { residual: end[0].abs().as_f64(), tol: options.zero_tol.as_f64() });
        }
        let mut disk = Self {
            f: f.clone(),
            max_value,
            s_m,
            h: -end[1],
            s0,
            series: [a, b],
            traj: out.trajectory,
            samples: Vec::new(),
        };
        let mut rows = vec![DiskSample { s: T::zero(), v: max_value, dv: T::zero() }];
        rows.extend(
            disk.traj
                .steps()
                .iter()
                .map(|st| st.t0)
                .filter(|&s| s < s_m)
                .map(|s| {
                    let (v, dv) = disk.eval(s);
                    DiskSample { s, v, dv }
                }),
        );
        rows.push(DiskSample { s: s_m, v: end[0], dv: end[1] });
        disk.samples = rows;
        Ok(disk)
    }

    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.f
    }

    pub fn max_value(&self) -> T {
        self.max_value
    }

    /// Geodesic radius of the zero.
    pub fn s_m(&self) -> T {
        self.s_m
    }

    /// Boundary slope `h(M) = -V'(s_M)`.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn samples(&self) -> &[DiskSample<T>] {
        &self.samples
    }

    /// `(V(s), V'(s))`; the series is used below the start point.
    pub fn eval(&self, s: T) -> (T, T) {
        if s < self.s0 {
            let [a, b] = self.series;
            return (
                self.max_value + a * s * s + b * s.powi(4),
                T::lit(2.0) * a * s + T::lit(4.0) * b * s.powi(3),
            );
        }
        let y = self.traj.eval(s);
        (y[0], y[1])
    }

    /// `V''(s)`, from the equation (and `-f(M)/2` at the pole).
    pub fn d2v(&self, s: T) -> T {
        if s < self.s0 {
            let [a, b] = self.series;
            return T::lit(2.0) * a + T::lit(12.0) * b * s * s;
        }
        let (v, dv) = self.eval(s);
        -dv / s.tan() - self.f.value(v)
    }
}
