//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output
//! and sign-change event location.

use crate::error::{Error, Result};
use crate::roots::{brent, BrentOptions};
use crate::scalar::Real;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Tolerances<T> {
    pub fn uniform(tol: T) -> Self {
        Self { rtol: tol, atol: tol, h_init: None, max_steps: 200_000 }
    }
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self::uniform(T::lit(T::DEFAULT_TOL))
    }
}

/// One accepted step with its quartic continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<T, const N: usize> {
    pub t0: T,
    pub h: T,
    coeffs: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    pub fn contains(&self, t: T) -> bool {
        let (lo, hi) = if self.h > T::zero() { (self.t0, self.t1()) } else { (self.t1(), self.t0) };
        t >= lo && t <= hi
    }

    /// Interpolated state at `t` (any `t` in the step, or slightly outside).
    pub fn eval(&self, t: T) -> [T; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = T::one() - theta;
        let c = &self.coeffs;
        let mut y = [T::zero(); N];
        for i in 0..N {
            y[i] = c[0][i] + theta * (c[1][i] + theta1 * (c[2][i] + theta * (c[3][i] + theta1 * c[4][i])));
        }
        y
    }

    pub fn start(&self) -> [T; N] {
        self.coeffs[0]
    }

    pub fn end(&self) -> [T; N] {
        let mut y = self.coeffs[0];
        for (yi, d) in y.iter_mut().zip(self.coeffs[1].iter()) {
            *yi = *yi + *d;
        }
        y
    }
}

/// Ordered sequence of accepted steps; supports evaluation anywhere in the
/// integrated span.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const N: usize> {
    steps: Vec<DenseStep<T, N>>,
}

impl<T: Real, const N: usize> Trajectory<T, N> {
    pub fn steps(&self) -> &[DenseStep<T, N>] {
        &self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn span(&self) -> Option<(T, T)> {
        Some((self.steps.first()?.t0, self.steps.last()?.t1()))
    }

    /// Evaluates at `t`, clamping to the nearest step when `t` lies just
    /// outside the span.
    pub fn eval(&self, t: T) -> [T; N] {
        let forward = self.steps[0].h > T::zero();
        // steps are monotone in t0 along the integration direction
        let idx = self.steps.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        let k = idx.min(self.steps.len() - 1);
        self.steps[k].eval(t)
    }
}

/// Result of [`integrate_to_event`].
#[derive(Debug, Clone)]
pub struct EventOutcome<T, const N: usize> {
    pub trajectory: Trajectory<T, N>,
    /// Location of the first sign change of the event function, if any
    /// occurred before the end of the span.
    pub event: Option<T>,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrates `y' = rhs(t, y)` from `t0` toward `t_end`, stopping at the first
/// step across which `event(t, y)` changes sign (or reaches zero). The event
/// location is refined on the dense output to near machine precision.
pub fn integrate_to_event<T, const N: usize, F, G>(
    rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    tol: &Tolerances<T>,
    event: G,
) -> Result<EventOutcome<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
    G: Fn(T, &[T; N]) -> T,
{
    let dir = if t_end >= t0 { T::one() } else { -T::one() };
    let span = (t_end - t0).abs();
    let a: [[T; 6]; 7] = A.map(|row| row.map(T::lit));
    let c: [T; 7] = C.map(T::lit);
    let e: [T; 7] = E.map(T::lit);
    let d: [T; 7] = D.map(T::lit);
    let eps = T::epsilon();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    let mut h = tol.h_init.unwrap_or_else(|| initial_step(&y, &k1, tol, span));
    h = h.min(span);
    let mut steps: Vec<DenseStep<T, N>> = Vec::new();
    let mut g_prev = event(t, &y);
    let mut n_steps = 0usize;
    let mut prev_rejected = false;

    while (t_end - t) * dir > T::zero() {
        n_steps += 1;
        if n_steps > tol.max_steps {
            return Err(Error::TooManySteps(tol.max_steps));
        }
        if h <= eps * T::lit(16.0) * t.abs().max(T::one()) {
            return Err(Error::StepFailure { t: t.as_f64(), h: h.as_f64() });
        }
        let last = h >= (t_end - t).abs();
        let hs = if last { t_end - t } else { h * dir };

        let mut k = [[T::zero(); N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = T::zero();
                for j in 0..s {
                    acc = acc + a[s][j] * k[j][i];
                }
                *yi = *yi + hs * acc;
            }
            k[s] = rhs(t + c[s] * hs, &ys);
        }
        // stage 7 is evaluated at the 5th-order solution (FSAL)
        let mut y_new = y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            let mut acc = T::zero();
            for j in 0..6 {
                acc = acc + a[6][j] * k[j][i];
            }
            *yi = *yi + hs * acc;
        }

        let mut err = T::zero();
        for i in 0..N {
            let mut ei = T::zero();
            for j in 0..7 {
                ei = ei + e[j] * k[j][i];
            }
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let r = hs * ei / sc;
            err = err + r * r;
        }
        err = (err / T::from_usize(N).unwrap()).sqrt();
        if !err.is_finite() {
            h = h * T::lit(0.25);
            prev_rejected = true;
            continue;
        }

        if err <= T::one() {
            let mut coeffs = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = hs * k[0][i] - ydiff;
                coeffs[0][i] = y[i];
                coeffs[1][i] = ydiff;
                coeffs[2][i] = bspl;
                coeffs[3][i] = ydiff - hs * k[6][i] - bspl;
                let mut acc = T::zero();
                for j in 0..7 {
                    acc = acc + d[j] * k[j][i];
                }
                coeffs[4][i] = hs * acc;
            }
            let step = DenseStep { t0: t, h: hs, coeffs };
            let t_new = if last { t_end } else { t + hs };
            let g_new = event(t_new, &y_new);
            steps.push(step);

            if g_new == T::zero() || (g_new > T::zero()) != (g_prev > T::zero()) {
                let st = steps.last().unwrap();
                let root = if g_new == T::zero() {
                    t_new
                } else {
                    let opts = BrentOptions { xtol: T::zero(), ftol: T::zero(), max_iter: 200 };
                    let (lo, hi) = if hs > T::zero() { (t, t_new) } else { (t_new, t) };
                    brent(|s| Ok(event(s, &st.eval(s))), lo, hi, &opts)?
                };
                return Ok(EventOutcome { trajectory: Trajectory { steps }, event: Some(root) });
            }

            g_prev = g_new;
            t = t_new;
            y = y_new;
            k1 = k[6];
            let fac = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            h = if prev_rejected { h * fac.min(T::one()) } else { h * fac };
            prev_rejected = false;
        } else {
            let fac = (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1));
            h = h * fac.min(T::one());
            prev_rejected = true;
        }
    }

    Ok(EventOutcome { trajectory: Trajectory { steps }, event: None })
}

/// Integrates over the whole span without events.
pub fn integrate<T, const N: usize, F>(
    rhs: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    tol: &Tolerances<T>,
) -> Result<Trajectory<T, N>>
where
    T: Real,
    F: Fn(T, &[T; N]) -> [T; N],
{
    integrate_to_event(rhs, t0, y0, t_end, tol, |_, _| T::one()).map(|o| o.trajectory)
}

fn initial_step<T: Real, const N: usize>(y: &[T; N], f: &[T; N], tol: &Tolerances<T>, span: T) -> T {
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..N {
        let sc = tol.atol + tol.rtol * y[i].abs();
        d0 = d0 + (y[i] / sc).powi(2);
        d1 = d1 + (f[i] / sc).powi(2);
    }
    let (d0, d1) = (d0.sqrt(), d1.sqrt());
    let h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
    h.min(span * T::lit(0.01)).max(T::epsilon() * T::lit(1e3))
}
