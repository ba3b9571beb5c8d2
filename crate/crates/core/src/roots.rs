//! Bracketing root finders used for zero refinement, pseudo-radial
//! inversion and τ̄ inversion.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct BrentOptions<T> {
    /// Absolute tolerance on the abscissa; `0` means machine precision.
    pub xtol: T,
    /// Stop as soon as `|f| ≤ ftol`.
    pub ftol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for BrentOptions<T> {
    fn default() -> Self {
        Self { xtol: T::zero(), ftol: T::zero(), max_iter: 200 }
    }
}

/// Brent's method (bisection safeguarding secant and inverse quadratic
/// steps). `f` may fail, e.g. when each evaluation is a fresh ODE solve.
pub fn brent<T, F>(mut f: F, a: T, b: T, opts: &BrentOptions<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if (fa > T::zero()) == (fb > T::zero()) {
        return Err(Error::NoBracket { a: a.as_f64(), b: b.as_f64(), fa: fa.as_f64(), fb: fb.as_f64() });
    }
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let three = T::lit(3.0);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + half * opts.xtol;
        let xm = half * (c - b);
        if xm.abs() <= tol1 || fb == T::zero() || fb.abs() <= opts.ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (three * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 { b + d } else if xm > T::zero() { b + tol1 } else { b - tol1 };
        fb = f(b)?;
    }
    Err(Error::RootMaxIter(opts.max_iter))
}

/// Index `k` with `table[k] ≤ target ≤ table[k+1]` for an increasing table,
/// or with reversed inequalities for a decreasing one.
pub fn bracket_monotone<T: Real>(table: &[T], target: T) -> Option<usize> {
    if table.len() < 2 {
        return None;
    }
    let increasing = table[table.len() - 1] >= table[0];
    let k = if increasing {
        table.partition_point(|&v| v < target)
    } else {
        table.partition_point(|&v| v > target)
    };
    if k == 0 {
        return (table[0] == target).then_some(0);
    }
    if k >= table.len() {
        return None;
    }
    Some(k - 1)
}
