//! Recovering the model parameters `(R, M)` whose zero set is a given
//! rotational annulus.

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::solve_annulus_profile;
use crate::scalar::Real;

fn residual<T: Real>(f: &Nonlinearity<T>, s1: T, s2: T, r: T, m: T, tol: T) -> Result<[T; 2]> {
    let p = solve_annulus_profile(f, r, m, tol)?;
    Ok([p.r2().acos() - s1, p.r1().acos() - s2])
}

fn norm<T: Real>(v: &[T; 2]) -> T {
    v[0].abs().max(v[1].abs())
}

/// Solves `arccos r₂(R, M) = s1`, `arccos r₁(R, M) = s2` by Newton with a
/// forward-difference Jacobian. For `f = a·x` the zeros do not depend on `M`;
/// `M` is pinned to 1 and `R` is fitted in the least-squares sense.
pub fn fit_model_to_annulus<T: Real>(s1: T, s2: T, f: &Nonlinearity<T>, tol: T) -> Result<(T, T)> {
    if !(T::zero() < s1 && s1 < s2 && s2 < T::PI()) {
        return Err(Error::InvalidInput(format!("need 0 < s1 < s2 < π, got {s1}, {s2}")));
    }
    let ode_tol = T::lit(T::DEFAULT_TOL).max(tol * T::lit(1e-3));
    let fd = T::lit(T::DEFAULT_TOL).sqrt() * T::lit(10.0);
    let limit = T::one() - T::lit(1e-6);
    let mut r = (s1.cos() + s2.cos()) * T::lit(0.5);
    let mut m = T::one();
    let pinned = f.is_homogeneous_linear();
    let mut res = residual(f, s1, s2, r, m, ode_tol)?;
    for _ in 0..60 {
        if norm(&res) <= tol {
            return Ok((r, m));
        }
        let fr = residual(f, s1, s2, r + fd, m, ode_tol)?;
        let jr = [(fr[0] - res[0]) / fd, (fr[1] - res[1]) / fd];
        let (dr, dm) = if pinned {
            let jj = jr[0] * jr[0] + jr[1] * jr[1];
            (-(jr[0] * res[0] + jr[1] * res[1]) / jj, T::zero())
        } else {
            let h = fd * m.max(T::one());
            let fm = residual(f, s1, s2, r, m + h, ode_tol)?;
            let jm = [(fm[0] - res[0]) / h, (fm[1] - res[1]) / h];
            let det = jr[0] * jm[1] - jm[0] * jr[1];
            if det == T::zero() {
                break;
            }
            ((-res[0] * jm[1] + jm[0] * res[1]) / det, (-jr[0] * res[1] + jr[1] * res[0]) / det)
        };
        let mut lambda = T::one();
        let mut moved = false;
        for _ in 0..30 {
            let (rn, mn) = (r + lambda * dr, m + lambda * dm);
            if rn.abs() < limit && mn > T::zero() {
                if let Ok(next) = residual(f, s1, s2, rn, mn, ode_tol) {
                    let better = if pinned {
                        next[0] * next[0] + next[1] * next[1] < res[0] * res[0] + res[1] * res[1]
                    } else {
                        norm(&next) < norm(&res)
                    };
                    if better {
                        r = rn;
                        m = mn;
                        res = next;
                        moved = true;
                        break;
                    }
                }
            }
            lambda = lambda * T::lit(0.5);
        }
        if !moved {
            break;
        }
    }
    if norm(&res) <= tol {
        Ok((r, m))
    } else {
        Err(Error::NoSolution { residual: norm(&res).as_f64(), tol: tol.as_f64() })
    }
}
