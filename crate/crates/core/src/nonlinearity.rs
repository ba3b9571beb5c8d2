//! Source terms `f` of the equation `Δu + f(u) = 0` and the structural
//! conditions the comparison theory places on them.
//!
//! Two kinds are supported: affine `f(x) = a·x + b`, which is the main test
//! family and gets exact symbolic condition checks, and arbitrary callables
//! supplied together with their derivative.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

type Callable<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
enum Kind<T> {
    Affine { a: T, b: T },
    Callable { f: Callable<T>, df: Callable<T>, label: String },
}

/// An admissible source term together with its derivative.
#[derive(Clone)]
pub struct Nonlinearity<T> {
    kind: Kind<T>,
    domain_cap: T,
}

impl<T: Real> fmt::Debug for Nonlinearity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.label())
    }
}

impl<T: Real> Nonlinearity<T> {
    /// `f(x) = a·x + b`, trusted on all of `[0, ∞)`.
    pub fn affine(a: T, b: T) -> Self {
        Self { kind: Kind::Affine { a, b }, domain_cap: T::infinity() }
    }

    /// `f(x) = a·x`.
    pub fn linear(a: T) -> Self {
        Self::affine(a, T::zero())
    }

    /// A user-supplied source term. `df` must be the derivative of `f`;
    /// [`Nonlinearity::derivative_consistency`] checks this numerically.
    pub fn callable<F, D>(label: impl Into<String>, f: F, df: D, domain_cap: T) -> Self
    where
        F: Fn(T) -> T + Send + Sync + 'static,
        D: Fn(T) -> T + Send + Sync + 'static,
    {
        Self {
            kind: Kind::Callable { f: Arc::new(f), df: Arc::new(df), label: label.into() },
            domain_cap,
        }
    }

    /// Restricts the trusted evaluation range to `[0, cap]`.
    pub fn with_domain_cap(mut self, cap: T) -> Self {
        self.domain_cap = cap;
        self
    }

    pub fn domain_cap(&self) -> T {
        self.domain_cap
    }

    /// Affine coefficients `(a, b)` when the kind is affine.
    pub fn affine_coefficients(&self) -> Option<(T, T)> {
        match self.kind {
            Kind::Affine { a, b } => Some((a, b)),
            Kind::Callable { .. } => None,
        }
    }

    /// True for `f(x) = a·x` with `a > 0`; for these the Dirichlet problem is
    /// an eigenvalue problem and solutions are only determined up to scale.
    pub fn is_homogeneous_linear(&self) -> bool {
        matches!(self.kind, Kind::Affine { a, b } if b == T::zero() && a > T::zero())
    }

    /// Same kind with the whole source term multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let kind = match &self.kind {
            Kind::Affine { a, b } => Kind::Affine { a: *a * factor, b: *b * factor },
            Kind::Callable { f, df, label } => {
                let (f, df) = (f.clone(), df.clone());
                Kind::Callable {
                    f: Arc::new(move |x| factor * f(x)),
                    df: Arc::new(move |x| factor * df(x)),
                    label: format!("{}*({label})", factor),
                }
            }
        };
        Self { kind, domain_cap: self.domain_cap }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Affine { a, b } => format!("affine:{a},{b}"),
            Kind::Callable { label, .. } => label.clone(),
        }
    }

    /// `f(x)` for `0 ≤ x ≤ X_max`.
    pub fn evaluate(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        Ok(self.value(x))
    }

    /// `f'(x)` for `0 ≤ x ≤ X_max`.
    pub fn derivative(&self, x: T) -> Result<T> {
        self.check_domain(x)?;
        Ok(self.slope(x))
    }

    fn check_domain(&self, x: T) -> Result<()> {
        if x < T::zero() || x > self.domain_cap || x.is_nan() {
            return Err(Error::Domain { x: x.as_f64(), max: self.domain_cap.as_f64() });
        }
        Ok(())
    }

    /// Unchecked evaluation used inside the integrators, which may probe
    /// slightly negative arguments while stepping across a zero of `u`.
    #[inline]
    pub(crate) fn value(&self, x: T) -> T {
        match &self.kind {
            Kind::Affine { a, b } => *a * x + *b,
            Kind::Callable { f, .. } => f(x),
        }
    }

    #[inline]
    pub(crate) fn slope(&self, x: T) -> T {
        match &self.kind {
            Kind::Affine { a, .. } => *a,
            Kind::Callable { df, .. } => df(x),
        }
    }

    /// Checks conditions (i) `f(x) ≥ f'(x)·x` for `x > 0`, (ii) `f'(x) ≥ 2`,
    /// and non-negativity of `f`, on the uniform grid `k·x_max/n` (the open
    /// interval `(0, x_max]` for (i), the closed one for the others).
    pub fn validate_conditions(&self, x_max: T, n_samples: usize) -> Result<ConditionReport> {
        if !(x_max > T::zero()) || n_samples < 2 {
            return Err(Error::InvalidInput(format!(
                "validate_conditions needs x_max > 0 and n_samples >= 2 (got {x_max}, {n_samples})"
            )));
        }
        let f0 = self.evaluate(T::zero())?;
        let mut report = ConditionReport {
            x_max: x_max.as_f64(),
            n_samples,
            cond_i: true,
            cond_ii: true,
            cond_nonneg: true,
            f_zero_nonneg: f0 >= T::zero(),
            f_zero_vanishes: f0 == T::zero(),
            first_violation: None,
        };
        let n = T::from_usize(n_samples).unwrap();
        let record = |report: &mut ConditionReport, v: Violation| {
            if report.first_violation.is_none() {
                report.first_violation = Some(v);
            }
        };

        if let Kind::Affine { a, b } = self.kind {
            // Exact: (i) reduces to b ≥ 0, (ii) to a ≥ 2, and an affine f is
            // non-negative on [0, x_max] iff it is at both endpoints.
            let first = x_max / n;
            if b < T::zero() {
                report.cond_i = false;
                record(&mut report, Violation::new(Condition::I, first, a * first + b, a * first));
            }
            if a < T::lit(2.0) {
                report.cond_ii = false;
                record(&mut report, Violation::new(Condition::II, T::zero(), a, T::lit(2.0)));
            }
            let end = a * x_max + b;
            if b < T::zero() || end < T::zero() {
                report.cond_nonneg = false;
                let x = if b < T::zero() { T::zero() } else { x_max };
                record(&mut report, Violation::new(Condition::NonNeg, x, a * x + b, T::zero()));
            }
            return Ok(report);
        }

        for k in 0..=n_samples {
            let x = x_max * T::from_usize(k).unwrap() / n;
            let fx = self.evaluate(x)?;
            let dfx = self.derivative(x)?;
            if k > 0 && fx < dfx * x && report.cond_i {
                report.cond_i = false;
                record(&mut report, Violation::new(Condition::I, x, fx, dfx * x));
            }
            if dfx < T::lit(2.0) && report.cond_ii {
                report.cond_ii = false;
                record(&mut report, Violation::new(Condition::II, x, dfx, T::lit(2.0)));
            }
            if fx < T::zero() && report.cond_nonneg {
                report.cond_nonneg = false;
                record(&mut report, Violation::new(Condition::NonNeg, x, fx, T::zero()));
            }
        }
        Ok(report)
    }

    /// Largest deviation between the supplied derivative and a central
    /// difference of `f` with step `h` over `n` samples of `[h, x_max - h]`.
    pub fn derivative_consistency(&self, x_max: T, n: usize, h: T) -> Result<T> {
        let mut worst = T::zero();
        let span = x_max - h - h;
        for k in 0..=n {
            let x = h + span * T::from_usize(k).unwrap() / T::from_usize(n.max(1)).unwrap();
            let fd = (self.evaluate(x + h)? - self.evaluate(x - h)?) / (h + h);
            worst = worst.max((fd - self.derivative(x)?).abs());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// `f(x) ≥ f'(x)·x`
    I,
    /// `f'(x) ≥ 2`
    II,
    /// `f(x) ≥ 0`
    NonNeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub condition: Condition,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Violation {
    fn new<T: Real>(condition: Condition, x: T, lhs: T, rhs: T) -> Self {
        Self { condition, x: x.as_f64(), lhs: lhs.as_f64(), rhs: rhs.as_f64() }
    }
}

/// Outcome of [`Nonlinearity::validate_conditions`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub x_max: f64,
    pub n_samples: usize,
    pub cond_i: bool,
    pub cond_ii: bool,
    pub cond_nonneg: bool,
    /// `f(0) ≥ 0`, the form used alongside `f' ≥ 2`.
    pub f_zero_nonneg: bool,
    /// `f(0) = 0`, needed for the boundary length bound.
    pub f_zero_vanishes: bool,
    pub first_violation: Option<Violation>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.cond_i && self.cond_ii && self.cond_nonneg
    }
}

/// Serializable description of a nonlinearity, as used in config files
/// (`{"kind":"affine","a":2.0,"b":0.0}`) and on the command line
/// (`affine:2,0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NonlinearityDesc {
    Affine { a: f64, b: f64 },
}

impl NonlinearityDesc {
    pub fn build<T: Real>(&self) -> Nonlinearity<T> {
        match *self {
            NonlinearityDesc::Affine { a, b } => Nonlinearity::affine(T::lit(a), T::lit(b)),
        }
    }

    pub fn of<T: Real>(f: &Nonlinearity<T>) -> Option<Self> {
        f.affine_coefficients().map(|(a, b)| NonlinearityDesc::Affine { a: a.as_f64(), b: b.as_f64() })
    }
}

impl fmt::Display for NonlinearityDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonlinearityDesc::Affine { a, b } => write!(f, "affine:{a},{b}"),
        }
    }
}

impl std::str::FromStr for NonlinearityDesc {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("cannot parse nonlinearity `{s}` (expected affine:a,b)"));
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "affine" => {
                let mut it = args.split(',').map(|t| t.trim().parse::<f64>());
                let a = it.next().ok_or_else(bad)?.map_err(|_| bad())?;
                let b = match it.next() {
                    Some(v) => v.map_err(|_| bad())?,
                    None => 0.0,
                };
                if it.next().is_some() {
                    return Err(bad());
                }
                Ok(NonlinearityDesc::Affine { a, b })
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sinh2() -> Nonlinearity<f64> {
        Nonlinearity::callable("2sinh", |x: f64| 2.0 * x.sinh(), |x: f64| 2.0 * x.cosh(), 10.0)
    }

    #[test]
    fn affine_evaluation() {
        let f = Nonlinearity::linear(2.0);
        assert_eq!(f.evaluate(1.0).unwrap(), 2.0);
        assert_eq!(f.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(Nonlinearity::affine(2.0, 1.0).evaluate(0.0).unwrap(), 1.0);
        assert_eq!(f.derivative(3.0).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors() {
        let f = Nonlinearity::linear(2.0).with_domain_cap(1.0);
        assert!(matches!(f.evaluate(-1e-3), Err(Error::Domain { .. })));
        assert!(matches!(f.evaluate(1.5), Err(Error::Domain { .. })));
        assert!(f.evaluate(1.0).is_ok());
    }

    #[test]
    fn conditions_for_linear_two() {
        let r = Nonlinearity::linear(2.0).validate_conditions(5.0, 10).unwrap();
        assert!(r.cond_i && r.cond_ii && r.cond_nonneg);
        assert!(r.f_zero_vanishes);
        assert!(r.first_violation.is_none());
    }

    #[test]
    fn identity_fails_condition_ii() {
        let r = Nonlinearity::linear(1.0).validate_conditions(1.0, 10).unwrap();
        assert!(r.cond_i);
        assert!(!r.cond_ii);
        assert_eq!(r.first_violation.unwrap().condition, Condition::II);
    }

    #[test]
    fn sinh_fails_condition_i_at_one() {
        let f = sinh2();
        let fx = f.evaluate(1.0).unwrap();
        let dfx = f.derivative(1.0).unwrap();
        assert!((fx - 2.3504).abs() < 1e-4);
        assert!((dfx * 1.0 - 3.0862).abs() < 1e-4);
        let r = f.validate_conditions(1.0, 4).unwrap();
        assert!(!r.cond_i);
        assert!(r.cond_ii && r.cond_nonneg);
        let v = r.first_violation.unwrap();
        assert_eq!(v.condition, Condition::I);
        assert!(v.lhs < v.rhs);
    }

    #[test]
    fn callable_derivative_is_consistent() {
        let f = sinh2();
        let h = 1e-4;
        let worst = f.derivative_consistency(3.0, 50, h).unwrap();
        // O(h²) with constant max|f'''|/6 = 2cosh(3)/6
        assert!(worst < 2.0 * 3f64.cosh() / 6.0 * h * h * 1.5, "worst {worst}");
    }

    #[test]
    fn callable_matches_affine_symbolic_checks() {
        let f = Nonlinearity::callable("2x+1", |x: f64| 2.0 * x + 1.0, |_| 2.0, f64::INFINITY);
        let g = Nonlinearity::affine(2.0, 1.0);
        let rf = f.validate_conditions(3.0, 30).unwrap();
        let rg = g.validate_conditions(3.0, 30).unwrap();
        assert_eq!(
            (rf.cond_i, rf.cond_ii, rf.cond_nonneg),
            (rg.cond_i, rg.cond_ii, rg.cond_nonneg)
        );
    }

    #[test]
    fn descriptor_parsing() {
        let d: NonlinearityDesc = "affine:2,1".parse().unwrap();
        assert_eq!(d, NonlinearityDesc::Affine { a: 2.0, b: 1.0 });
        let d: NonlinearityDesc = "affine:3".parse().unwrap();
        assert_eq!(d, NonlinearityDesc::Affine { a: 3.0, b: 0.0 });
        assert!("sinh:1".parse::<NonlinearityDesc>().is_err());
        let json = serde_json::to_string(&NonlinearityDesc::Affine { a: 2.0, b: 0.0 }).unwrap();
        assert_eq!(json, r#"{"kind":"affine","a":2.0,"b":0.0}"#);
    }

    #[test]
    fn scaling() {
        let f = Nonlinearity::affine(2.0, 1.0).scaled(1.5);
        assert_eq!(f.affine_coefficients(), Some((3.0, 1.5)));
        let g = sinh2().scaled(0.5);
        assert!((g.evaluate(1.0).unwrap() - 1f64.sinh()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn admissible_affine_passes_everywhere(a in 2.0f64..10.0, b in 0.0f64..5.0, x_max in 1e-3f64..100.0) {
            let r = Nonlinearity::affine(a, b).validate_conditions(x_max, 17).unwrap();
            prop_assert!(r.all_pass());
        }

        #[test]
        fn violations_persist_for_larger_ranges(scale in 0.5f64..3.0, n in 2usize..40, extra in 1usize..4) {
            // The grid for x_max·extra with n·extra samples contains every
            // sample of the smaller grid.
            let f = Nonlinearity::callable("s*sinh", move |x: f64| scale * x.sinh(), move |x: f64| scale * x.cosh(), 50.0);
            let x_max = 1.3;
            let small = f.validate_conditions(x_max, n).unwrap();
            let large = f.validate_conditions(x_max * extra as f64, n * extra).unwrap();
            if !small.cond_i { prop_assert!(!large.cond_i); }
            if !small.cond_ii { prop_assert!(!large.cond_ii); }
            if !small.cond_nonneg { prop_assert!(!large.cond_nonneg); }
        }
    }
}
