//! Damped Newton for the second-order discretization of `Δu + f(u) = 0`
//! with homogeneous Dirichlet data, and the nodal solution it produces.

use serde::{Deserialize, Serialize};

use super::banded::BandMatrix;
use super::domain::{DomainSpec, NodeMetric};
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::profiles::ModelProfile;
use crate::scalar::Real;

/// Starting field for Newton.
#[derive(Debug, Clone)]
pub enum Guess<'a, T: Real> {
    /// All zeros; replaced by the ramp `4σ(1 - σ)`.
    Zeros,
    /// Nodal values in row-major (`s` outer) order, boundary rows included.
    Field(Vec<T>),
    /// A rotational model sampled at the node colatitudes.
    Profile(&'a ModelProfile<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iters: usize,
    pub max_halvings: usize,
}

impl<T: Real> SolveOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, max_iters: 30, max_halvings: 8 }
    }
}

/// How the discrete problem was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveRoute {
    Newton,
    /// `f = a·x`: shifted inverse iteration for the principal eigenpair.
    Eigen,
    /// Sampled from a model profile, not solved.
    Sampled,
}

/// Nodal solution on the boundary-fitted grid. Values are stored row-major
/// with `s` outer: index `i·n_θ + j` for radial row `i ∈ [0, n_s]`.
#[derive(Debug, Clone)]
pub struct GridSolution<T: Real> {
    domain: DomainSpec<T>,
    f: Nonlinearity<T>,
    values: Vec<T>,
    metric: Vec<NodeMetric<T>>,
    residual: T,
    iterations: usize,
    route: SolveRoute,
    u_max: T,
    argmax: (usize, usize),
}

fn metric_table<T: Real>(d: &DomainSpec<T>) -> Vec<NodeMetric<T>> {
    let mut out = Vec::with_capacity((d.n_s + 1) * d.n_theta);
    for i in 0..=d.n_s {
        for j in 0..d.n_theta {
            out.push(d.metric(d.sigma(i), d.theta(j)));
        }
    }
    out
}

/// Folded ring ordering `0, 2, 4, …, 5, 3, 1` keeps periodic neighbours within
/// two positions of each other.
fn fold(j: usize, n: usize) -> usize {
    if j < n / 2 {
        2 * j
    } else {
        2 * (n - j) - 1
    }
}

/// Nine-point stencil of the discrete Laplacian at interior nodes.
struct Stencil<T> {
    n_s: usize,
    n_t: usize,
    /// Row `(i - 1)·n_θ + j`; entries ordered by `(di, dj)` over `{-1,0,1}²`.
    coef: Vec<[T; 9]>,
}

impl<T: Real> Stencil<T> {
    fn new(d: &DomainSpec<T>, metric: &[NodeMetric<T>]) -> Self {
        let (hs, ht) = (d.h_sigma(), d.h_theta());
        let two = T::lit(2.0);
        let mut coef = Vec::with_capacity((d.n_s - 1) * d.n_theta);
        for i in 1..d.n_s {
            for j in 0..d.n_theta {
                let m = &metric[i * d.n_theta + j];
                let a = m.a / (hs * hs);
                let c = m.c / (ht * ht);
                let b = m.b / (T::lit(4.0) * hs * ht);
                let dd = m.d / (two * hs);
                coef.push([b, a - dd, -b, c, -two * (a + c), c, -b, a + dd, b]);
            }
        }
        Self { n_s: d.n_s, n_t: d.n_theta, coef }
    }

    fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n_t;
        (0..9).map(move |k| {
            let (di, dj) = (k / 3, k % 3);
            (k, i + di - 1, (j + n + dj - 1) % n)
        })
    }

    /// `Δ_h v` at every interior node, in interior row order.
    fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.coef.len());
        for i in 1..self.n_s {
            for j in 0..self.n_t {
                let c = &self.coef[(i - 1) * self.n_t + j];
                out.push(self.neighbours(i, j).map(|(k, ii, jj)| c[k] * v[ii * self.n_t + jj]).sum());
            }
        }
        out
    }

    fn unknown(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_t + fold(j, self.n_t)
    }

    /// Band matrix of `Δ_h + diag(shift)` on the unknowns (interior nodes).
    fn assemble(&self, shift: &[T], into: &mut BandMatrix<T>) {
        into.clear();
        for i in 1..self.n_s {
            for j in 0..self.n_t {
                let row = self.unknown(i, j);
                let c = &self.coef[(i - 1) * self.n_t + j];
                for (k, ii, jj) in self.neighbours(i, j) {
                    if ii == 0 || ii == self.n_s {
                        continue;
                    }
                    into.add(row, self.unknown(ii, jj), c[k]);
                }
                into.add(row, row, shift[(i - 1) * self.n_t + j]);
            }
        }
    }

    fn band(&self) -> BandMatrix<T> {
        let n = (self.n_s - 1) * self.n_t;
        BandMatrix::zeros(n, self.n_t + 2, self.n_t + 2)
    }
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Discrete residual `Δ_h u + f(u)` at interior nodes.
fn residual_vec<T: Real>(st: &Stencil<T>, f: &Nonlinearity<T>, v: &[T]) -> Vec<T> {
    let lap = st.apply(v);
    let n_t = st.n_t;
    lap.into_iter().enumerate().map(|(k, l)| l + f.value(v[k + n_t])).collect()
}

fn initial_field<T: Real>(d: &DomainSpec<T>, guess: &Guess<'_, T>) -> Result<Vec<T>> {
    let n = (d.n_s + 1) * d.n_theta;
    let mut v = match guess {
        Guess::Field(values) => {
            if values.len() != n {
                return Err(Error::InvalidInput(format!("guess has {} values, grid has {n}", values.len())));
            }
            values.clone()
        }
        Guess::Profile(p) => sample_profile(d, p),
        Guess::Zeros => vec![T::zero(); n],
    };
    if v.iter().all(|x| *x == T::zero()) {
        for i in 0..=d.n_s {
            let s = d.sigma(i);
            let ramp = T::lit(4.0) * s * (T::one() - s);
            v[i * d.n_theta..(i + 1) * d.n_theta].iter_mut().for_each(|x| *x = ramp);
        }
    }
    for j in 0..d.n_theta {
        v[j] = T::zero();
        v[d.n_s * d.n_theta + j] = T::zero();
    }
    Ok(v)
}

fn sample_profile<T: Real>(d: &DomainSpec<T>, p: &ModelProfile<T>) -> Vec<T> {
    let mut v = Vec::with_capacity((d.n_s + 1) * d.n_theta);
    for i in 0..=d.n_s {
        for j in 0..d.n_theta {
            let r = d.s_at(d.sigma(i), d.theta(j)).cos();
            let r = r.max(p.r1()).min(p.r2());
            v.push(if i == 0 || i == d.n_s { T::zero() } else { p.u(r).max(T::zero()) });
        }
    }
    v
}

/// Solves `Δu + f(u) = 0`, `u = 0` on the boundary. Returns the discrete
/// solution in the basin of the guess; uniqueness is not claimed.
///
/// For `f = a·x` the discrete problem only has a positive solution when `a`
/// is exactly a discrete eigenvalue, which it never is. The principal
/// eigenpair nearest to `a` is computed instead and the solution carries the
/// effective nonlinearity `μ·x`; its scale is fixed by `⟨g, u⟩ = ⟨g, g⟩`
/// against the guess `g`.
pub fn solve_dirichlet<T: Real>(
    domain: &DomainSpec<T>,
    f: &Nonlinearity<T>,
    guess: Guess<'_, T>,
    opts: &SolveOptions<T>,
) -> Result<GridSolution<T>> {
    domain.validate()?;
    let v0 = initial_field(domain, &guess)?;
    let peak = sup(&v0);
    f.evaluate(peak * T::lit(2.0))?;
    let metric = metric_table(domain);
    let st = Stencil::new(domain, &metric);
    if f.is_homogeneous_linear() {
        let (a, _) = f.affine_coefficients().expect("linear");
        return inverse_iteration(domain, metric, &st, a, v0, opts);
    }

    let n_t = domain.n_theta;
    let mut v = v0;
    let mut band = st.band();
    let mut res = residual_vec(&st, f, &v);
    let mut norm = sup(&res);
    let mut iterations = 0;
    while norm > opts.tol {
        if iterations == opts.max_iters {
            return Err(Error::NonConvergence { iterations, residual: norm.as_f64() });
        }
        iterations += 1;
        let slopes: Vec<T> = (0..res.len()).map(|k| f.slope(v[k + n_t])).collect();
        st.assemble(&slopes, &mut band);
        band.factor()?;
        let mut rhs = vec![T::zero(); res.len()];
        for i in 1..domain.n_s {
            for j in 0..n_t {
                rhs[st.unknown(i, j)] = -res[(i - 1) * n_t + j];
            }
        }
        band.solve_in_place(&mut rhs);
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = v.clone();
            for i in 1..domain.n_s {
                for j in 0..n_t {
                    let k = i * n_t + j;
                    trial[k] = trial[k] + lambda * rhs[st.unknown(i, j)];
                }
            }
            let r = residual_vec(&st, f, &trial);
            let nr = sup(&r);
            if nr < norm {
                v = trial;
                res = r;
                norm = nr;
                accepted = true;
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        if !accepted {
            return Err(Error::NonConvergence { iterations, residual: norm.as_f64() });
        }
    }
    finish(domain.clone(), f.clone(), v, metric, norm, iterations, SolveRoute::Newton)
}

fn inverse_iteration<T: Real>(
    domain: &DomainSpec<T>,
    metric: Vec<NodeMetric<T>>,
    st: &Stencil<T>,
    shift: T,
    v0: Vec<T>,
    opts: &SolveOptions<T>,
) -> Result<GridSolution<T>> {
    let n_t = domain.n_theta;
    let m = (domain.n_s - 1) * n_t;
    let mut band = st.band();
    st.assemble(&vec![shift; m], &mut band);
    band.factor()?;
    let guess: Vec<T> = v0[n_t..n_t + m].to_vec();
    let gg: T = guess.iter().map(|x| *x * *x).sum();
    let embed = |x: &[T]| {
        let mut full = vec![T::zero(); (domain.n_s + 1) * n_t];
        full[n_t..n_t + m].copy_from_slice(x);
        full
    };
    // natural order <-> band order
    let to_band = |x: &[T]| {
        let mut y = vec![T::zero(); m];
        for i in 1..domain.n_s {
            for j in 0..n_t {
                y[st.unknown(i, j)] = x[(i - 1) * n_t + j];
            }
        }
        y
    };
    let from_band = |y: &[T]| {
        let mut x = vec![T::zero(); m];
        for i in 1..domain.n_s {
            for j in 0..n_t {
                x[(i - 1) * n_t + j] = y[st.unknown(i, j)];
            }
        }
        x
    };

    let mut x = guess.clone();
    let mut iterations = 0;
    loop {
        let mut y = to_band(&x);
        band.solve_in_place(&mut y);
        let y = from_band(&y);
        iterations += 1;
        let gy: T = guess.iter().zip(&y).map(|(a, b)| *a * *b).sum();
        let scale = gg / gy;
        x = y.iter().map(|v| *v * scale).collect();
        let full = embed(&x);
        let lap = st.apply(&full);
        let xx: T = x.iter().map(|v| *v * *v).sum();
        let mu = -lap.iter().zip(&x).map(|(l, v)| *l * *v).sum::<T>() / xx;
        let norm = sup(&lap.iter().zip(&x).map(|(l, v)| *l + mu * *v).collect::<Vec<_>>());
        if norm <= opts.tol {
            return finish(domain.clone(), Nonlinearity::linear(mu), full, metric, norm, iterations, SolveRoute::Eigen);
        }
        if iterations == opts.max_iters {
            return Err(Error::NonConvergence { iterations, residual: norm.as_f64() });
        }
    }
}

fn finish<T: Real>(
    domain: DomainSpec<T>,
    f: Nonlinearity<T>,
    values: Vec<T>,
    metric: Vec<NodeMetric<T>>,
    residual: T,
    iterations: usize,
    route: SolveRoute,
) -> Result<GridSolution<T>> {
    let n_t = domain.n_theta;
    if let Some(k) = (n_t..domain.n_s * n_t).find(|&k| !(values[k] > T::zero())) {
        let _ = k;
        return Err(Error::NoSolution { residual: residual.as_f64(), tol: 0.0 });
    }
    let (mut best, mut at) = (T::neg_infinity(), (0, 0));
    for (k, v) in values.iter().enumerate() {
        if *v > best {
            best = *v;
            at = (k / n_t, k % n_t);
        }
    }
    Ok(GridSolution { domain, f, values, metric, residual, iterations, route, u_max: best, argmax: at })
}

/// `d/dσ` along a column with fourth-order stencils, one-sided at the walls.
fn d4_open<T: Real>(col: impl Fn(usize) -> T, i: usize, n: usize, h: T) -> T {
    let c = |x: f64| T::lit(x);
    let twelve_h = c(12.0) * h;
    if i >= 2 && i + 2 <= n {
        (col(i - 2) - c(8.0) * col(i - 1) + c(8.0) * col(i + 1) - col(i + 2)) / twelve_h
    } else if i == 0 {
        (c(-25.0) * col(0) + c(48.0) * col(1) - c(36.0) * col(2) + c(16.0) * col(3) - c(3.0) * col(4)) / twelve_h
    } else if i == 1 {
        (c(-3.0) * col(0) - c(10.0) * col(1) + c(18.0) * col(2) - c(6.0) * col(3) + col(4)) / twelve_h
    } else if i == n {
        -(c(-25.0) * col(n) + c(48.0) * col(n - 1) - c(36.0) * col(n - 2) + c(16.0) * col(n - 3) - c(3.0) * col(n - 4))
            / twelve_h
    } else {
        -(c(-3.0) * col(n) - c(10.0) * col(n - 1) + c(18.0) * col(n - 2) - c(6.0) * col(n - 3) + col(n - 4)) / twelve_h
    }
}

/// Periodic fourth-order `d/dθ`.
fn d4_periodic<T: Real>(row: impl Fn(usize) -> T, j: usize, n: usize, h: T) -> T {
    let at = |k: isize| row(((j as isize + k).rem_euclid(n as isize)) as usize);
    (at(-2) - T::lit(8.0) * at(-1) + T::lit(8.0) * at(1) - at(2)) / (T::lit(12.0) * h)
}

/// Physical gradient `(u_s, u_θ)` of a nodal field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGradient<T> {
    pub du_ds: T,
    pub du_dtheta: T,
    /// `u_s² + u_θ²/sin²s`.
    pub norm_sq: T,
}

impl<T: Real> GridSolution<T> {
    /// Samples a model profile on its own annulus `[arccos r₂, arccos r₁]`.
    pub fn from_profile(profile: &ModelProfile<T>, n_s: usize, n_theta: usize) -> Result<Self> {
        let d = DomainSpec::rotational(profile.r2().acos(), profile.r1().acos(), n_s, n_theta)?;
        let values = sample_profile(&d, profile);
        Self::from_values(d, profile.nonlinearity().clone(), values, 0, SolveRoute::Sampled)
    }

    /// Wraps nodal values; the residual is recomputed.
    pub fn from_values(
        domain: DomainSpec<T>,
        f: Nonlinearity<T>,
        values: Vec<T>,
        iterations: usize,
        route: SolveRoute,
    ) -> Result<Self> {
        domain.validate()?;
        if values.len() != (domain.n_s + 1) * domain.n_theta {
            return Err(Error::InvalidInput(format!("{} values for a {}x{} grid", values.len(), domain.n_s + 1, domain.n_theta)));
        }
        let metric = metric_table(&domain);
        let st = Stencil::new(&domain, &metric);
        let residual = sup(&residual_vec(&st, &f, &values));
        finish(domain, f, values, metric, residual, iterations, route)
    }

    pub fn domain(&self) -> &DomainSpec<T> {
        &self.domain
    }

    /// The nonlinearity the discrete equation is satisfied with. Differs
    /// from the requested one on the eigen route.
    pub fn nonlinearity(&self) -> &Nonlinearity<T> {
        &self.f
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn residual(&self) -> T {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn route(&self) -> SolveRoute {
        self.route
    }

    pub fn n_s(&self) -> usize {
        self.domain.n_s
    }

    pub fn n_theta(&self) -> usize {
        self.domain.n_theta
    }

    /// Largest nodal value.
    pub fn node_max(&self) -> T {
        self.u_max
    }

    pub fn argmax(&self) -> (usize, usize) {
        self.argmax
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.domain.n_theta + j]
    }

    pub fn metric(&self, i: usize, j: usize) -> &NodeMetric<T> {
        &self.metric[i * self.domain.n_theta + j]
    }

    pub fn s(&self, i: usize, j: usize) -> T {
        self.metric(i, j).s
    }

    pub fn theta(&self, j: usize) -> T {
        self.domain.theta(j)
    }

    /// Gradient of an arbitrary nodal field laid out like `values`.
    pub fn field_gradient(&self, field: &[T], i: usize, j: usize) -> NodeGradient<T> {
        let n_t = self.domain.n_theta;
        let dsig = d4_open(|k| field[k * n_t + j], i, self.domain.n_s, self.domain.h_sigma());
        let dth = d4_periodic(|k| field[i * n_t + k], j, n_t, self.domain.h_theta());
        let m = self.metric(i, j);
        let du_ds = m.sig_s * dsig;
        let du_dtheta = m.sig_t * dsig + dth;
        NodeGradient { du_ds, du_dtheta, norm_sq: du_ds * du_ds + m.inv_sin2 * du_dtheta * du_dtheta }
    }

    pub fn gradient(&self, i: usize, j: usize) -> NodeGradient<T> {
        self.field_gradient(&self.values, i, j)
    }

    /// `W = |∇u|²` at every node.
    pub fn grad_sq_field(&self) -> Vec<T> {
        let n_t = self.domain.n_theta;
        (0..self.values.len()).map(|k| self.gradient(k / n_t, k % n_t).norm_sq).collect()
    }

    /// Largest spread `max_j u - min_j u` over the rings.
    pub fn ring_spread(&self) -> T {
        let n_t = self.domain.n_theta;
        self.values
            .chunks(n_t)
            .map(|ring| {
                let hi = ring.iter().fold(T::neg_infinity(), |m, x| m.max(*x));
                let lo = ring.iter().fold(T::infinity(), |m, x| m.min(*x));
                hi - lo
            })
            .fold(T::zero(), |m, x| m.max(x))
    }

    /// Node-wise `max |u - U(cos s)|` against a rotational profile.
    pub fn error_against(&self, profile: &ModelProfile<T>) -> T {
        let n_t = self.domain.n_theta;
        let mut worst = T::zero();
        for (k, v) in self.values.iter().enumerate() {
            let r = self.metric[k].s.cos().max(profile.r1()).min(profile.r2());
            let i = k / n_t;
            let exact = if i == 0 || i == self.domain.n_s { T::zero() } else { profile.u(r) };
            worst = worst.max((*v - exact).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::solve_annulus_profile;

    #[test]
    fn fold_is_a_permutation_with_short_hops() {
        let n = 12;
        let mut seen: Vec<usize> = (0..n).map(|j| fold(j, n)).collect();
        for j in 0..n {
            let a = fold(j, n) as isize;
            let b = fold((j + 1) % n, n) as isize;
            assert!((a - b).abs() <= 2);
        }
        seen.sort();
        assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn fourth_order_column_derivative() {
        let n = 20;
        let h = 1.0 / n as f64;
        for i in 0..=n {
            let d = d4_open(|k| (k as f64 * h).exp(), i, n, h);
            assert!((d - (i as f64 * h).exp()).abs() < 5e-6, "{i}: {d}");
        }
    }

    #[test]
    fn affine_case_matches_the_profile() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.2, 1.0, 1e-12).unwrap();
        let d = DomainSpec::rotational(p.r2().acos(), p.r1().acos(), 32, 16).unwrap();
        let sol = solve_dirichlet(&d, &f, Guess::Zeros, &SolveOptions::with_tol(1e-10)).unwrap();
        assert_eq!(sol.route(), SolveRoute::Newton);
        assert!(sol.residual() <= 1e-10);
        assert!(sol.error_against(&p) < 5e-3, "{}", sol.error_against(&p));
        assert!(sol.ring_spread() < 1e-10);
    }

    #[test]
    fn linear_case_takes_the_eigen_route() {
        let f = Nonlinearity::<f64>::linear(2.0);
        let p = solve_annulus_profile(&f, 0.0, 1.0, 1e-12).unwrap();
        let d = DomainSpec::rotational(p.r2().acos(), p.r1().acos(), 32, 16).unwrap();
        let sol = solve_dirichlet(&d, &f, Guess::Profile(&p), &SolveOptions::with_tol(1e-10)).unwrap();
        assert_eq!(sol.route(), SolveRoute::Eigen);
        let (mu, b) = sol.nonlinearity().affine_coefficients().unwrap();
        assert_eq!(b, 0.0);
        assert!((mu - 2.0).abs() < 1e-2, "{mu}");
        assert!(sol.error_against(&p) < 5e-3);
    }

    #[test]
    fn sampled_profile_has_small_discrete_residual() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.3, 1.5, 1e-12).unwrap();
        let a = GridSolution::from_profile(&p, 32, 8).unwrap();
        let b = GridSolution::from_profile(&p, 64, 8).unwrap();
        let ratio = a.residual() / b.residual();
        assert!((3.0..5.0).contains(&ratio), "{} {}", a.residual(), b.residual());
        // exact samples: the boundary gradient converges at fourth order
        let g2 = p.boundary_gradient(crate::profiles::Branch::Upper).powi(2);
        let ea = (a.grad_sq_field()[0] - g2).abs();
        let eb = (b.grad_sq_field()[0] - g2).abs();
        assert!(eb < 1e-4 * g2 && ea / eb > 10.0, "{ea} {eb}");
    }
}
