//! Level curves of grid solutions, their metric lengths and geodesic
//! curvatures, the ridge of maxima, the radial graph `p ↦ (1 + M - u)p`, and
//! the rotation-field derivative of rotational solutions.
//!
//! Points on the sphere are `(s, θ)` with `s` the colatitude, embedded as
//! `(sin s cos θ, sin s sin θ, cos s)`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pde::{max_set, GridSolution};
use crate::profiles::{Branch, ModelProfile};
use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn scale<T: Real>(a: Vec3<T>, k: T) -> Vec3<T> {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn embed<T: Real>(s: T, theta: T) -> Vec3<T> {
    let (ss, cs) = s.sin_cos();
    let (st, ct) = theta.sin_cos();
    [ss * ct, ss * st, cs]
}

/// Wraps an angle difference into `(-π, π]`.
fn wrap<T: Real>(d: T) -> T {
    let tau = T::TAU();
    let mut x = d % tau;
    if x > T::PI() {
        x = x - tau;
    } else if x <= -T::PI() {
        x = x + tau;
    }
    x
}

/// Geodesic curvature at `b` of the circle through `a, b, c`, with respect
/// to the left normal `b × T` for travel from `a` to `c`.
pub fn three_point_curvature<T: Real>(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> T {
    let u = sub(a, b);
    let w = sub(c, b);
    let n = cross(u, w);
    let (uu, ww) = (dot(u, u), dot(w, w));
    let uw = sub(u, w);
    let denom = uu * ww * dot(uw, uw);
    if denom == T::zero() {
        return T::zero();
    }
    // curvature vector (C - b)/ρ² of the circumcircle
    let k = scale(cross(sub(scale(w, uu), scale(u, ww)), n), T::lit(2.0) / denom);
    let t = sub(c, a);
    let t = scale(t, T::one() / norm(t));
    dot(k, cross(b, t))
}

/// Closed or open polyline on the sphere.
#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve<T> {
    pub level: T,
    pub closed: bool,
    /// `(s, θ)` vertices; a closed curve does not repeat its first vertex.
    pub vertices: Vec<(T, T)>,
    pub length: T,
    /// Signed curvature per vertex with respect to the left normal. Curves
    /// around the annulus are traversed with increasing `θ`, which makes the
    /// left normal point north (towards `s = 0`).
    pub curvature: Vec<T>,
    /// Net turns around the pole axis: `±1` for curves around the annulus.
    pub winding: i32,
}

impl<T: Real> LevelCurve<T> {
    pub fn from_vertices(level: T, mut vertices: Vec<(T, T)>, closed: bool) -> Self {
        let mut winding = 0;
        if closed && vertices.len() > 2 {
            let n = vertices.len();
            let total: T = (0..n).map(|k| wrap(vertices[(k + 1) % n].1 - vertices[k].1)).sum();
            winding = (total / T::TAU()).round().to_i32().unwrap_or(0);
            if winding < 0 {
                vertices.reverse();
                winding = -winding;
            }
        }
        let length = metric_length(&vertices, closed);
        let pts: Vec<Vec3<T>> = vertices.iter().map(|&(s, t)| embed(s, t)).collect();
        let n = pts.len();
        let curvature = (0..n)
            .map(|k| {
                if closed && n >= 3 {
                    three_point_curvature(pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n])
                } else if k > 0 && k + 1 < n {
                    three_point_curvature(pts[k - 1], pts[k], pts[k + 1])
                } else {
                    T::nan()
                }
            })
            .collect();
        Self { level, closed, vertices, length, curvature, winding }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn max_curvature(&self) -> T {
        self.curvature.iter().filter(|k| !k.is_nan()).fold(T::neg_infinity(), |m, k| m.max(*k))
    }

    pub fn min_curvature(&self) -> T {
        self.curvature.iter().filter(|k| !k.is_nan()).fold(T::infinity(), |m, k| m.min(*k))
    }

    pub fn mean_s(&self) -> T {
        self.vertices.iter().map(|v| v.0).sum::<T>() / T::from_usize(self.vertices.len().max(1)).unwrap()
    }
}

/// `Σ √(Δs² + sin²(s_mid)·Δθ²)`.
pub fn metric_length<T: Real>(vertices: &[(T, T)], closed: bool) -> T {
    let n = vertices.len();
    if n < 2 {
        return T::zero();
    }
    let segs = if closed { n } else { n - 1 };
    (0..segs)
        .map(|k| {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let ds = b.0 - a.0;
            let dt = wrap(b.1 - a.1);
            let sm = ((a.0 + b.0) * T::lit(0.5)).sin();
            (ds * ds + sm * sm * dt * dt).sqrt()
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum EdgeKey {
    /// Between `(i, j)` and `(i + 1, j)`.
    Radial(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    Ring(usize, usize),
}

/// Marching squares on the `(σ, θ)` grid with linear interpolation along
/// cell edges. Node values equal to `c` count as above the level. Saddle
/// cells are split by the value at the cell centre.
pub fn extract_level_curves<T: Real>(solution: &GridSolution<T>, c: T) -> Result<Vec<LevelCurve<T>>> {
    let (n_s, n_t) = (solution.n_s(), solution.n_theta());
    let top = solution.node_max();
    if !(c > T::zero() && c < top) {
        return Err(Error::Extraction(format!("level {c} outside (0, {top})")));
    }
    let d = solution.domain();
    let v = |i: usize, j: usize| solution.value(i, j % n_t);
    let point = |key: EdgeKey| -> (T, T) {
        match key {
            EdgeKey::Radial(i, j) => {
                let (a, b) = (v(i, j), v(i + 1, j));
                let t = (c - a) / (b - a);
                let sigma = (T::from_usize(i).unwrap() + t) * d.h_sigma();
                let th = d.theta(j);
                (d.s_at(sigma, th), th)
            }
            EdgeKey::Ring(i, j) => {
                let (a, b) = (v(i, j), v(i, j + 1));
                let t = (c - a) / (b - a);
                let th = (T::from_usize(j).unwrap() + t) * d.h_theta();
                (d.s_at(d.sigma(i), th), th)
            }
        }
    };

    let mut links: HashMap<EdgeKey, Vec<EdgeKey>> = HashMap::new();
    let mut link = |a: EdgeKey, b: EdgeKey| {
        links.entry(a).or_default().push(b);
        links.entry(b).or_default().push(a);
    };
    for i in 0..n_s {
        for j in 0..n_t {
            let jn = (j + 1) % n_t;
            // corners counter-clockwise: (i,j), (i+1,j), (i+1,j+1), (i,j+1)
            let up = [v(i, j) >= c, v(i + 1, j) >= c, v(i + 1, jn) >= c, v(i, jn) >= c];
            let edges = [EdgeKey::Radial(i, j), EdgeKey::Ring(i + 1, j), EdgeKey::Radial(i, jn), EdgeKey::Ring(i, j)];
            let cut: Vec<usize> = (0..4).filter(|&e| up[e] != up[(e + 1) % 4]).collect();
            match cut.len() {
                0 => {}
                2 => link(edges[cut[0]], edges[cut[1]]),
                4 => {
                    let centre = (v(i, j) + v(i + 1, j) + v(i + 1, jn) + v(i, jn)) * T::lit(0.25);
                    // pair the crossings around the corners on the minority side
                    if (centre >= c) == up[0] {
                        link(edges[0], edges[1]);
                        link(edges[2], edges[3]);
                    } else {
                        link(edges[3], edges[0]);
                        link(edges[1], edges[2]);
                    }
                }
                _ => unreachable!("a square has an even number of sign changes"),
            }
        }
    }

    let mut keys: Vec<EdgeKey> = links.keys().copied().collect();
    keys.sort_by_key(|k| match *k {
        EdgeKey::Radial(i, j) => (0, i, j),
        EdgeKey::Ring(i, j) => (1, i, j),
    });
    let mut used: HashMap<EdgeKey, bool> = HashMap::new();
    let mut curves = Vec::new();
    for start in keys {
        if used.contains_key(&start) {
            continue;
        }
        let mut chain = vec![start];
        used.insert(start, true);
        let mut prev = start;
        let mut cur = links[&start][0];
        let mut closed = false;
        loop {
            if cur == start {
                closed = true;
                break;
            }
            if used.contains_key(&cur) {
                break;
            }
            used.insert(cur, true);
            chain.push(cur);
            let next = links[&cur].iter().copied().find(|k| *k != prev).unwrap_or(prev);
            if next == prev && links[&cur].len() < 2 {
                break;
            }
            prev = cur;
            cur = next;
        }
        let vertices = chain.into_iter().map(point).collect();
        curves.push(LevelCurve::from_vertices(c, vertices, closed));
    }
    Ok(curves)
}

/// Per-column maximum of a grid solution, located by differentiating the
/// quartic through the five nodes around the largest nodal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RidgePoint<T> {
    pub j: usize,
    pub sigma: T,
    pub s: T,
    pub theta: T,
    pub u: T,
}

pub fn ridge<T: Real>(solution: &GridSolution<T>) -> Vec<RidgePoint<T>> {
    let (n_s, n_t) = (solution.n_s(), solution.n_theta());
    let d = solution.domain();
    let h = d.h_sigma();
    (0..n_t)
        .map(|j| {
            let mut best = 1;
            for i in 1..n_s {
                if solution.value(i, j) > solution.value(best, j) {
                    best = i;
                }
            }
            let centre = best.clamp(2, n_s - 2);
            let y: Vec<T> = (0..5).map(|k| solution.value(centre + k - 2, j)).collect();
            let x0 = T::from_usize(best).unwrap() - T::from_usize(centre).unwrap();
            let x = quartic_argmax(&y, x0);
            let sigma = (T::from_usize(centre).unwrap() + x) * h;
            let th = d.theta(j);
            RidgePoint { j, sigma, s: d.s_at(sigma, th), theta: th, u: quartic_eval(&y, x) }
        })
        .collect()
}

/// Lagrange quartic through `y[k]` at `x = k - 2`.
fn quartic_eval<T: Real>(y: &[T], x: T) -> T {
    let mut acc = T::zero();
    for k in 0..5 {
        let xk = T::from_usize(k).unwrap() - T::lit(2.0);
        let mut w = T::one();
        for m in 0..5 {
            if m != k {
                let xm = T::from_usize(m).unwrap() - T::lit(2.0);
                w = w * (x - xm) / (xk - xm);
            }
        }
        acc = acc + w * y[k];
    }
    acc
}

fn quartic_argmax<T: Real>(y: &[T], x0: T) -> T {
    let h = T::lit(1e-4);
    let d1 = |x: T| (quartic_eval(y, x + h) - quartic_eval(y, x - h)) / (h + h);
    let d2 = |x: T| (quartic_eval(y, x + h) - T::lit(2.0) * quartic_eval(y, x) + quartic_eval(y, x - h)) / (h * h);
    let mut x = x0;
    for _ in 0..30 {
        let (g, c) = (d1(x), d2(x));
        if c >= T::zero() {
            break;
        }
        let step = (g / c).max(-T::one()).min(T::one());
        x = (x - step).max(-T::one()).min(T::one());
        if step.abs() < T::lit(1e-12) {
            break;
        }
    }
    x
}

/// The ridge of column maxima as a closed curve, provided the near-maximal
/// nodes form a band around the annulus.
pub fn max_curve<T: Real>(solution: &GridSolution<T>, collar: T) -> Result<LevelCurve<T>> {
    let set = max_set(solution, collar);
    if !set.components.iter().any(|c| c.encircles) {
        return Err(Error::NoMaxCurve);
    }
    let pts = ridge(solution);
    let level = pts.iter().fold(T::neg_infinity(), |m, p| m.max(p.u));
    Ok(LevelCurve::from_vertices(level, pts.iter().map(|p| (p.s, p.theta)).collect(), true))
}

/// Largest ridge value, i.e. the interpolated maximum of `u`.
pub fn interpolated_max<T: Real>(solution: &GridSolution<T>) -> T {
    ridge(solution).iter().fold(T::neg_infinity(), |m, p| m.max(p.u))
}

/// Reference normal for the signed curvature of a level curve through a
/// regular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normal {
    /// `∇u/|∇u|`, pointing into `{u > c}`.
    Gradient,
    AntiGradient,
}

/// `κ = (½⟨∇|∇u|², ∇u⟩ - |∇u|²Δu)/|∇u|³` at node `(i, j)`, with `Δu = -f(u)`
/// and fourth-order differences for both gradients. The sign refers to the
/// chosen normal; with [`Normal::Gradient`], a parallel at colatitude `s`
/// with `u` increasing southwards has `κ = -cot s`.
pub fn geodesic_curvature<T: Real>(solution: &GridSolution<T>, i: usize, j: usize, normal: Normal) -> Result<T> {
    let (n_s, n_t) = (solution.n_s(), solution.n_theta());
    let g = solution.gradient(i, j);
    let scale_u = solution.node_max().abs().max(T::min_positive_value());
    if g.norm_sq.sqrt() < T::lit(1e-8) * scale_u {
        return Err(Error::NearCritical { grad: g.norm_sq.sqrt().as_f64() });
    }
    // W on the 5-point column and row stencils around the node
    let mut w = vec![T::nan(); (n_s + 1) * n_t];
    let lo = i.saturating_sub(4);
    let hi = (i + 4).min(n_s);
    for ii in lo..=hi {
        w[ii * n_t + j] = solution.gradient(ii, j).norm_sq;
    }
    for dj in 1..=2 {
        for jj in [(j + dj) % n_t, (j + n_t - dj) % n_t] {
            w[i * n_t + jj] = solution.gradient(i, jj).norm_sq;
        }
    }
    let gw = solution.field_gradient(&w, i, j);
    let m = solution.metric(i, j);
    let inner = gw.du_ds * g.du_ds + m.inv_sin2 * gw.du_dtheta * g.du_dtheta;
    let lap = -solution.nonlinearity().value(solution.value(i, j));
    let kappa = (T::lit(0.5) * inner - g.norm_sq * lap) / g.norm_sq.powf(T::lit(1.5));
    Ok(match normal {
        Normal::Gradient => kappa,
        Normal::AntiGradient => -kappa,
    })
}

/// The same formula with exact derivatives of a rotational profile at
/// height `r`, where `u_s = -sin s·U'` and `u_ss = sin²s·U'' - cos s·U'`.
pub fn geodesic_curvature_rotational<T: Real>(profile: &ModelProfile<T>, r: T, normal: Normal) -> Result<T> {
    let st = profile.state(r);
    let sin = (T::one() - r * r).sqrt();
    let us = -sin * st.du;
    if us.abs() < T::lit(1e-12) {
        return Err(Error::NearCritical { grad: us.abs().as_f64() });
    }
    let uss = sin * sin * profile.d2u(r) - r * st.du;
    // ∇|∇u|² = 2 u_s u_ss ∂_s, Δu = -f(u)
    let inner = T::lit(2.0) * us * uss * us;
    let lap = -profile.nonlinearity().value(st.u);
    let w = us * us;
    let kappa = (T::lit(0.5) * inner - w * lap) / (w * us.abs());
    Ok(match normal {
        Normal::Gradient => kappa,
        Normal::AntiGradient => -kappa,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    MaxCurve,
    /// Zero set on the side of the given branch.
    Boundary(Branch),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialPoint<T> {
    pub kind: SampleKind,
    pub s: T,
    pub theta: T,
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
    /// `⟨N, P/|P|⟩`.
    pub contact: T,
    /// `|∇u|²` at the sample.
    pub grad_sq: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactStats<T> {
    pub kind: SampleKind,
    pub count: usize,
    pub mean: T,
    pub std_dev: T,
    pub min: T,
    pub max: T,
    /// Mean radius `|P|`.
    pub radius: T,
    /// `(1+M)/√((1+M)² + α)` with `α = -|∇u|²` averaged, the constant read
    /// as written.
    pub cos_alpha_linear: T,
    /// `(1+M)/√((1+M)² + α²)` with `α² = |∇u|²` averaged.
    pub cos_alpha_squared: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialGraphSample<T> {
    pub max_value: T,
    pub points: Vec<RadialPoint<T>>,
    pub stats: Vec<ContactStats<T>>,
}

/// Graph point, normal and contact cosine from `u` and its coordinate
/// derivatives at `(s, θ)`.
pub fn radial_point<T: Real>(kind: SampleKind, m: T, s: T, theta: T, u: T, u_s: T, u_theta: T) -> RadialPoint<T> {
    let p = embed(s, theta);
    let (ss, cs) = s.sin_cos();
    let (st, ct) = theta.sin_cos();
    let p_s = [cs * ct, cs * st, -ss];
    let p_t = [-ss * st, ss * ct, T::zero()];
    let rho = T::one() + m - u;
    let big_s = sub(scale(p_s, rho), scale(p, u_s));
    let big_t = sub(scale(p_t, rho), scale(p, u_theta));
    let mut n = cross(big_s, big_t);
    n = scale(n, T::one() / norm(n));
    if dot(n, p) < T::zero() {
        n = scale(n, -T::one());
    }
    let point = scale(p, rho);
    let grad_sq = u_s * u_s + u_theta * u_theta / (ss * ss);
    RadialPoint { kind, s, theta, point, normal: n, contact: dot(n, p), grad_sq }
}

fn stats<T: Real>(m: T, kind: SampleKind, pts: &[RadialPoint<T>]) -> Option<ContactStats<T>> {
    let sel: Vec<&RadialPoint<T>> = pts.iter().filter(|p| p.kind == kind).collect();
    if sel.is_empty() {
        return None;
    }
    let n = T::from_usize(sel.len()).unwrap();
    let mean = sel.iter().map(|p| p.contact).sum::<T>() / n;
    let var = sel.iter().map(|p| (p.contact - mean).powi(2)).sum::<T>() / n;
    let g = sel.iter().map(|p| p.grad_sq).sum::<T>() / n;
    let a = T::one() + m;
    Some(ContactStats {
        kind,
        count: sel.len(),
        mean,
        std_dev: var.sqrt(),
        min: sel.iter().fold(T::infinity(), |x, p| x.min(p.contact)),
        max: sel.iter().fold(T::neg_infinity(), |x, p| x.max(p.contact)),
        radius: sel.iter().map(|p| norm(p.point)).sum::<T>() / n,
        cos_alpha_linear: a / (a * a - g).sqrt(),
        cos_alpha_squared: a / (a * a + g).sqrt(),
    })
}

fn finish_graph<T: Real>(m: T, points: Vec<RadialPoint<T>>) -> RadialGraphSample<T> {
    let kinds = [SampleKind::MaxCurve, SampleKind::Boundary(Branch::Lower), SampleKind::Boundary(Branch::Upper)];
    let stats = kinds.iter().filter_map(|k| stats(m, *k, &points)).collect();
    RadialGraphSample { max_value: m, points, stats }
}

/// Radial graph of a rotational model sampled at `n_theta` longitudes on
/// both boundary circles and on the maximum circle.
pub fn radial_graph_profile<T: Real>(profile: &ModelProfile<T>, n_theta: usize) -> RadialGraphSample<T> {
    let m = profile.max_value();
    let mut points = Vec::with_capacity(3 * n_theta);
    let rows = [
        (SampleKind::MaxCurve, profile.height().acos(), m, T::zero()),
        // u increases southwards from Γ₂ and northwards from Γ₁
        (SampleKind::Boundary(Branch::Upper), profile.r2().acos(), T::zero(), profile.boundary_gradient(Branch::Upper)),
        (SampleKind::Boundary(Branch::Lower), profile.r1().acos(), T::zero(), -profile.boundary_gradient(Branch::Lower)),
    ];
    for (kind, s, u, u_s) in rows {
        for j in 0..n_theta {
            let th = T::TAU() * T::from_usize(j).unwrap() / T::from_usize(n_theta).unwrap();
            points.push(radial_point(kind, m, s, th, u, u_s, T::zero()));
        }
    }
    finish_graph(m, points)
}

/// Radial graph of a grid solution at its boundary nodes and along the
/// ridge, with `M` the interpolated maximum.
pub fn radial_graph_grid<T: Real>(solution: &GridSolution<T>) -> RadialGraphSample<T> {
    let (n_s, n_t) = (solution.n_s(), solution.n_theta());
    let ridge = ridge(solution);
    let m = ridge.iter().fold(T::neg_infinity(), |x, p| x.max(p.u));
    let mut points = Vec::with_capacity(3 * n_t);
    for (i, kind) in [(0, SampleKind::Boundary(Branch::Upper)), (n_s, SampleKind::Boundary(Branch::Lower))] {
        for j in 0..n_t {
            let g = solution.gradient(i, j);
            points.push(radial_point(kind, m, solution.s(i, j), solution.theta(j), T::zero(), g.du_ds, g.du_dtheta));
        }
    }
    // along the ridge u_σ = 0, so u_θ|_s is the derivative of the ridge values
    let h = solution.domain().h_theta();
    for (j, p) in ridge.iter().enumerate() {
        let at = |k: isize| ridge[((j as isize + k).rem_euclid(n_t as isize)) as usize].u;
        let ut = (at(-2) - T::lit(8.0) * at(-1) + T::lit(8.0) * at(1) - at(2)) / (T::lit(12.0) * h);
        points.push(radial_point(SampleKind::MaxCurve, m, p.s, p.theta, p.u, T::zero(), ut));
    }
    finish_graph(m, points)
}

/// Rotation generator about the `y`-axis, `Ỹ(q) = (q_z, 0, -q_x)`.
pub fn rotation_field<T: Real>(q: Vec3<T>) -> Vec3<T> {
    [q[2], T::zero(), -q[0]]
}

/// `⟨Ỹ, ∇u⟩` at height `r` and longitude `θ` for a rotational solution, by a
/// fourth-order central difference along the flow of `Ỹ`.
pub fn killing_derivative<T: Real>(profile: &ModelProfile<T>, r: T, theta: T) -> T {
    let rho = (T::one() - r * r).sqrt();
    let x = rho * theta.cos();
    let t = T::lit(1e-3);
    // z-coordinate after rotating by angle a: z' = -x sin a + r cos a
    let u_at = |a: T| {
        let z = -x * a.sin() + r * a.cos();
        profile.u(z.max(profile.r1()).min(profile.r2()))
    };
    (u_at(-t - t) - T::lit(8.0) * u_at(-t) + T::lit(8.0) * u_at(t) - u_at(t + t)) / (T::lit(12.0) * t)
}

/// Closed form `-√(1 - r²)·U'(r)·cos θ` of [`killing_derivative`].
pub fn killing_closed_form<T: Real>(profile: &ModelProfile<T>, r: T, theta: T) -> T {
    -(T::one() - r * r).sqrt() * profile.du(r) * theta.cos()
}
