//! Finite-difference Dirichlet solver on spherical annuli, possibly with
//! wavy boundaries.
//!
//! The annulus `sᵢₙ(θ) < s < sₒᵤₜ(θ)` is mapped to `[0, 1] × S¹` through
//! `s = sᵢₙ + ξ(σ)(sₒᵤₜ - sᵢₙ)`, the Laplacian
//! `∂²_s + cot s ∂_s + sin⁻²s ∂²_θ` is rewritten by the chain rule, and the
//! result is discretized with second-order central differences on a uniform
//! `(σ, θ)` grid.

mod banded;
mod domain;
mod fit;
mod solve;

use std::collections::VecDeque;

use serde::Serialize;

pub use banded::BandMatrix;
pub use domain::{DomainSpec, NodeMetric, Perturbation, DEFAULT_STRETCH, MAX_STRETCH};
pub use fit::fit_model_to_annulus;
pub use solve::{solve_dirichlet, GridSolution, Guess, NodeGradient, SolveOptions, SolveRoute};

use crate::scalar::Real;

#[derive(Debug, Clone, Serialize)]
pub struct MaxComponent {
    /// `(i, j)` node indices.
    pub nodes: Vec<(usize, usize)>,
    /// Meets every ring column, i.e. separates the two boundaries.
    pub encircles: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxSet<T> {
    pub u_max: T,
    pub threshold: T,
    pub components: Vec<MaxComponent>,
}

impl<T> MaxSet<T> {
    pub fn node_count(&self) -> usize {
        self.components.iter().map(|c| c.nodes.len()).sum()
    }

    pub fn is_single_closed_curve(&self) -> bool {
        self.components.len() == 1 && self.components[0].encircles
    }
}

/// Nodes with `u ≥ u_max - collar`, grouped by 8-connectivity with `θ`
/// periodic.
pub fn max_set<T: Real>(solution: &GridSolution<T>, collar: T) -> MaxSet<T> {
    let (n_s, n_t) = (solution.n_s(), solution.n_theta());
    let u_max = solution.node_max();
    let threshold = u_max - collar.max(T::zero());
    let hot: Vec<bool> = solution.values().iter().map(|v| *v >= threshold).collect();
    let mut seen = vec![false; hot.len()];
    let mut components = Vec::new();
    for start in 0..hot.len() {
        if !hot[start] || seen[start] {
            continue;
        }
        let mut nodes = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k / n_t, k % n_t);
            nodes.push((i, j));
            for di in -1isize..=1 {
                let ii = i as isize + di;
                if ii < 0 || ii > n_s as isize {
                    continue;
                }
                for dj in -1isize..=1 {
                    let jj = (j as isize + dj).rem_euclid(n_t as isize) as usize;
                    let q = ii as usize * n_t + jj;
                    if hot[q] && !seen[q] {
                        seen[q] = true;
                        queue.push_back(q);
                    }
                }
            }
        }
        let mut cols = vec![false; n_t];
        nodes.iter().for_each(|&(_, j)| cols[j] = true);
        let encircles = cols.iter().all(|c| *c);
        components.push(MaxComponent { nodes, encircles });
    }
    MaxSet { u_max, threshold, components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::Nonlinearity;
    use crate::profiles::solve_annulus_profile;

    #[test]
    fn rotational_max_set_is_the_parallel() {
        let f = Nonlinearity::<f64>::affine(2.0, 1.0);
        let p = solve_annulus_profile(&f, 0.3, 1.0, 1e-12).unwrap();
        let sol = GridSolution::from_profile(&p, 40, 16).unwrap();
        let zero = max_set(&sol, 0.0);
        assert_eq!(zero.node_count() % 16, 0);
        let band = max_set(&sol, 1e-3);
        assert!(band.is_single_closed_curve());
        let target = 0.3f64.acos();
        let h = sol.s(1, 0) - sol.s(0, 0);
        for &(i, j) in &band.components[0].nodes {
            assert!((sol.s(i, j) - target).abs() < 3.0 * h);
        }
        // a single node when the ring is broken
        let mut v = sol.values().to_vec();
        let (i, j) = sol.argmax();
        v[i * 16 + j] += 1e-3;
        let bumped = GridSolution::from_values(sol.domain().clone(), f, v, 0, SolveRoute::Sampled).unwrap();
        let only = max_set(&bumped, 0.0);
        assert_eq!(only.node_count(), 1);
        assert!(!only.components[0].encircles);
    }
}
