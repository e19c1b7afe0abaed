//! Resistor networks and the Dirichlet problem.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::pairwise_sum;

/// Default relative residual for the conjugate gradient solve.
pub const DEFAULT_RESIDUAL: f64 = 1e-8;

/// Undirected network with positive edge conductances.
#[derive(Clone, Debug, Default)]
pub struct Network {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network { n, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Adds a resistor of conductance `c` between `u` and `v`. Self-loops
    /// carry no current and are dropped.
    pub fn add_edge(&mut self, u: usize, v: usize, c: f64) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::OutOfRange {
                index: u.max(v),
                len: self.n.saturating_sub(1),
            });
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("conductance must be positive and finite, got {c}")));
        }
        if u != v {
            self.edges.push((u, v, c));
        }
        Ok(())
    }

    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v, c) in &self.edges {
            adj[u].push((v, c));
            adj[v].push((u, c));
        }
        adj
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Resistance {
    Finite(f64),
    /// The source is not connected to any sink.
    Infinite,
}

impl Resistance {
    pub fn value(self) -> Option<f64> {
        match self {
            Resistance::Finite(r) => Some(r),
            Resistance::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Resistance::Finite(_))
    }

    /// `f64::INFINITY` for a disconnected source.
    pub fn as_f64(self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub resistance: Resistance,
    /// Potential with the source at 1 and the sinks at 0; vertices outside the
    /// source's component are 0.
    pub potential: Vec<f64>,
    /// Net current out of the source.
    pub source_current: f64,
    /// Vertices in the source's connected component.
    pub component_size: usize,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves for the potential that is 1 at `source`, 0 on `sinks` and harmonic
/// elsewhere on the source's component.
///
/// The resistance is reported as `1 / E(φ)` with `E` the Dirichlet energy of
/// the computed potential. Any admissible potential has energy at least the
/// effective conductance, and the error is quadratic in the potential's error.
pub fn solve_dirichlet(net: &Network, source: usize, sinks: &[usize], tolerance: f64) -> Result<DirichletSolution> {
    let n = net.len();
    if source >= n {
        return Err(Error::OutOfRange { index: source, len: n.saturating_sub(1) });
    }
    let mut is_sink = vec![false; n];
    for &s in sinks {
        if s >= n {
            return Err(Error::OutOfRange { index: s, len: n - 1 });
        }
        is_sink[s] = true;
    }
    if is_sink[source] {
        return Err(invalid("source is also a sink"));
    }
    let adj = net.adjacency();

    let mut in_component = vec![false; n];
    in_component[source] = true;
    let mut queue = VecDeque::from([source]);
    let mut component_size = 0;
    let mut reaches_sink = false;
    while let Some(u) = queue.pop_front() {
        component_size += 1;
        reaches_sink |= is_sink[u];
        for &(v, _) in &adj[u] {
            if !in_component[v] {
                in_component[v] = true;
                queue.push_back(v);
            }
        }
    }
    let mut potential = vec![0.0; n];
    potential[source] = 1.0;
    if !reaches_sink {
        return Ok(DirichletSolution {
            resistance: Resistance::Infinite,
            potential,
            source_current: 0.0,
            component_size,
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    // Unknowns are the interior vertices of the component.
    let mut slot = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if in_component[v] && v != source && !is_sink[v] {
            slot[v] = interior.len();
            interior.push(v);
        }
    }
    let system = LaplacianBlock::new(&adj, &interior, &slot, source);
    let cap = ((50.0 * (component_size as f64).sqrt()).ceil() as usize).max(1);
    let (x, iterations, relative_residual) = system.solve(tolerance, cap)?;
    for (i, &v) in interior.iter().enumerate() {
        potential[v] = x[i];
    }

    let energies: Vec<f64> = net
        .edges
        .par_iter()
        .map(|&(u, v, c)| {
            if in_component[u] {
                c * (potential[u] - potential[v]).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let energy = pairwise_sum(&energies);
    let source_current: f64 = adj[source].iter().map(|&(v, c)| c * (1.0 - potential[v])).sum();
    Ok(DirichletSolution {
        resistance: Resistance::Finite(1.0 / energy),
        potential,
        source_current,
        component_size,
        iterations,
        relative_residual,
    })
}

/// The graph Laplacian restricted to interior rows and columns, in CSR form,
/// with the right-hand side contributed by the unit-potential source.
struct LaplacianBlock {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
    rhs: Vec<f64>,
}

impl LaplacianBlock {
    fn new(adj: &[Vec<(usize, f64)>], interior: &[usize], slot: &[usize], source: usize) -> Self {
        let mut row_start = Vec::with_capacity(interior.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(interior.len());
        let mut rhs = Vec::with_capacity(interior.len());
        for &v in interior {
            row_start.push(cols.len());
            let (mut d, mut b) = (0.0, 0.0);
            for &(w, c) in &adj[v] {
                d += c;
                if w == source {
                    b += c;
                } else if slot[w] != usize::MAX {
                    cols.push(slot[w]);
                    vals.push(-c);
                }
            }
            diag.push(d);
            rhs.push(b);
        }
        row_start.push(cols.len());
        LaplacianBlock {
            row_start,
            cols,
            vals,
            diag,
            rhs,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut s = self.diag[i] * x[i];
            for j in self.row_start[i]..self.row_start[i + 1] {
                s += self.vals[j] * x[self.cols[j]];
            }
            *o = s;
        });
    }

    /// Jacobi-preconditioned conjugate gradients from `x = 0`.
    fn solve(&self, tolerance: f64, max_iterations: usize) -> Result<(Vec<f64>, usize, f64)> {
        let n = self.rhs.len();
        let mut x = vec![0.0; n];
        let b_norm = dot(&self.rhs, &self.rhs).sqrt();
        if b_norm == 0.0 {
            return Ok((x, 0, 0.0));
        }
        let mut r = self.rhs.clone();
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut residual = 1.0;
        for it in 1..=max_iterations {
            self.apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
            r.par_iter_mut().zip(&ap).for_each(|(r, ap)| *r -= alpha * ap);
            residual = dot(&r, &r).sqrt() / b_norm;
            if residual <= tolerance {
                return Ok((x, it, residual));
            }
            z.par_iter_mut()
                .zip(&r)
                .zip(&self.diag)
                .for_each(|((z, r), d)| *z = r / d);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        }
        Err(Error::SolverDidNotConverge {
            iterations: max_iterations,
            residual,
        })
    }
}

/// Dot product with a reduction order fixed by the vector length alone.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
        .collect();
    pairwise_sum(&partial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resistance(net: &Network, s: usize, t: &[usize]) -> f64 {
        solve_dirichlet(net, s, t, 1e-12).unwrap().resistance.value().unwrap()
    }

    #[test]
    fn series_and_parallel() {
        let mut single = Network::new(2);
        single.add_edge(0, 1, 1.0).unwrap();
        assert!((resistance(&single, 0, &[1]) - 1.0).abs() < 1e-12);

        let mut series = Network::new(3);
        series.add_edge(0, 1, 1.0).unwrap();
        series.add_edge(1, 2, 1.0).unwrap();
        assert!((resistance(&series, 0, &[2]) - 2.0).abs() < 1e-8);

        let mut parallel = Network::new(2);
        parallel.add_edge(0, 1, 1.0).unwrap();
        parallel.add_edge(0, 1, 1.0).unwrap();
        assert!((resistance(&parallel, 0, &[1]) - 0.5).abs() < 1e-12);

        // Two disjoint two-edge routes, then a third edge in series: 1 + 1.
        let mut mixed = Network::new(5);
        for (u, v) in [(0, 1), (1, 3), (0, 2), (2, 3), (3, 4)] {
            mixed.add_edge(u, v, 1.0).unwrap();
        }
        assert!((resistance(&mixed, 0, &[4]) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn wheatstone_bridge() {
        let mut net = Network::new(4);
        for (u, v, c) in [(0, 1, 1.0), (0, 2, 2.0), (1, 3, 2.0), (2, 3, 4.0), (1, 2, 3.0)] {
            net.add_edge(u, v, c).unwrap();
        }
        // Kirchhoff at nodes 1, 2: (1+2+3)φ1 - 3φ2 = 1, -3φ1 + (2+4+3)φ2 = 2.
        let det = 6.0 * 9.0 - 9.0;
        let phi1 = (1.0 * 9.0 + 3.0 * 2.0) / det;
        let phi2 = (6.0 * 2.0 + 3.0 * 1.0) / det;
        let current = 1.0 * (1.0 - phi1) + 2.0 * (1.0 - phi2);
        assert!((resistance(&net, 0, &[3]) - 1.0 / current).abs() < 1e-10);
        let sol = solve_dirichlet(&net, 0, &[3], 1e-12).unwrap();
        assert!((sol.source_current - current).abs() < 1e-9);
    }

    #[test]
    fn multiple_sinks_and_current() {
        let mut star = Network::new(4);
        for v in 1..4 {
            star.add_edge(0, v, 1.0).unwrap();
        }
        let sol = solve_dirichlet(&star, 0, &[1, 2, 3], 1e-10).unwrap();
        assert!((sol.resistance.as_f64() - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.source_current - 3.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_is_infinite() {
        let mut net = Network::new(4);
        net.add_edge(0, 1, 1.0).unwrap();
        net.add_edge(2, 3, 1.0).unwrap();
        let sol = solve_dirichlet(&net, 0, &[3], 1e-8).unwrap();
        assert_eq!(sol.resistance, Resistance::Infinite);
        assert_eq!(sol.component_size, 2);
        assert!(solve_dirichlet(&net, 0, &[0], 1e-8).is_err());
        assert!(net.add_edge(0, 9, 1.0).is_err());
        assert!(net.add_edge(0, 1, 0.0).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        // A long path needs about n iterations, more than 50·sqrt(n) once
        // n > 2500.
        let n = 4000;
        let mut path = Network::new(n);
        for v in 0..n - 1 {
            path.add_edge(v, v + 1, 1.0).unwrap();
        }
        let res = solve_dirichlet(&path, 0, &[n - 1], 1e-12);
        assert!(matches!(res, Err(Error::SolverDidNotConverge { .. })));
    }
}
