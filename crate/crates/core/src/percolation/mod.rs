//! Bond percolation on balls of the Heisenberg Cayley graph and of `Z^d`,
//! oriented open clusters, and effective resistance to the boundary sphere.

mod flow;
mod lattice;
mod mask;
mod network;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use flow::{path_flow, path_flow_energy, FlowAssignment, PathEnergy, PathFlow};
pub use lattice::{edge_key, BoxEdge, Lattice, LatticeBox, Site, CUBIC_VERTEX_CAP};
pub use mask::{check_p, oriented_cluster, oriented_cluster_indices, percolate_box, SubgraphMask};
pub use network::{solve_dirichlet, DirichletSolution, Network, Resistance, DEFAULT_RESIDUAL};

/// The open edges of `mask` between vertices at distance `<= radius`, as
/// unit resistors with orientation ignored.
pub fn open_network(mask: &SubgraphMask, radius: u32) -> Network {
    let domain = &mask.domain;
    let mut net = Network::new(domain.len());
    for (e, edge) in domain.edges.iter().enumerate() {
        let (u, v) = (edge.from as usize, edge.to as usize);
        if mask.open[e] && domain.distance[u] <= radius && domain.distance[v] <= radius {
            net.add_edge(u, v, 1.0).expect("box indices are in range");
        }
    }
    net
}

/// Vertices of the box at distance exactly `radius` from its center.
pub fn shell(domain: &LatticeBox, radius: u32) -> Vec<usize> {
    (0..domain.len()).filter(|&v| domain.distance[v] == radius).collect()
}

/// Solves the Dirichlet problem between `source` and the sphere of radius
/// `sink_radius` around the box center, using only open edges inside that
/// sphere.
pub fn solve_to_shell(mask: &SubgraphMask, source: Site, sink_radius: u32) -> Result<DirichletSolution> {
    let domain = &mask.domain;
    if sink_radius > domain.radius {
        return Err(invalid(format!(
            "sink radius {sink_radius} exceeds the box radius {}",
            domain.radius
        )));
    }
    let s = domain.require(source)?;
    if domain.distance[s] >= sink_radius {
        return Err(invalid("source must lie strictly inside the sink sphere"));
    }
    solve_dirichlet(&open_network(mask, sink_radius), s, &shell(domain, sink_radius), DEFAULT_RESIDUAL)
}

/// Effective resistance between `source` and the sphere of radius
/// `sink_radius`; [`Resistance::Infinite`] if no open path joins them.
pub fn effective_resistance(mask: &SubgraphMask, source: Site, sink_radius: u32) -> Result<Resistance> {
    Ok(solve_to_shell(mask, source, sink_radius)?.resistance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceEntry {
    pub radius: u32,
    pub resistance: Resistance,
    /// Size of the origin's open cluster (orientation ignored) inside the
    /// sphere.
    pub cluster_size: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedProfile {
    pub seed: u64,
    pub entries: Vec<ResistanceEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEntry {
    pub radius: u32,
    /// Mean over the seeds with finite resistance.
    pub resistance: Option<f64>,
    pub finite_seeds: usize,
    pub mean_cluster_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResistanceProfile {
    pub lattice: Lattice,
    pub p: f64,
    pub box_size: usize,
    pub per_seed: Vec<SeedProfile>,
    pub mean: Vec<MeanEntry>,
}

impl ResistanceProfile {
    /// Consecutive differences of the seed-averaged resistance; `None` if some
    /// radius has no finite seed.
    pub fn increments(&self) -> Option<Vec<f64>> {
        let r: Option<Vec<f64>> = self.mean.iter().map(|m| m.resistance).collect();
        Some(r?.windows(2).map(|w| w[1] - w[0]).collect())
    }

    pub fn has_strictly_decreasing_increments(&self) -> bool {
        self.increments()
            .is_some_and(|inc| inc.windows(2).all(|w| w[1] < w[0]))
    }

    /// Consecutive differences of one seed's resistances; `None` if any is
    /// infinite.
    pub fn seed_increments(&self, seed_index: usize) -> Option<Vec<f64>> {
        let r: Option<Vec<f64>> = self.per_seed[seed_index]
            .entries
            .iter()
            .map(|e| e.resistance.value())
            .collect();
        Some(r?.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

/// Resistance from the origin to the sphere of each radius, for each seed,
/// on one box of the largest radius. Masks for different radii are
/// restrictions of the same percolation sample.
pub fn resistance_profile(lattice: Lattice, p: f64, radii: &[u32], seeds: &[u64]) -> Result<ResistanceProfile> {
    check_p(p)?;
    if radii.is_empty() || seeds.is_empty() {
        return Err(invalid("radii and seeds must be non-empty"));
    }
    if radii[0] == 0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must be positive and strictly increasing"));
    }
    let domain = Arc::new(LatticeBox::build(lattice, *radii.last().unwrap())?);
    let per_seed = seeds
        .par_iter()
        .map(|&seed| -> Result<SeedProfile> {
            let mask = SubgraphMask::percolate(domain.clone(), p, seed)?;
            let entries = radii
                .iter()
                .map(|&r| {
                    let sol = solve_to_shell(&mask, Site::ORIGIN, r)?;
                    Ok(ResistanceEntry {
                        radius: r,
                        resistance: sol.resistance,
                        cluster_size: sol.component_size,
                        iterations: sol.iterations,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SeedProfile { seed, entries })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = radii
        .iter()
        .enumerate()
        .map(|(i, &radius)| {
            let finite: Vec<f64> = per_seed
                .iter()
                .filter_map(|s| s.entries[i].resistance.value())
                .collect();
            MeanEntry {
                radius,
                resistance: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
                finite_seeds: finite.len(),
                mean_cluster_size: per_seed.iter().map(|s| s.entries[i].cluster_size as f64).sum::<f64>()
                    / per_seed.len() as f64,
            }
        })
        .collect();
    Ok(ResistanceProfile {
        lattice,
        p,
        box_size: domain.len(),
        per_seed,
        mean,
    })
}
