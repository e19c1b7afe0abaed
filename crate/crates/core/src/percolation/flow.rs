use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{LatticeBox, Site};
use super::mask::{check_p, percolate_box, SubgraphMask};
use crate::error::{invalid, Result};
use crate::quadrature::pairwise_sum;
use crate::rng::{self, BitSource};

/// A flow on the edges of a box. `flow[e]` is the amount sent along edge `e`
/// in its own direction; the reverse direction carries `-flow[e]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowAssignment {
    pub flow: Vec<f64>,
    pub source: usize,
    pub sinks: Vec<usize>,
}

impl FlowAssignment {
    /// `Σ_e flow(e)²`, the energy with unit resistors.
    pub fn energy(&self) -> f64 {
        let squares: Vec<f64> = self.flow.iter().map(|f| f * f).collect();
        pairwise_sum(&squares)
    }

    /// Net flow out of each vertex.
    pub fn divergence(&self, domain: &LatticeBox) -> Vec<f64> {
        let mut div = vec![0.0; domain.len()];
        for (e, edge) in domain.edges.iter().enumerate() {
            div[edge.from as usize] += self.flow[e];
            div[edge.to as usize] -= self.flow[e];
        }
        div
    }

    /// Largest `|divergence|` away from the source and the sinks.
    pub fn max_interior_divergence(&self, domain: &LatticeBox) -> f64 {
        let mut terminal = vec![false; domain.len()];
        terminal[self.source] = true;
        for &s in &self.sinks {
            terminal[s] = true;
        }
        self.divergence(domain)
            .into_iter()
            .enumerate()
            .filter(|&(v, _)| !terminal[v])
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max)
    }

    pub fn source_outflow(&self, domain: &LatticeBox) -> f64 {
        self.divergence(domain)[self.source]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFlow {
    pub radius: u32,
    pub sampled: u64,
    pub surviving: u64,
    /// Average of the unit flows along the surviving paths; `None` when no
    /// path survives.
    pub flow: Option<FlowAssignment>,
}

impl PathFlow {
    pub fn energy(&self) -> Option<f64> {
        self.flow.as_ref().map(FlowAssignment::energy)
    }
}

/// Samples `num_paths` uniform oriented paths of length `2R` from the origin
/// (one stream per block of paths), keeps those whose first `R` edges are all
/// open, and averages their unit flows to the shell at distance `R`.
///
/// Every oriented step moves one unit further from the origin in both
/// lattices, so step `R` is exactly where a path meets the shell.
pub fn path_flow(mask: &SubgraphMask, num_paths: u64, seed: u64) -> Result<PathFlow> {
    if num_paths == 0 {
        return Err(invalid("num_paths must be at least 1"));
    }
    let domain = &mask.domain;
    let lattice = domain.lattice;
    let radius = domain.radius;
    let labels = lattice.labels() as u32;
    let source = domain.require(Site::ORIGIN)?;
    let (counts, surviving) = (0..rng::blocks(num_paths))
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b);
            let mut src = BitSource::new(&mut stream);
            let mut counts = vec![0u32; domain.edges.len()];
            let mut surviving = 0u64;
            let mut path = Vec::with_capacity(radius as usize);
            for _ in rng::block_range(b, num_paths) {
                let word: Vec<u32> = (0..2 * radius).map(|_| src.below(labels)).collect();
                path.clear();
                let mut v = source;
                let mut open = true;
                for &label in &word[..radius as usize] {
                    let e = domain
                        .out_edges(v)
                        .find(|&e| domain.edges[e].label as u32 == label)
                        .expect("oriented steps stay inside the box before the shell");
                    if !mask.open[e] {
                        open = false;
                        break;
                    }
                    path.push(e);
                    v = domain.edges[e].to as usize;
                }
                if open {
                    surviving += 1;
                    for &e in &path {
                        counts[e] += 1;
                    }
                }
            }
            (counts, surviving)
        })
        .reduce(
            || (vec![0u32; domain.edges.len()], 0),
            |mut a, b| {
                a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
                (a.0, a.1 + b.1)
            },
        );
    let flow = (surviving > 0).then(|| FlowAssignment {
        flow: counts.iter().map(|&c| c as f64 / surviving as f64).collect(),
        source,
        sinks: (0..domain.len()).filter(|&v| domain.distance[v] == radius).collect(),
    });
    Ok(PathFlow {
        radius,
        sampled: num_paths,
        surviving,
        flow,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathEnergy {
    /// `None` when no path survives.
    pub energy: Option<f64>,
    pub surviving: u64,
}

/// Energy of the surviving-path flow on a fresh Heisenberg percolation box of
/// radius `radius`.
pub fn path_flow_energy(p: f64, num_paths: u64, radius: u32, seed: u64) -> Result<PathEnergy> {
    check_p(p)?;
    let mask = percolate_box(super::Lattice::Heisenberg, radius, p, seed)?;
    let pf = path_flow(&mask, num_paths, seed)?;
    Ok(PathEnergy {
        energy: pf.energy(),
        surviving: pf.surviving,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::Lattice;

    #[test]
    fn single_path_energy_is_its_length() {
        for r in [1, 4, 8] {
            let e = path_flow_energy(1.0, 1, r, 9).unwrap();
            assert_eq!(e.surviving, 1);
            assert!((e.energy.unwrap() - r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn averaging_lowers_energy() {
        let many = path_flow_energy(1.0, 20_000, 8, 1).unwrap().energy.unwrap();
        assert!(many < 8.0);
        // The first step splits two ways, the second four ways, and no later
        // step puts more than half the flow on one edge.
        assert!(many < 0.5 + 0.25 + 6.0 * 0.5);
    }

    #[test]
    fn path_flow_is_a_unit_flow() {
        let mask = percolate_box(Lattice::Heisenberg, 6, 0.8, 5).unwrap();
        let pf = path_flow(&mask, 5000, 5).unwrap();
        assert!(pf.surviving > 0 && pf.surviving < 5000);
        let flow = pf.flow.unwrap();
        assert!(flow.max_interior_divergence(&mask.domain) <= 1e-9);
        assert!((flow.source_outflow(&mask.domain) - 1.0).abs() <= 1e-9);
        // Only open edges carry flow.
        assert!(flow.flow.iter().zip(&mask.open).all(|(&f, &o)| o || f == 0.0));
    }

    #[test]
    fn no_survivors_is_reported() {
        let domain = std::sync::Arc::new(crate::percolation::LatticeBox::build(Lattice::Heisenberg, 3).unwrap());
        let mask = SubgraphMask::all_closed(domain);
        let pf = path_flow(&mask, 100, 0).unwrap();
        assert_eq!(pf.surviving, 0);
        assert_eq!(pf.energy(), None);
        assert!(path_flow(&mask, 0, 0).is_err());
        assert!(path_flow_energy(0.0, 10, 3, 0).is_err());
    }

    #[test]
    fn cubic_paths_reach_the_shell() {
        let mask = percolate_box(Lattice::Cubic(3), 5, 1.0, 0).unwrap();
        let pf = path_flow(&mask, 3000, 2).unwrap();
        let flow = pf.flow.unwrap();
        assert!(flow.max_interior_divergence(&mask.domain) <= 1e-9);
    }
}
