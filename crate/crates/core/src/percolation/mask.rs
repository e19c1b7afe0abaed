use std::collections::VecDeque;
use std::sync::Arc;

use rayon::prelude::*;

use super::lattice::{edge_key, Lattice, LatticeBox, Site};
use crate::error::{invalid, Result};
use crate::rng::keyed_uniform;

/// Bond percolation on a [`LatticeBox`].
///
/// Edge `e` is open iff `U_e < p`, where `U_e` depends only on the seed and
/// the edge's endpoint and label. Masks with the same seed are therefore
/// nested in `p` and agree on the overlap of boxes of different radii.
#[derive(Clone, Debug)]
pub struct SubgraphMask {
    pub domain: Arc<LatticeBox>,
    pub p: f64,
    pub seed: u64,
    pub open: Vec<bool>,
}

pub fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("p must lie in (0, 1], got {p}")))
    }
}

/// Percolation on the radius-`radius` box of `lattice`.
pub fn percolate_box(lattice: Lattice, radius: u32, p: f64, seed: u64) -> Result<SubgraphMask> {
    check_p(p)?;
    SubgraphMask::percolate(Arc::new(LatticeBox::build(lattice, radius)?), p, seed)
}

impl SubgraphMask {
    pub fn percolate(domain: Arc<LatticeBox>, p: f64, seed: u64) -> Result<SubgraphMask> {
        check_p(p)?;
        let open = domain
            .edges
            .par_iter()
            .map(|e| keyed_uniform(seed, edge_key(domain.sites[e.from as usize], e.label as usize)) < p)
            .collect();
        Ok(SubgraphMask {
            domain,
            p,
            seed,
            open,
        })
    }

    pub fn all_open(domain: Arc<LatticeBox>) -> SubgraphMask {
        let open = vec![true; domain.edges.len()];
        SubgraphMask {
            domain,
            p: 1.0,
            seed: 0,
            open,
        }
    }

    pub fn all_closed(domain: Arc<LatticeBox>) -> SubgraphMask {
        let open = vec![false; domain.edges.len()];
        SubgraphMask {
            domain,
            p: 0.0,
            seed: 0,
            open,
        }
    }

    pub fn radius(&self) -> u32 {
        self.domain.radius
    }

    /// Opens or closes the edge with `label` leaving `from`.
    pub fn set_open(&mut self, from: Site, label: usize, open: bool) -> Result<()> {
        let e = self
            .domain
            .edge_index(from, label)
            .ok_or_else(|| invalid(format!("no edge with label {label} leaves {from} inside the box")))?;
        self.open[e] = open;
        Ok(())
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    pub fn open_fraction(&self) -> f64 {
        self.open_count() as f64 / self.open.len().max(1) as f64
    }
}

/// Vertices reachable from `v` along open edges followed in their own
/// direction, as box indices in increasing order.
pub fn oriented_cluster_indices(mask: &SubgraphMask, v: Site) -> Result<Vec<usize>> {
    let domain = &mask.domain;
    let start = domain.require(v)?;
    let mut seen = vec![false; domain.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for e in domain.out_edges(u) {
            let w = domain.edges[e].to as usize;
            if mask.open[e] && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok((0..domain.len()).filter(|&i| seen[i]).collect())
}

/// The oriented open cluster of `v` inside the box.
pub fn oriented_cluster(mask: &SubgraphMask, v: Site) -> Result<Vec<Site>> {
    Ok(oriented_cluster_indices(mask, v)?
        .into_iter()
        .map(|i| mask.domain.sites[i])
        .collect())
}
