use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{apply_generator, ball_with_distances, Generator, GroupElement};
use crate::rng::mix64;

/// Largest number of vertices in a `Z^d` box.
pub const CUBIC_VERTEX_CAP: u128 = 8_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lattice {
    /// Cayley graph of the Heisenberg group with generators `a, b`.
    Heisenberg,
    /// `Z^d` for `1 <= d <= 4`, oriented along the coordinate axes.
    Cubic(usize),
}

impl Lattice {
    pub fn validate(self) -> Result<Self> {
        match self {
            Lattice::Cubic(d) if !(1..=4).contains(&d) => {
                Err(invalid(format!("cubic lattice dimension must be in 1..=4, got {d}")))
            }
            _ => Ok(self),
        }
    }

    /// Number of edge labels (positive generators).
    pub fn labels(self) -> usize {
        match self {
            Lattice::Heisenberg => 2,
            Lattice::Cubic(d) => d,
        }
    }

    /// Endpoint of the edge with `label` leaving `site`.
    pub fn step(self, site: Site, label: usize) -> Result<Site> {
        match self {
            Lattice::Heisenberg => {
                let s = if label == 0 { Generator::A } else { Generator::B };
                Ok(apply_generator(site.to_element(), s)?.into())
            }
            Lattice::Cubic(_) => {
                let mut c = site.0;
                c[label] = c[label].checked_add(1).ok_or(Error::Overflow)?;
                Ok(Site(c))
            }
        }
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lattice::Heisenberg => write!(f, "heisenberg"),
            Lattice::Cubic(d) => write!(f, "z{d}"),
        }
    }
}

impl std::str::FromStr for Lattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heisenberg" | "gh" => Ok(Lattice::Heisenberg),
            _ => s
                .strip_prefix('z')
                .and_then(|d| d.parse().ok())
                .map(Lattice::Cubic)
                .ok_or_else(|| invalid(format!("unknown lattice {s:?}")))?
                .validate(),
        }
    }
}

/// A vertex of either lattice. Heisenberg elements use the first three
/// coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site(pub [i64; 4]);

impl Site {
    pub const ORIGIN: Site = Site([0; 4]);

    pub fn cubic(coords: &[i64]) -> Site {
        let mut c = [0; 4];
        c[..coords.len()].copy_from_slice(coords);
        Site(c)
    }

    pub fn to_element(self) -> GroupElement {
        GroupElement::new(self.0[0], self.0[1], self.0[2])
    }

    fn l1(self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }
}

impl From<GroupElement> for Site {
    fn from(g: GroupElement) -> Self {
        Site([g.n, g.m, g.k, 0])
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a},{b},{c},{d})")
    }
}

/// Stable 64-bit key of the edge with `label` leaving `site`.
pub fn edge_key(site: Site, label: usize) -> u64 {
    site.0
        .iter()
        .fold(mix64(label as u64 + 1), |h, &c| mix64(h ^ c as u64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxEdge {
    pub from: u32,
    pub to: u32,
    pub label: u8,
}

/// The ball of radius `radius` around the origin (word metric on the
/// Heisenberg group, `l1` metric on `Z^d`) with every labelled edge between
/// two of its vertices.
#[derive(Clone, Debug)]
pub struct LatticeBox {
    pub lattice: Lattice,
    pub radius: u32,
    /// Sorted by distance, then by coordinates.
    pub sites: Vec<Site>,
    pub distance: Vec<u32>,
    /// Sorted by `from`, then by `label`.
    pub edges: Vec<BoxEdge>,
    index: HashMap<Site, u32>,
    first_edge: Vec<u32>,
}

impl LatticeBox {
    pub fn build(lattice: Lattice, radius: u32) -> Result<LatticeBox> {
        let lattice = lattice.validate()?;
        let mut members: Vec<(u32, Site)> = match lattice {
            Lattice::Heisenberg => ball_with_distances(radius)?
                .into_iter()
                .map(|(g, d)| (d, g.into()))
                .collect(),
            Lattice::Cubic(d) => cubic_ball(d, radius)?,
        };
        members.sort_unstable();
        let index: HashMap<Site, u32> = members
            .iter()
            .enumerate()
            .map(|(i, &(_, s))| (s, i as u32))
            .collect();
        let mut edges = Vec::new();
        let mut first_edge = Vec::with_capacity(members.len() + 1);
        for (i, &(_, s)) in members.iter().enumerate() {
            first_edge.push(edges.len() as u32);
            for label in 0..lattice.labels() {
                if let Some(&j) = index.get(&lattice.step(s, label)?) {
                    edges.push(BoxEdge {
                        from: i as u32,
                        to: j,
                        label: label as u8,
                    });
                }
            }
        }
        first_edge.push(edges.len() as u32);
        Ok(LatticeBox {
            lattice,
            radius,
            distance: members.iter().map(|m| m.0).collect(),
            sites: members.into_iter().map(|m| m.1).collect(),
            edges,
            index,
            first_edge,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn index_of(&self, site: Site) -> Option<usize> {
        self.index.get(&site).map(|&i| i as usize)
    }

    pub fn require(&self, site: Site) -> Result<usize> {
        self.index_of(site)
            .ok_or_else(|| Error::NotInBox(site.to_string()))
    }

    /// Edges leaving vertex `v`.
    pub fn out_edges(&self, v: usize) -> std::ops::Range<usize> {
        self.first_edge[v] as usize..self.first_edge[v + 1] as usize
    }

    pub fn edge_index(&self, from: Site, label: usize) -> Option<usize> {
        let v = self.index_of(from)?;
        self.out_edges(v).find(|&e| self.edges[e].label as usize == label)
    }
}

fn cubic_ball(d: usize, radius: u32) -> Result<Vec<(u32, Site)>> {
    // |{x in Z^d : |x|_1 <= R}| = sum_j 2^j C(d,j) C(R,j)
    let r = radius as u128;
    let mut size = 0u128;
    let (mut cd, mut cr) = (1u128, 1u128);
    for j in 0..=d as u128 {
        size += (1 << j) * cd * cr;
        cd = cd * (d as u128 - j) / (j + 1);
        cr = if j < r { cr * (r - j) / (j + 1) } else { 0 };
    }
    if size > CUBIC_VERTEX_CAP {
        return Err(Error::CapExceeded {
            what: "box vertex count",
            requested: size as u64,
            cap: CUBIC_VERTEX_CAP as u64,
        });
    }
    let r = radius as i64;
    let mut out = Vec::with_capacity(size as usize);
    let mut c = [0i64; 4];
    fn rec(d: usize, i: usize, left: i64, c: &mut [i64; 4], out: &mut Vec<(u32, Site)>) {
        if i == d {
            let s = Site(*c);
            out.push((s.l1() as u32, s));
            return;
        }
        for x in -left..=left {
            c[i] = x;
            rec(d, i + 1, left - x.abs(), c, out);
        }
        c[i] = 0;
    }
    rec(d, 0, r, &mut c, &mut out);
    debug_assert_eq!(out.len() as u128, size);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::ball_sizes;

    #[test]
    fn heisenberg_box_matches_ball() {
        let b = LatticeBox::build(Lattice::Heisenberg, 3).unwrap();
        assert_eq!(b.len() as u64, *ball_sizes(3).unwrap().last().unwrap());
        assert_eq!(b.sites[0], Site::ORIGIN);
        assert!(b.distance.windows(2).all(|w| w[0] <= w[1]));
        for e in &b.edges {
            let from = b.sites[e.from as usize];
            assert_eq!(Lattice::Heisenberg.step(from, e.label as usize).unwrap(), b.sites[e.to as usize]);
            assert!(b.distance[e.from as usize].abs_diff(b.distance[e.to as usize]) == 1);
        }
        // The origin has both outgoing edges and both incoming ones.
        assert_eq!(b.out_edges(0).len(), 2);
        assert_eq!(b.edges.iter().filter(|e| e.to == 0).count(), 2);
    }

    #[test]
    fn cubic_box_sizes() {
        let sizes = [(1, 5, 11), (2, 3, 25), (3, 2, 25), (4, 2, 41)];
        for (d, r, n) in sizes {
            let b = LatticeBox::build(Lattice::Cubic(d), r).unwrap();
            assert_eq!(b.len(), n, "d={d} r={r}");
        }
        let b = LatticeBox::build(Lattice::Cubic(2), 2).unwrap();
        // Edges of the l1 ball of radius 2 in Z^2.
        assert_eq!(b.edges.len(), 16);
        assert!(LatticeBox::build(Lattice::Cubic(4), 200).is_err());
        assert!(LatticeBox::build(Lattice::Cubic(5), 1).is_err());
    }

    #[test]
    fn edge_lookup() {
        let b = LatticeBox::build(Lattice::Heisenberg, 2).unwrap();
        let e = b.edge_index(Site::ORIGIN, 1).unwrap();
        assert_eq!(b.sites[b.edges[e].to as usize], Site([0, 1, 0, 0]));
        assert_eq!(b.edge_index(Site([9, 9, 9, 0]), 0), None);
        assert!(b.require(Site([9, 9, 9, 0])).is_err());
    }

    #[test]
    fn lattice_names_round_trip() {
        for l in [Lattice::Heisenberg, Lattice::Cubic(2), Lattice::Cubic(4)] {
            assert_eq!(l.to_string().parse::<Lattice>().unwrap(), l);
        }
        assert!("z7".parse::<Lattice>().is_err());
        assert!("torus".parse::<Lattice>().is_err());
    }

    #[test]
    fn edge_keys_are_distinct_on_a_box() {
        let b = LatticeBox::build(Lattice::Heisenberg, 6).unwrap();
        let mut keys: Vec<u64> = b
            .edges
            .iter()
            .map(|e| edge_key(b.sites[e.from as usize], e.label as usize))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), b.edges.len());
    }
}
