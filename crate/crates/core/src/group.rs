//! Arithmetic in the discrete Heisenberg group `H = <a, b | [a,b] central>`
//! and its Cayley graph with respect to the generators `a` and `b`.
//!
//! Every element has a unique normal form `a^n b^m c^k` with `c = [a, b]`,
//! so elements are stored as the lattice point `(n, m, k)`. The product is
//!
//! ```text
//! (n, m, k) · (n', m', k') = (n + n', m + m', k + k' - m·n')
//! ```
//!
//! which is the unique law for which right multiplication by `b` sends
//! `(x, y, z)` to `(x, y + 1, z)` and right multiplication by `a` sends it to
//! `(x + 1, y, z - y)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest radius accepted by [`ball`]; `|ball(64)|` is already tens of millions.
pub const DEFAULT_BALL_CAP: u32 = 64;

/// Normal-form coordinates of `a^n b^m c^k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub n: i64,
    pub m: i64,
    pub k: i64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement { n: 0, m: 0, k: 0 };

    pub const fn new(n: i64, m: i64, k: i64) -> Self {
        GroupElement { n, m, k }
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        multiply(*self, *other)
    }

    pub fn inverse(&self) -> Result<GroupElement> {
        inverse(*self)
    }

    pub fn apply(&self, s: Generator) -> Result<GroupElement> {
        apply_generator(*self, s)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.n, self.m, self.k)
    }
}

impl From<(i64, i64, i64)> for GroupElement {
    fn from((n, m, k): (i64, i64, i64)) -> Self {
        GroupElement { n, m, k }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    A,
    B,
    AInv,
    BInv,
}

impl Generator {
    pub const ALL: [Generator; 4] = [Generator::A, Generator::B, Generator::AInv, Generator::BInv];

    pub fn element(self) -> GroupElement {
        match self {
            Generator::A => GroupElement::new(1, 0, 0),
            Generator::B => GroupElement::new(0, 1, 0),
            Generator::AInv => GroupElement::new(-1, 0, 0),
            Generator::BInv => GroupElement::new(0, -1, 0),
        }
    }

    pub fn inverse(self) -> Generator {
        match self {
            Generator::A => Generator::AInv,
            Generator::B => Generator::BInv,
            Generator::AInv => Generator::A,
            Generator::BInv => Generator::B,
        }
    }
}

/// Label of a directed Cayley-graph edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeLabel {
    A,
    B,
}

impl EdgeLabel {
    pub fn generator(self) -> Generator {
        match self {
            EdgeLabel::A => Generator::A,
            EdgeLabel::B => Generator::B,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub from: GroupElement,
    pub to: GroupElement,
    pub label: EdgeLabel,
}

impl DirectedEdge {
    /// The edge leaving `from` with the given label.
    pub fn leaving(from: GroupElement, label: EdgeLabel) -> Result<DirectedEdge> {
        let to = apply_generator(from, label.generator())?;
        Ok(DirectedEdge { from, to, label })
    }
}

pub fn multiply(g: GroupElement, h: GroupElement) -> Result<GroupElement> {
    let n = g.n.checked_add(h.n).ok_or(Error::Overflow)?;
    let m = g.m.checked_add(h.m).ok_or(Error::Overflow)?;
    let cross = g.m.checked_mul(h.n).ok_or(Error::Overflow)?;
    let k = g
        .k
        .checked_add(h.k)
        .and_then(|s| s.checked_sub(cross))
        .ok_or(Error::Overflow)?;
    Ok(GroupElement { n, m, k })
}

pub fn inverse(g: GroupElement) -> Result<GroupElement> {
    let n = g.n.checked_neg().ok_or(Error::Overflow)?;
    let m = g.m.checked_neg().ok_or(Error::Overflow)?;
    let nm = g.n.checked_mul(g.m).ok_or(Error::Overflow)?;
    let k = g
        .k
        .checked_neg()
        .and_then(|s| s.checked_sub(nm))
        .ok_or(Error::Overflow)?;
    Ok(GroupElement { n, m, k })
}

/// Right multiplication by a generator, i.e. one step along the Cayley graph.
pub fn apply_generator(g: GroupElement, s: Generator) -> Result<GroupElement> {
    // Inlined forms of `multiply(g, s.element())`.
    let ovf = || Error::Overflow;
    Ok(match s {
        Generator::A => GroupElement::new(
            g.n.checked_add(1).ok_or_else(ovf)?,
            g.m,
            g.k.checked_sub(g.m).ok_or_else(ovf)?,
        ),
        Generator::AInv => GroupElement::new(
            g.n.checked_sub(1).ok_or_else(ovf)?,
            g.m,
            g.k.checked_add(g.m).ok_or_else(ovf)?,
        ),
        Generator::B => GroupElement::new(g.n, g.m.checked_add(1).ok_or_else(ovf)?, g.k),
        Generator::BInv => GroupElement::new(g.n, g.m.checked_sub(1).ok_or_else(ovf)?, g.k),
    })
}

/// Left-to-right product of a word, starting from the identity.
pub fn word_eval(word: &[Generator]) -> Result<GroupElement> {
    word.iter()
        .try_fold(GroupElement::IDENTITY, |g, &s| apply_generator(g, s))
}

/// Elements at word distance `<= radius` from the identity, with their
/// distances, in breadth-first order. All four generators are used, so
/// edge orientation is ignored.
pub fn ball_with_distances(radius: u32) -> Result<Vec<(GroupElement, u32)>> {
    ball_with_distances_capped(radius, DEFAULT_BALL_CAP)
}

pub fn ball_with_distances_capped(radius: u32, cap: u32) -> Result<Vec<(GroupElement, u32)>> {
    if radius > cap {
        return Err(Error::CapExceeded {
            what: "ball radius",
            requested: radius as u64,
            cap: cap as u64,
        });
    }
    let mut seen: HashMap<GroupElement, u32> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(GroupElement::IDENTITY, 0);
    queue.push_back(GroupElement::IDENTITY);
    while let Some(g) = queue.pop_front() {
        let d = seen[&g];
        order.push((g, d));
        if d == radius {
            continue;
        }
        for s in Generator::ALL {
            let h = apply_generator(g, s)?;
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(h) {
                e.insert(d + 1);
                queue.push_back(h);
            }
        }
    }
    Ok(order)
}

/// The ball of radius `radius` around the identity in the undirected Cayley graph.
pub fn ball(radius: u32) -> Result<Vec<GroupElement>> {
    Ok(ball_with_distances(radius)?
        .into_iter()
        .map(|(g, _)| g)
        .collect())
}

/// Sphere sizes `|S(0)|, ..., |S(radius)|`.
pub fn sphere_sizes(radius: u32) -> Result<Vec<u64>> {
    let mut sizes = vec![0u64; radius as usize + 1];
    for (_, d) in ball_with_distances(radius)? {
        sizes[d as usize] += 1;
    }
    Ok(sizes)
}

/// Cumulative ball sizes `|B(0)|, ..., |B(radius)|` from a single exploration.
pub fn ball_sizes(radius: u32) -> Result<Vec<u64>> {
    let mut acc = 0;
    Ok(sphere_sizes(radius)?
        .into_iter()
        .map(|s| {
            acc += s;
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    use Generator::*;

    fn g(n: i64, m: i64, k: i64) -> GroupElement {
        GroupElement::new(n, m, k)
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(multiply(g(0, 0, 0), g(5, -3, 2)).unwrap(), g(5, -3, 2));
        assert_eq!(multiply(g(1, 0, 0), g(0, 1, 0)).unwrap(), g(1, 1, 0));
        assert_eq!(multiply(g(0, 1, 0), g(1, 0, 0)).unwrap(), g(1, 1, -1));
    }

    #[test]
    fn commutators() {
        // [a,b] = a^-1 b^-1 a b = c
        assert_eq!(word_eval(&[AInv, BInv, A, B]).unwrap(), g(0, 0, 1));
        // a b a^-1 b^-1 is conjugate to it, and c is central.
        assert_eq!(word_eval(&[A, B, AInv, BInv]).unwrap(), g(0, 0, 1));
        let c = g(0, 0, 1);
        for s in [A, B] {
            let x = s.element();
            let lhs = multiply(x, c).unwrap();
            let rhs = multiply(c, x).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(g(0, 0, 0)).unwrap(), g(0, 0, 0));
        assert_eq!(inverse(g(1, 0, 0)).unwrap(), g(-1, 0, 0));
        assert_eq!(inverse(g(1, 1, 0)).unwrap(), g(-1, -1, -1));
        let x = g(1, 1, 0);
        assert_eq!(multiply(x, g(-1, -1, -1)).unwrap(), GroupElement::IDENTITY);
    }

    #[test]
    fn apply_generator_matches_edge_set() {
        assert_eq!(apply_generator(g(0, 0, 0), A).unwrap(), g(1, 0, 0));
        assert_eq!(apply_generator(g(1, 1, 0), A).unwrap(), g(2, 1, -1));
        assert_eq!(apply_generator(g(1, 1, 0), B).unwrap(), g(1, 2, 0));
        let e = DirectedEdge::leaving(g(3, -2, 7), EdgeLabel::A).unwrap();
        assert_eq!(e.to, g(4, -2, 9));
    }

    #[test]
    fn word_eval_examples() {
        assert_eq!(word_eval(&[]).unwrap(), GroupElement::IDENTITY);
        assert_eq!(word_eval(&[B, A]).unwrap(), g(1, 1, -1));
        assert_eq!(
            word_eval(&[B, A]).unwrap(),
            multiply(g(0, 1, 0), g(1, 0, 0)).unwrap()
        );
    }

    #[test]
    fn overflow_is_reported() {
        let big = g(i64::MAX, 0, 0);
        assert_eq!(multiply(big, g(1, 0, 0)), Err(Error::Overflow));
        assert_eq!(multiply(g(0, i64::MAX, 0), g(2, 0, 0)), Err(Error::Overflow));
        assert_eq!(inverse(g(i64::MIN, 0, 0)), Err(Error::Overflow));
        assert_eq!(apply_generator(g(0, 1, i64::MIN), A), Err(Error::Overflow));
    }

    /// Every word of length <= r, evaluated and deduplicated.
    fn enumerate_words(r: usize) -> HashSet<GroupElement> {
        let mut out = HashSet::new();
        let mut frontier = vec![Vec::<Generator>::new()];
        out.insert(GroupElement::IDENTITY);
        for _ in 0..r {
            let mut next = Vec::new();
            for w in &frontier {
                for s in Generator::ALL {
                    let mut w2 = w.clone();
                    w2.push(s);
                    out.insert(word_eval(&w2).unwrap());
                    next.push(w2);
                }
            }
            frontier = next;
        }
        out
    }

    #[test]
    fn ball_small_radii_match_word_enumeration() {
        assert_eq!(ball(0).unwrap(), vec![GroupElement::IDENTITY]);
        for r in 0..=5 {
            let bfs: HashSet<_> = ball(r).unwrap().into_iter().collect();
            assert_eq!(bfs, enumerate_words(r as usize), "radius {r}");
        }
        assert_eq!(ball(1).unwrap().len(), 5);
        assert_eq!(ball(2).unwrap().len(), 17);
    }

    #[test]
    fn ball_cap() {
        assert!(matches!(
            ball_with_distances_capped(10, 8),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn ball_is_inverse_symmetric() {
        let b: HashSet<_> = ball(7).unwrap().into_iter().collect();
        for x in &b {
            assert!(b.contains(&inverse(*x).unwrap()));
        }
    }

    #[test]
    fn edge_law_consistency_on_ball() {
        for x in ball(6).unwrap() {
            assert_eq!(apply_generator(x, A).unwrap(), multiply(x, g(1, 0, 0)).unwrap());
            assert_eq!(apply_generator(x, B).unwrap(), multiply(x, g(0, 1, 0)).unwrap());
            assert_eq!(apply_generator(x, AInv).unwrap(), multiply(x, g(-1, 0, 0)).unwrap());
            assert_eq!(apply_generator(x, BInv).unwrap(), multiply(x, g(0, -1, 0)).unwrap());
        }
    }

    fn elem() -> impl Strategy<Value = GroupElement> {
        (-1000i64..1000, -1000i64..1000, -100_000i64..100_000).prop_map(|(n, m, k)| g(n, m, k))
    }

    proptest! {
        #[test]
        fn associativity(x in elem(), y in elem(), z in elem()) {
            let l = multiply(multiply(x, y).unwrap(), z).unwrap();
            let r = multiply(x, multiply(y, z).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn inverse_is_two_sided(x in elem()) {
            let xi = inverse(x).unwrap();
            prop_assert_eq!(multiply(x, xi).unwrap(), GroupElement::IDENTITY);
            prop_assert_eq!(multiply(xi, x).unwrap(), GroupElement::IDENTITY);
        }

        #[test]
        fn generator_steps_are_right_multiplication(x in elem(), i in 0usize..4) {
            let s = Generator::ALL[i];
            prop_assert_eq!(apply_generator(x, s).unwrap(), multiply(x, s.element()).unwrap());
            prop_assert_eq!(apply_generator(apply_generator(x, s).unwrap(), s.inverse()).unwrap(), x);
        }
    }
}
