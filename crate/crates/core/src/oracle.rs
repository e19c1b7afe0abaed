//! Exact law of `(S, W) = (Σ_{j<k} α_j, Σ_{j<k} j·α_j)` for `k` fair bits.
//!
//! The endpoint of an oriented walk is a function of `(S, W)` and vice versa,
//! so every collision and matching probability of two independent walks is a
//! sum of squares over this table.
//!
//! The table is dense, indexed by `(s, w)` with `w < k(k-1)/2 + 1`, and is
//! advanced one bit at a time in place:
//! `mass'(s, w) = (mass(s, w) + mass(s-1, w-j)) / 2` for bit index `j`,
//! processing rows in decreasing `s`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default cap on `k`; the table at the cap needs about 540 MB.
pub const DEFAULT_TABLE_CAP: usize = 512;

/// Environment variable that overrides [`DEFAULT_TABLE_CAP`].
pub const TABLE_CAP_ENV: &str = "HEISLAB_DP_CAP";

/// The cap in effect: [`TABLE_CAP_ENV`] if set and parseable, else the default.
pub fn table_cap() -> usize {
    std::env::var(TABLE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_TABLE_CAP)
}

fn max_weight(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Joint law of the number of ones and the weighted sum.
#[derive(Clone, Debug)]
pub struct CountWeightTable {
    k: usize,
    capacity: usize,
    stride: usize,
    mass: Vec<f64>,
}

impl CountWeightTable {
    /// The law for `k = 0`, with storage for growth up to `capacity` bits.
    pub fn with_capacity(capacity: usize) -> Result<Self> {
        let cap = table_cap();
        if capacity > cap {
            return Err(Error::CapExceeded {
                what: "table length k",
                requested: capacity as u64,
                cap: cap as u64,
            });
        }
        let stride = max_weight(capacity) + 1;
        let mut mass = vec![0.0; (capacity + 1) * stride];
        mass[0] = 1.0;
        Ok(CountWeightTable {
            k: 0,
            capacity,
            stride,
            mass,
        })
    }

    /// Builds the table for `k` bits, `1 <= k <= table_cap()`.
    pub fn build(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("table length k must be at least 1"));
        }
        let mut t = Self::with_capacity(k)?;
        while t.k < k {
            t.advance();
        }
        Ok(t)
    }

    /// Calls `f` with the tables for `k = 1, ..., k_max` in turn, reusing one buffer.
    pub fn sweep<F: FnMut(&CountWeightTable)>(k_max: usize, mut f: F) -> Result<()> {
        let mut t = Self::with_capacity(k_max)?;
        while t.k < k_max {
            t.advance();
            f(&t);
        }
        Ok(())
    }

    /// Appends one fair bit with index `k`.
    ///
    /// Panics if the table is already at capacity.
    pub fn advance(&mut self) {
        assert!(self.k < self.capacity, "table is at capacity");
        let j = self.k;
        let k1 = self.k + 1;
        let stride = self.stride;
        for s in (0..=k1).rev() {
            let (lo, hi) = weight_band(k1, s);
            if s == 0 {
                self.mass[0] *= 0.5;
                continue;
            }
            let (prev, cur) = self.mass.split_at_mut(s * stride);
            let prev = &prev[(s - 1) * stride..];
            let cur = &mut cur[..stride];
            // Entries above the new band were zero already; only the band changes.
            for w in lo..=hi {
                let from_one = if w >= j { prev[w - j] } else { 0.0 };
                cur[w] = 0.5 * (cur[w] + from_one);
            }
        }
        self.k = k1;
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_weight(&self) -> usize {
        max_weight(self.k)
    }

    pub fn mass(&self, s: usize, w: usize) -> f64 {
        if s > self.k || w > self.max_weight() {
            return 0.0;
        }
        self.mass[s * self.stride + w]
    }

    fn row(&self, s: usize) -> &[f64] {
        let base = s * self.stride;
        &self.mass[base..base + self.max_weight() + 1]
    }

    pub fn total_mass(&self) -> f64 {
        (0..=self.k).map(|s| self.row(s).iter().sum::<f64>()).sum()
    }

    /// `P[S = s]` for `s = 0..=k`.
    pub fn count_marginal(&self) -> Vec<f64> {
        (0..=self.k).map(|s| self.row(s).iter().sum()).collect()
    }

    /// `P[W = w]` for `w = 0..=k(k-1)/2`.
    pub fn weight_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.max_weight() + 1];
        for s in 0..=self.k {
            for (o, m) in out.iter_mut().zip(self.row(s)) {
                *o += m;
            }
        }
        out
    }

    /// Two independent walks of length `k` end at the same vertex.
    pub fn collision_probability(&self) -> f64 {
        (0..=self.k)
            .map(|s| self.row(s).iter().map(|m| m * m).sum::<f64>())
            .sum()
    }

    /// `P[W = W']` for independent copies.
    pub fn weighted_match_probability(&self) -> f64 {
        self.weight_marginal().iter().map(|m| m * m).sum()
    }

    /// `max_w P[W = w]` and the first maximizer.
    pub fn max_point_mass(&self) -> (f64, usize) {
        self.weight_marginal()
            .into_iter()
            .enumerate()
            .fold((0.0, 0), |best, (w, m)| if m > best.0 { (m, w) } else { best })
    }

    /// `P[S = S']`, equal to `C(2k, k) / 4^k`.
    pub fn count_match_probability(&self) -> f64 {
        self.count_marginal().iter().map(|m| m * m).sum()
    }

    /// `Σ_w P[W = w | S = s]^2`; `None` if `s > k`.
    pub fn conditional_match_at_count(&self, s: usize) -> Option<f64> {
        if s > self.k {
            return None;
        }
        let row = self.row(s);
        let ps: f64 = row.iter().sum();
        Some(row.iter().map(|m| (m / ps).powi(2)).sum())
    }

    /// `Σ_s P[S = s] · Σ_w P[W = w | S = s]^2`: the chance that the weighted
    /// sums match given that the counts do, averaged over one walk's count.
    pub fn conditional_match_probability(&self) -> f64 {
        (0..=self.k)
            .map(|s| {
                let row = self.row(s);
                let ps: f64 = row.iter().sum();
                if ps == 0.0 {
                    0.0
                } else {
                    row.iter().map(|m| m * m).sum::<f64>() / ps
                }
            })
            .sum()
    }

    /// The same conditional match at the central count `s = floor(k/2)`.
    pub fn central_conditional_match_probability(&self) -> f64 {
        self.conditional_match_at_count(self.k / 2).unwrap_or(0.0)
    }

    /// Largest `|mass(s, w) - mass(s, s(k-1) - w)|` over the table.
    pub fn reversal_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..=self.k {
            let top = s * self.k.saturating_sub(1);
            for w in 0..=top.min(self.max_weight()) {
                worst = worst.max((self.mass(s, w) - self.mass(s, top - w)).abs());
            }
        }
        worst
    }

    /// Total mass outside the band `s(s-1)/2 <= w <= s(2k-s-1)/2`.
    pub fn mass_outside_band(&self) -> f64 {
        let mut out = 0.0;
        for s in 0..=self.k {
            let (lo, hi) = weight_band(self.k, s);
            for (w, m) in self.row(s).iter().enumerate() {
                if w < lo || w > hi {
                    out += m.abs();
                }
            }
        }
        out
    }
}

/// Range of weighted sums attainable with `s` ones among `k` bits.
pub fn weight_band(k: usize, s: usize) -> (usize, usize) {
    if s == 0 {
        return (0, 0);
    }
    (s * (s - 1) / 2, s * (2 * k - s - 1) / 2)
}

/// Exact probability that two independent oriented walks of length `k` end at the same vertex.
pub fn collision_probability(k: usize) -> Result<f64> {
    Ok(CountWeightTable::build(k)?.collision_probability())
}

pub fn weighted_match_probability(k: usize) -> Result<f64> {
    Ok(CountWeightTable::build(k)?.weighted_match_probability())
}

pub fn max_point_mass(k: usize) -> Result<f64> {
    Ok(CountWeightTable::build(k)?.max_point_mass().0)
}

pub fn conditional_match_probability(k: usize) -> Result<f64> {
    Ok(CountWeightTable::build(k)?.conditional_match_probability())
}

pub fn count_match_probability(k: usize) -> Result<f64> {
    Ok(CountWeightTable::build(k)?.count_match_probability())
}

/// All per-`k` statistics of the table, as emitted by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionRow {
    pub k: usize,
    pub p_collision: f64,
    pub p_count_match: f64,
    pub p_weighted_match: f64,
    pub max_point_mass: f64,
    pub argmax_weight: usize,
    pub p_conditional_match: f64,
    pub p_conditional_match_central: f64,
}

impl CollisionRow {
    pub fn from_table(t: &CountWeightTable) -> Self {
        let (max_point_mass, argmax_weight) = t.max_point_mass();
        CollisionRow {
            k: t.k(),
            p_collision: t.collision_probability(),
            p_count_match: t.count_match_probability(),
            p_weighted_match: t.weighted_match_probability(),
            max_point_mass,
            argmax_weight,
            p_conditional_match: t.conditional_match_probability(),
            p_conditional_match_central: t.central_conditional_match_probability(),
        }
    }
}

/// Rows for every `k` in `ks` from a single sweep up to `max(ks)`.
pub fn collision_rows(ks: &[usize]) -> Result<Vec<CollisionRow>> {
    if ks.contains(&0) {
        return Err(invalid("table length k must be at least 1"));
    }
    let Some(&k_max) = ks.iter().max() else {
        return Ok(Vec::new());
    };
    let mut rows = Vec::new();
    CountWeightTable::sweep(k_max, |t| {
        if ks.contains(&t.k()) {
            rows.push(CollisionRow::from_table(t));
        }
    })?;
    rows.sort_by_key(|r| ks.iter().position(|&k| k == r.k));
    Ok(rows)
}

/// Exact law of `Σ_{j<m} 2^j·α_{2^j}` with `m = floor(log2 k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicLaw {
    pub k: usize,
    pub indices: Vec<usize>,
    pub support_size: usize,
    pub is_uniform: bool,
    /// `support_size >= max(1, k/2 - 1)`.
    pub meets_lower_bound: bool,
}

/// The dyadic sub-sum used to show that no single weighted sum is too likely.
///
/// The law is computed by exact integer convolution over the selected bits.
pub fn dyadic_uniformity(k: usize) -> Result<DyadicLaw> {
    if k < 2 {
        return Err(invalid("dyadic uniformity needs k >= 2"));
    }
    let m = k.ilog2() as usize;
    let indices: Vec<usize> = (0..m).map(|j| 1usize << j).collect();
    // counts[v] = number of assignments of the selected bits with sum v.
    let mut counts: Vec<u64> = vec![1];
    for (j, &idx) in indices.iter().enumerate() {
        debug_assert!(idx < k);
        let weight = 1usize << j;
        let mut next = vec![0u64; counts.len() + weight];
        for (v, &c) in counts.iter().enumerate() {
            next[v] += c;
            next[v + weight] += c;
        }
        counts = next;
    }
    let support: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    let support_size = support.len();
    let contiguous = counts.first().is_some_and(|&c| c > 0)
        && counts.iter().skip_while(|&&c| c > 0).all(|&c| c == 0);
    let is_uniform = contiguous && support.iter().all(|&c| c == support[0]);
    let bound = (k as f64 / 2.0 - 1.0).max(1.0);
    Ok(DyadicLaw {
        k,
        indices,
        support_size,
        is_uniform,
        meets_lower_bound: support_size as f64 >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;
    use crate::paths::{position, weighted_sum, BitWord};
    use std::collections::HashMap;

    /// Integer counts of `(s, w)` and of endpoints over all `2^k` words.
    struct Enumeration {
        k: usize,
        sw: HashMap<(usize, u64), u64>,
        endpoints: HashMap<GroupElement, u64>,
        weights: HashMap<u64, u64>,
        counts: HashMap<usize, u64>,
    }

    fn enumerate(k: usize) -> Enumeration {
        let mut e = Enumeration {
            k,
            sw: HashMap::new(),
            endpoints: HashMap::new(),
            weights: HashMap::new(),
            counts: HashMap::new(),
        };
        for x in BitWord::all(k) {
            let s = x.ones(k).unwrap();
            let w = weighted_sum(&x, k).unwrap();
            *e.sw.entry((s, w)).or_default() += 1;
            *e.endpoints.entry(position(&x, k).unwrap()).or_default() += 1;
            *e.weights.entry(w).or_default() += 1;
            *e.counts.entry(s).or_default() += 1;
        }
        e
    }

    impl Enumeration {
        fn denom(&self) -> f64 {
            (1u64 << self.k) as f64
        }
        fn sum_sq(m: &HashMap<impl std::hash::Hash + Eq, u64>) -> u128 {
            m.values().map(|&c| c as u128 * c as u128).sum()
        }
        fn collision(&self) -> f64 {
            Self::sum_sq(&self.endpoints) as f64 / (self.denom() * self.denom())
        }
        fn weighted_match(&self) -> f64 {
            Self::sum_sq(&self.weights) as f64 / (self.denom() * self.denom())
        }
        fn count_match(&self) -> f64 {
            Self::sum_sq(&self.counts) as f64 / (self.denom() * self.denom())
        }
        fn max_point(&self) -> f64 {
            *self.weights.values().max().unwrap() as f64 / self.denom()
        }
    }

    #[test]
    fn small_tables() {
        let t1 = CountWeightTable::build(1).unwrap();
        assert_eq!(t1.mass(0, 0), 0.5);
        assert_eq!(t1.mass(1, 0), 0.5);
        let t2 = CountWeightTable::build(2).unwrap();
        for (s, w) in [(0, 0), (1, 0), (1, 1), (2, 1)] {
            assert_eq!(t2.mass(s, w), 0.25);
        }
        assert_eq!(t2.total_mass(), 1.0);
    }

    #[test]
    fn spot_values() {
        assert_eq!(collision_probability(1).unwrap(), 0.5);
        assert_eq!(collision_probability(2).unwrap(), 0.25);
        assert_eq!(collision_probability(3).unwrap(), 0.125);
        assert_eq!(collision_probability(4).unwrap(), 9.0 / 128.0);

        assert_eq!(weighted_match_probability(2).unwrap(), 0.5);
        assert_eq!(weighted_match_probability(3).unwrap(), 0.25);
        assert_eq!(weighted_match_probability(4).unwrap(), 5.0 / 32.0);

        assert_eq!(max_point_mass(2).unwrap(), 0.5);
        assert_eq!(max_point_mass(3).unwrap(), 0.25);
        let t4 = CountWeightTable::build(4).unwrap();
        assert_eq!(t4.max_point_mass(), (0.25, 3));

        assert_eq!(conditional_match_probability(1).unwrap(), 1.0);
        // s = 1 leaves W uniform on {0, 1}: 1/4 + 1/2 · 1/2 + 1/4.
        assert_eq!(conditional_match_probability(2).unwrap(), 0.75);

        assert_eq!(count_match_probability(1).unwrap(), 0.5);
        assert_eq!(count_match_probability(2).unwrap(), 0.375);
    }

    #[test]
    fn matches_exhaustive_enumeration() {
        CountWeightTable::sweep(20, |t| {
            let e = enumerate(t.k());
            for s in 0..=t.k() {
                for w in 0..=t.max_weight() {
                    let c = e.sw.get(&(s, w as u64)).copied().unwrap_or(0);
                    assert_eq!(t.mass(s, w), c as f64 / e.denom(), "k={} s={s} w={w}", t.k());
                }
            }
            assert_eq!(t.collision_probability(), e.collision(), "k={}", t.k());
            assert_eq!(t.weighted_match_probability(), e.weighted_match());
            assert_eq!(t.count_match_probability(), e.count_match());
            assert_eq!(t.max_point_mass().0, e.max_point());
        })
        .unwrap();
    }

    #[test]
    fn conditional_match_by_enumeration() {
        for k in 1..=12 {
            let e = enumerate(k);
            let total = e.denom();
            let mut expected = 0.0;
            for (&s, &cs) in &e.counts {
                let mut inner = 0.0;
                for (&(s2, _), &c) in &e.sw {
                    if s2 == s {
                        inner += (c as f64 / cs as f64).powi(2);
                    }
                }
                expected += cs as f64 / total * inner;
            }
            let got = conditional_match_probability(k).unwrap();
            assert!((got - expected).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn table_invariants() {
        for k in [1usize, 2, 7, 33, 100, 180] {
            let t = CountWeightTable::build(k).unwrap();
            assert!((t.total_mass() - 1.0).abs() <= 1e-12 * k as f64);
            assert_eq!(t.mass_outside_band(), 0.0);
            assert!(t.reversal_asymmetry() <= 1e-15 * t.max_point_mass().0, "k={k}");
        }
    }

    #[test]
    fn count_match_closed_form() {
        let mut central = 1.0f64; // C(2k,k)/4^k by the ratio recursion
        CountWeightTable::sweep(200, |t| {
            let k = t.k() as f64;
            central *= (2.0 * k - 1.0) / (2.0 * k);
            assert!((t.count_match_probability() - central).abs() < 1e-13);
        })
        .unwrap();
    }

    #[test]
    fn bounds_hold_along_sweep() {
        CountWeightTable::sweep(128, |t| {
            if t.k() >= 2 {
                let k = t.k() as f64;
                let (mp, _) = t.max_point_mass();
                assert!(t.weighted_match_probability() <= mp + 1e-15);
                assert!(mp <= 1.0 / k + 1e-12);
            }
        })
        .unwrap();
    }

    #[test]
    fn rows_follow_requested_order() {
        let rows = collision_rows(&[8, 3, 5]).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![8, 3, 5]);
        assert_eq!(rows[1].p_collision, 0.125);
        assert!(collision_rows(&[0]).is_err());
        assert!(collision_rows(&[]).unwrap().is_empty());
    }

    #[test]
    fn cap_and_zero() {
        assert!(matches!(
            CountWeightTable::build(DEFAULT_TABLE_CAP + 1),
            Err(Error::CapExceeded { .. })
        ));
        assert!(CountWeightTable::build(0).is_err());
    }

    #[test]
    fn dyadic_examples() {
        let d4 = dyadic_uniformity(4).unwrap();
        assert_eq!((d4.support_size, d4.is_uniform), (4, true));
        assert_eq!(d4.indices, vec![1, 2]);
        let d2 = dyadic_uniformity(2).unwrap();
        assert_eq!((d2.support_size, d2.is_uniform), (2, true));
        let d1000 = dyadic_uniformity(1000).unwrap();
        assert_eq!(d1000.support_size, 512);
        assert!(d1000.is_uniform && d1000.meets_lower_bound);
        assert_eq!(*d1000.indices.last().unwrap(), 256);
        assert!(dyadic_uniformity(1).is_err());
    }

    #[test]
    fn dyadic_law_by_enumeration() {
        // Evaluate the dyadic sub-sum on every word of length k.
        for k in 2..=16usize {
            let law = dyadic_uniformity(k).unwrap();
            let mut seen = std::collections::BTreeMap::new();
            for x in BitWord::all(k) {
                let v: usize = (0..law.indices.len())
                    .map(|j| (x.bit(1 << j) as usize) << j)
                    .sum();
                *seen.entry(v).or_insert(0u64) += 1;
            }
            assert_eq!(seen.len(), law.support_size, "k={k}");
            let first = *seen.values().next().unwrap();
            assert_eq!(law.is_uniform, seen.values().all(|&c| c == first));
            assert_eq!(*seen.keys().last().unwrap(), law.support_size - 1);
            assert!(law.is_uniform && law.meets_lower_bound, "k={k}");
        }
    }
}
