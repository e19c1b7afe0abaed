//! Simple random walk on the Heisenberg group with steps `a, a⁻¹, b, b⁻¹`.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::group::{apply_generator, Generator, GroupElement};
use crate::quadrature::pairwise_sum;
use crate::rng;

/// Largest time accepted by [`srw_return_probability`].
pub const SRW_TIME_CAP: usize = 96;

/// Finitely supported probability law on group elements.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseDistribution {
    pub support: BTreeMap<GroupElement, f64>,
}

impl SparseDistribution {
    pub fn point(g: GroupElement) -> Self {
        SparseDistribution {
            support: BTreeMap::from([(g, 1.0)]),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.support.values().sum()
    }

    pub fn get(&self, g: &GroupElement) -> f64 {
        self.support.get(g).copied().unwrap_or(0.0)
    }

    /// One step of the walk: each generator with probability 1/4.
    pub fn step(&self) -> Result<Self> {
        let mut next = BTreeMap::new();
        for (g, p) in &self.support {
            for s in Generator::ALL {
                *next.entry(apply_generator(*g, s)?).or_insert(0.0) += 0.25 * p;
            }
        }
        Ok(SparseDistribution { support: next })
    }
}

/// Dense law of the walk on the box `|x| + |y| <= cap`, `|z| <= cap²/4`.
///
/// Along any word, `z` changes only on a-steps and by at most the current
/// number of b-steps, so `|z| <= #a · #b <= t²/4` after `t` steps.
struct DenseLaw {
    cap: i64,
    width: usize,
    rows: Vec<(i64, i64)>,
    row_index: Vec<usize>,
    data: Vec<f64>,
    t: i64,
}

impl DenseLaw {
    fn new(cap: usize) -> Self {
        let cap = cap as i64;
        let zcap = cap * cap / 4;
        let width = (2 * zcap + 1) as usize;
        let side = (2 * cap + 1) as usize;
        let mut rows = Vec::new();
        let mut row_index = vec![usize::MAX; side * side];
        for x in -cap..=cap {
            for y in -cap..=cap {
                if x.abs() + y.abs() <= cap {
                    row_index[((x + cap) as usize) * side + (y + cap) as usize] = rows.len();
                    rows.push((x, y));
                }
            }
        }
        let mut data = vec![0.0; rows.len() * width];
        let origin = row_index[(cap as usize) * side + cap as usize];
        data[origin * width + zcap as usize] = 1.0;
        DenseLaw {
            cap,
            width,
            rows,
            row_index,
            data,
            t: 0,
        }
    }

    fn zcap(&self) -> i64 {
        (self.width as i64 - 1) / 2
    }

    fn row(&self, x: i64, y: i64) -> Option<usize> {
        if x.abs() + y.abs() > self.cap {
            return None;
        }
        let side = (2 * self.cap + 1) as usize;
        Some(self.row_index[((x + self.cap) as usize) * side + (y + self.cap) as usize])
    }

    fn at(&self, x: i64, y: i64, z: i64) -> f64 {
        let zc = self.zcap();
        if z.abs() > zc {
            return 0.0;
        }
        match self.row(x, y) {
            Some(r) => self.data[r * self.width + (z + zc) as usize],
            None => 0.0,
        }
    }

    /// Advances one step by pulling from the four predecessors:
    /// `(x-1, y, z+y)` via a, `(x+1, y, z-y)` via a⁻¹, `(x, y∓1, z)` via b^{±1}.
    fn advance(&mut self) {
        assert!(self.t < self.cap, "dense law is at capacity");
        let t = self.t + 1;
        let zt = t * t / 4;
        let zc = self.zcap();
        let width = self.width;
        let mut next = vec![0.0; self.data.len()];
        next.par_chunks_mut(width)
            .zip(self.rows.par_iter())
            .for_each(|(out, &(x, y))| {
                if x.abs() + y.abs() > t || (x + y - t).rem_euclid(2) != 0 {
                    return;
                }
                for z in -zt..=zt {
                    let p = self.at(x - 1, y, z + y)
                        + self.at(x + 1, y, z - y)
                        + self.at(x, y - 1, z)
                        + self.at(x, y + 1, z);
                    out[(z + zc) as usize] = 0.25 * p;
                }
            });
        self.data = next;
        self.t = t;
    }

    fn total(&self) -> f64 {
        let rows: Vec<f64> = self.data.par_chunks(self.width).map(|r| r.iter().sum()).collect();
        pairwise_sum(&rows)
    }

    // Row partials are summed in a fixed order so results do not depend on
    // the thread count.
    fn dot(&self, other: &[f64]) -> f64 {
        let rows = self
            .data
            .par_chunks(self.width)
            .zip(other.par_chunks(self.width))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect::<Vec<f64>>();
        pairwise_sum(&rows)
    }

    fn to_sparse(&self) -> SparseDistribution {
        let zc = self.zcap();
        let mut support = BTreeMap::new();
        for (r, &(x, y)) in self.rows.iter().enumerate() {
            for (i, &p) in self.data[r * self.width..(r + 1) * self.width].iter().enumerate() {
                if p > 0.0 {
                    support.insert(GroupElement::new(x, y, i as i64 - zc), p);
                }
            }
        }
        SparseDistribution { support }
    }
}

/// Law of the walk after `steps` steps.
pub fn srw_distribution(steps: usize) -> Result<SparseDistribution> {
    let cap = SRW_TIME_CAP / 2;
    if steps > cap {
        return Err(Error::CapExceeded {
            what: "distribution steps",
            requested: steps as u64,
            cap: cap as u64,
        });
    }
    let mut law = DenseLaw::new(steps.max(1));
    for _ in 0..steps {
        law.advance();
    }
    Ok(law.to_sparse())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnProfile {
    /// `probabilities[n]` = P[walk at the identity after n steps].
    pub probabilities: Vec<f64>,
    /// Largest `|total mass - 1|` over the intermediate laws.
    pub max_mass_error: f64,
}

/// `P[X_n = e]` for `n = 0..=n_max`.
///
/// The step law is symmetric, so `P[X_{a+b} = e] = Σ_g P[X_a = g] P[X_b = g]`;
/// only the laws up to time `ceil(n_max / 2)` are propagated.
pub fn srw_return_profile(n_max: usize) -> Result<ReturnProfile> {
    if n_max > SRW_TIME_CAP {
        return Err(Error::CapExceeded {
            what: "return time n",
            requested: n_max as u64,
            cap: SRW_TIME_CAP as u64,
        });
    }
    let half = n_max.div_ceil(2);
    let mut probabilities = vec![0.0; n_max + 1];
    probabilities[0] = 1.0;
    let mut max_mass_error = 0.0f64;
    let mut law = DenseLaw::new(half.max(1));
    for a in 1..=half {
        let prev = law.data.clone();
        law.advance();
        max_mass_error = max_mass_error.max((law.total() - 1.0).abs());
        if 2 * a - 1 <= n_max {
            probabilities[2 * a - 1] = law.dot(&prev);
        }
        if 2 * a <= n_max {
            probabilities[2 * a] = law.dot(&law.data);
        }
    }
    Ok(ReturnProfile {
        probabilities,
        max_mass_error,
    })
}

pub fn srw_return_probability(n: usize) -> Result<f64> {
    Ok(srw_return_profile(n)?.probabilities[n])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeIntersection {
    pub time: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Mean number of vertices visited by both of two independent walks by time
/// `t`, at `t = 0` and `t = n, 2n, 4n, ...` (`levels` checkpoints).
pub fn srw_mutual_intersections(
    n: usize,
    levels: usize,
    samples: u64,
    seed: u64,
) -> Result<Vec<RangeIntersection>> {
    if n == 0 || levels == 0 || samples == 0 {
        return Err(invalid("n, levels and samples must be at least 1"));
    }
    let mut times = vec![0usize];
    times.extend((0..levels).map(|l| n << l));
    let t_max = *times.last().unwrap();
    let per_sample: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::stream(seed, i);
            let mut src = rng::BitSource::new(&mut stream);
            let mut range_a = HashSet::from([GroupElement::IDENTITY]);
            let mut range_b = HashSet::from([GroupElement::IDENTITY]);
            let (mut a, mut b) = (GroupElement::IDENTITY, GroupElement::IDENTITY);
            let mut common = 1u64;
            let mut out = vec![common];
            let mut next = 1;
            for t in 1..=t_max {
                a = apply_generator(a, Generator::ALL[src.below(4) as usize]).expect("bounded walk");
                b = apply_generator(b, Generator::ALL[src.below(4) as usize]).expect("bounded walk");
                if range_a.insert(a) && range_b.contains(&a) {
                    common += 1;
                }
                if range_b.insert(b) && range_a.contains(&b) {
                    common += 1;
                }
                if t == times[next] {
                    out.push(common);
                    next += 1;
                }
            }
            out
        })
        .collect();
    let s = samples as f64;
    Ok(times
        .iter()
        .enumerate()
        .map(|(idx, &time)| {
            let mean = per_sample.iter().map(|v| v[idx] as f64).sum::<f64>() / s;
            let var = per_sample
                .iter()
                .map(|v| (v[idx] as f64 - mean).powi(2))
                .sum::<f64>()
                / (s - 1.0).max(1.0);
            RangeIntersection {
                time,
                mean,
                std_error: (var / s).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn return_examples() {
        assert_eq!(srw_return_probability(0).unwrap(), 1.0);
        assert_eq!(srw_return_probability(1).unwrap(), 0.0);
        assert_eq!(srw_return_probability(2).unwrap(), 0.25);
        assert!(srw_return_probability(SRW_TIME_CAP + 1).is_err());
    }

    #[test]
    fn dense_law_matches_sparse_convolution() {
        let mut sparse = SparseDistribution::point(GroupElement::IDENTITY);
        for steps in 1..=9 {
            sparse = sparse.step().unwrap();
            let dense = srw_distribution(steps).unwrap();
            assert_eq!(dense.support.len(), sparse.support.len(), "steps={steps}");
            for (g, p) in &sparse.support {
                assert!((dense.get(g) - p).abs() < 1e-15);
            }
            assert!((dense.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn returns_match_sparse_convolution() {
        let profile = srw_return_profile(16).unwrap();
        let mut sparse = SparseDistribution::point(GroupElement::IDENTITY);
        for n in 1..=16 {
            sparse = sparse.step().unwrap();
            let direct = sparse.get(&GroupElement::IDENTITY);
            assert!((profile.probabilities[n] - direct).abs() < 1e-15, "n={n}");
        }
        assert!(profile.max_mass_error < 1e-9);
    }

    #[test]
    fn z_range_bound_is_respected() {
        // Every element of the law at time t obeys |z| <= t²/4.
        let law = srw_distribution(12).unwrap();
        assert!(law.support.keys().all(|g| g.k.abs() <= 36));
        assert!(law.support.keys().any(|g| g.k.abs() == 9));
    }

    #[test]
    fn range_intersections_grow() {
        let rows = srw_mutual_intersections(64, 3, 200, 5).unwrap();
        assert_eq!(rows[0].time, 0);
        assert_eq!(rows[0].mean, 1.0);
        assert_eq!(rows.iter().map(|r| r.time).collect::<Vec<_>>(), vec![0, 64, 128, 256]);
        assert!(rows.windows(2).all(|w| w[1].mean >= w[0].mean));
        assert!(srw_mutual_intersections(0, 1, 1, 0).is_err());
    }
}
