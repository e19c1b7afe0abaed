//! Oriented paths on the Heisenberg Cayley graph under the uniform measure.
//!
//! An oriented path is a word over `{a, b}`, stored as bits (`0` = a-step,
//! `1` = b-step). After `t` steps the walk sits at
//! `(#zeros, #ones, -Σ_{zero bits j} #ones before j)`. Two walks occupy the
//! same vertex at time `t` exactly when their numbers of ones agree and their
//! weighted sums `Σ_{j<t} j·bit_j` agree, which is what the simulation
//! drivers below track.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::group::{word_eval, Generator, GroupElement};
use crate::rng::{self, BitSource, Stream};

/// Fits of the survivor function ignore `n` with fewer surviving pairs.
pub const DEFAULT_MIN_COUNT: u64 = 50;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitWord {
    bits: Vec<bool>,
}

impl BitWord {
    pub fn new(bits: Vec<bool>) -> Self {
        BitWord { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, j: usize) -> bool {
        self.bits[j]
    }

    /// All `2^len` words of the given length, in binary counting order with
    /// bit `j` taken from bit `j` of the counter.
    pub fn all(len: usize) -> impl Iterator<Item = BitWord> {
        assert!(len < 64);
        (0u64..1 << len).map(move |x| BitWord::new((0..len).map(|j| x >> j & 1 == 1).collect()))
    }

    pub fn generators(&self) -> Vec<Generator> {
        self.bits
            .iter()
            .map(|&b| if b { Generator::B } else { Generator::A })
            .collect()
    }

    /// Number of ones among the first `t` bits.
    pub fn ones(&self, t: usize) -> Result<usize> {
        self.check(t)?;
        Ok(self.bits[..t].iter().filter(|&&b| b).count())
    }

    fn check(&self, t: usize) -> Result<()> {
        if t > self.bits.len() {
            Err(Error::OutOfRange {
                index: t,
                len: self.bits.len(),
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("not a bit: {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitWord::new)
    }
}

/// A uniformly random word of length `k`.
pub fn sample_word(k: usize, stream: &mut Stream) -> BitWord {
    let mut src = BitSource::new(stream);
    BitWord::new((0..k).map(|_| src.bit()).collect())
}

/// The vertex reached after the first `t` steps of `w`.
pub fn position(w: &BitWord, t: usize) -> Result<GroupElement> {
    w.check(t)?;
    let (mut x, mut y, mut z) = (0i64, 0i64, 0i64);
    for &b in &w.bits[..t] {
        if b {
            y += 1;
        } else {
            x += 1;
            z -= y;
        }
    }
    Ok(GroupElement::new(x, y, z))
}

/// `Σ_{j<t} j·bit_j`.
pub fn weighted_sum(w: &BitWord, t: usize) -> Result<u64> {
    w.check(t)?;
    Ok(w.bits[..t]
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| j as u64)
        .sum())
}

/// Whether the two walks occupy the same vertex after `t` steps.
pub fn coincides(u: &BitWord, v: &BitWord, t: usize) -> Result<bool> {
    Ok(position(u, t)? == position(v, t)?)
}

/// The same predicate evaluated through `(#ones, weighted sum)`.
pub fn coincides_by_sums(u: &BitWord, v: &BitWord, t: usize) -> Result<bool> {
    Ok(u.ones(t)? == v.ones(t)? && weighted_sum(u, t)? == weighted_sum(v, t)?)
}

fn same_len(u: &BitWord, v: &BitWord) -> Result<usize> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    Ok(u.len())
}

/// Walks both words in lockstep and returns `(shared edges, vertex coincidences)`.
fn pair_scan(u: &BitWord, v: &BitWord) -> (u64, u64) {
    let (mut ds, mut dw) = (0i64, 0i64);
    let (mut edges, mut vertices) = (0, 0);
    for (t, (&a, &b)) in u.bits.iter().zip(&v.bits).enumerate() {
        if ds == 0 && dw == 0 && a == b {
            edges += 1;
        }
        let d = a as i64 - b as i64;
        ds += d;
        dw += d * t as i64;
        if ds == 0 && dw == 0 {
            vertices += 1;
        }
    }
    (edges, vertices)
}

/// Number of edges the two paths traverse in common.
///
/// An oriented walk is at distance `t` after `t` steps, so shared edges can
/// only be traversed at the same step index.
pub fn shared_edges(u: &BitWord, v: &BitWord) -> Result<u64> {
    same_len(u, v)?;
    Ok(pair_scan(u, v).0)
}

/// `#{t in 1..=len : coincides(u, v, t)}`.
pub fn vertex_coincidences(u: &BitWord, v: &BitWord) -> Result<u64> {
    same_len(u, v)?;
    Ok(pair_scan(u, v).1)
}

/// Evaluates `w` through the group law; used to cross-check [`position`].
pub fn position_by_word_eval(w: &BitWord, t: usize) -> Result<GroupElement> {
    w.check(t)?;
    word_eval(&w.generators()[..t])
}

/// Raw counts from a batch of independent pairs of walks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub horizon: usize,
    pub samples: u64,
    /// `edge_histogram[n]` = pairs with exactly `n` shared edges.
    pub edge_histogram: Vec<u64>,
    /// `vertex_histogram[n]` = pairs with exactly `n` vertex coincidences.
    pub vertex_histogram: Vec<u64>,
    /// `collisions[t]` = pairs at the same vertex after `t` steps.
    pub collisions: Vec<u64>,
}

impl PairCounts {
    fn empty(horizon: usize) -> Self {
        PairCounts {
            horizon,
            samples: 0,
            edge_histogram: Vec::new(),
            vertex_histogram: Vec::new(),
            collisions: vec![0; horizon + 1],
        }
    }

    fn merge(mut self, other: PairCounts) -> Self {
        fn add(a: &mut Vec<u64>, b: &[u64]) {
            if a.len() < b.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self.samples += other.samples;
        add(&mut self.edge_histogram, &other.edge_histogram);
        add(&mut self.vertex_histogram, &other.vertex_histogram);
        add(&mut self.collisions, &other.collisions);
        self
    }

    fn record(hist: &mut Vec<u64>, n: u64) {
        let n = n as usize;
        if hist.len() <= n {
            hist.resize(n + 1, 0);
        }
        hist[n] += 1;
    }

    /// Empirical collision frequency at step `t` with its binomial standard error.
    pub fn collision_frequency(&self, t: usize) -> (f64, f64) {
        let p = self.collisions[t] as f64 / self.samples as f64;
        (p, (p * (1.0 - p) / self.samples as f64).sqrt())
    }
}

/// Simulates `samples` independent pairs of uniform oriented walks for
/// `horizon` steps. Pair `i` draws from block stream `i / BLOCK`.
pub fn simulate_pairs(horizon: usize, samples: u64, seed: u64) -> Result<PairCounts> {
    if horizon == 0 || samples == 0 {
        return Err(invalid("horizon and samples must be at least 1"));
    }
    let counts = (0..rng::blocks(samples))
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b);
            let mut src = BitSource::new(&mut stream);
            let mut acc = PairCounts::empty(horizon);
            for _ in rng::block_range(b, samples) {
                let (mut ds, mut dw) = (0i64, 0i64);
                let (mut edges, mut vertices) = (0u64, 0u64);
                for t in 0..horizon {
                    let a = src.bit();
                    let c = src.bit();
                    if ds == 0 && dw == 0 && a == c {
                        edges += 1;
                    }
                    let d = a as i64 - c as i64;
                    ds += d;
                    dw += d * t as i64;
                    if ds == 0 && dw == 0 {
                        vertices += 1;
                        acc.collisions[t + 1] += 1;
                    }
                }
                acc.collisions[0] += 1;
                acc.samples += 1;
                PairCounts::record(&mut acc.edge_histogram, edges);
                PairCounts::record(&mut acc.vertex_histogram, vertices);
            }
            acc
        })
        .reduce(|| PairCounts::empty(horizon), PairCounts::merge);
    Ok(counts)
}

/// Empirical survivor function `n ↦ #{pairs : N >= n}` of an intersection
/// count, with an exponential-tail fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub horizon: usize,
    pub samples: u64,
    /// `counts[n]` = pairs with at least `n` intersections; `counts[0] = samples`.
    pub counts: Vec<u64>,
    /// `exp(slope)` of the least-squares line through `ln counts(n)`.
    pub theta_hat: Option<f64>,
    pub theta_std_error: Option<f64>,
    /// Binomial standard error of each survivor fraction `counts[n] / samples`.
    pub std_errors: Vec<f64>,
    pub fit: Option<LinearFit>,
    /// Inclusive `n`-range used for `theta_hat`.
    pub fit_range: Option<(usize, usize)>,
    pub min_count: u64,
    /// Upper bound on the mass of intersections beyond the horizon.
    pub censoring_bound: f64,
}

impl TailEstimate {
    /// Builds the survivor function from a histogram of exact counts.
    pub fn from_histogram(
        histogram: &[u64],
        samples: u64,
        horizon: usize,
        min_count: u64,
        censoring_bound: f64,
    ) -> TailEstimate {
        let mut counts = vec![0u64; histogram.len().max(1)];
        let mut acc = 0;
        for n in (0..histogram.len()).rev() {
            acc += histogram[n];
            counts[n] = acc;
        }
        if histogram.is_empty() {
            counts[0] = samples;
        }
        let std_errors = counts
            .iter()
            .map(|&c| {
                let q = c as f64 / samples as f64;
                (q * (1.0 - q) / samples as f64).sqrt()
            })
            .collect();
        let mut est = TailEstimate {
            horizon,
            samples,
            counts,
            theta_hat: None,
            theta_std_error: None,
            std_errors,
            fit: None,
            fit_range: None,
            min_count,
            censoring_bound,
        };
        let last = est.counts.iter().rposition(|&c| c >= min_count).unwrap_or(0);
        if last >= 2 {
            est.fit = est.fit_over(1, last);
            est.fit_range = Some((1, last));
            if let Some(f) = &est.fit {
                if f.slope < 0.0 {
                    let theta = f.slope.exp();
                    est.theta_hat = Some(theta);
                    est.theta_std_error = Some(theta * f.slope_std_error);
                }
            }
        }
        est
    }

    pub fn count(&self, n: usize) -> u64 {
        self.counts.get(n).copied().unwrap_or(0)
    }

    /// Least-squares line through `(n, ln counts(n))` for `n` in `lo..=hi`.
    /// `None` if any count in the range is zero.
    pub fn fit_over(&self, lo: usize, hi: usize) -> Option<LinearFit> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for n in lo..=hi {
            let c = self.count(n);
            if c == 0 {
                return None;
            }
            xs.push(n as f64);
            ys.push((c as f64).ln());
        }
        linear_fit(&xs, &ys)
    }

    /// Tests that `P[N >= n+1 | N >= n]` is the same for every `n` with at
    /// least `min_count` surviving pairs, to within `z` binomial standard errors
    /// of the pooled ratio.
    pub fn memorylessness(&self, z: f64) -> MemorylessCheck {
        let ns: Vec<usize> = (0..self.counts.len().saturating_sub(1))
            .filter(|&n| self.count(n) >= self.min_count)
            .collect();
        let num: u64 = ns.iter().map(|&n| self.count(n + 1)).sum();
        let den: u64 = ns.iter().map(|&n| self.count(n)).sum();
        let pooled = if den > 0 { num as f64 / den as f64 } else { f64::NAN };
        let mut ratios = Vec::new();
        let mut max_z = 0.0f64;
        for &n in &ns {
            let c = self.count(n) as f64;
            let r = self.count(n + 1) as f64 / c;
            let se = (pooled * (1.0 - pooled) / c).sqrt();
            let score = if se > 0.0 { (r - pooled).abs() / se } else { 0.0 };
            max_z = max_z.max(score);
            ratios.push(ConditionalRatio {
                n,
                ratio: r,
                std_error: se,
                z_score: score,
            });
        }
        MemorylessCheck {
            pooled,
            pass: ns.len() >= 2 && max_z <= z,
            max_z,
            threshold: z,
            ratios,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRatio {
    pub n: usize,
    pub ratio: f64,
    pub std_error: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorylessCheck {
    pub pooled: f64,
    pub ratios: Vec<ConditionalRatio>,
    pub max_z: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Both intersection statistics from one batch of simulated pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntersectionTails {
    pub edges: TailEstimate,
    pub vertices: TailEstimate,
    pub raw: PairCounts,
}

pub fn intersection_tails(horizon: usize, samples: u64, seed: u64) -> Result<IntersectionTails> {
    let raw = simulate_pairs(horizon, samples, seed)?;
    // Collisions at step t decay like t^-2, so the mass past the horizon is at most ~1/horizon.
    let censoring = 1.0 / horizon as f64;
    let edges = TailEstimate::from_histogram(
        &raw.edge_histogram,
        samples,
        horizon,
        DEFAULT_MIN_COUNT,
        censoring,
    );
    let vertices = TailEstimate::from_histogram(
        &raw.vertex_histogram,
        samples,
        horizon,
        DEFAULT_MIN_COUNT,
        censoring,
    );
    Ok(IntersectionTails {
        edges,
        vertices,
        raw,
    })
}

/// Shared-edge survivor function for `samples` pairs of walks of length `horizon`.
pub fn tail_estimate(horizon: usize, samples: u64, seed: u64) -> Result<TailEstimate> {
    Ok(intersection_tails(horizon, samples, seed)?.edges)
}
