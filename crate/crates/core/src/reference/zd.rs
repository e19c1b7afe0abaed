//! Oriented walks on `Z^d` and their difference walk.
//!
//! Two independent uniform oriented walks in `Z^d` differ by a walk on the
//! hyperplane `Σ x_i = 0` with steps `e_i - e_j`, which stays put with
//! probability `1/d`. A return to the origin counts only after the walk has
//! actually left it; a step that does not move is never a return.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::linear_fit;
use crate::paths::{TailEstimate, DEFAULT_MIN_COUNT};
use crate::rng::{self, BitSource};

/// Largest walk length accepted by [`zd_collision_probability`].
pub const ZD_LENGTH_CAP: usize = 4096;

/// Dimensions supported by the Monte Carlo drivers.
pub const MAX_DIM: usize = 16;

/// `Σ_c multinomial(k; c)^2` over count vectors `c` of `d` parts summing to `k`:
/// the number of ordered pairs of oriented `k`-step walks with a common endpoint.
///
/// Uses `f_i(n) = Σ_j C(n, j)^2 f_{i-1}(n - j)` with `f_1 = 1`.
pub fn zd_collision_count(d: usize, k: usize) -> BigUint {
    let binom = binomial_rows(k);
    let mut f: Vec<BigUint> = vec![BigUint::one(); k + 1];
    for _ in 1..d {
        f = (0..=k)
            .map(|n| {
                (0..=n).fold(BigUint::zero(), |acc, j| {
                    let c = &binom[n][j];
                    acc + c * c * &f[n - j]
                })
            })
            .collect();
    }
    f.swap_remove(k)
}

fn binomial_rows(k: usize) -> Vec<Vec<BigUint>> {
    let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
    for n in 1..=k {
        let prev = &rows[n - 1];
        let mut row = vec![BigUint::one(); n + 1];
        for j in 1..n {
            row[j] = &prev[j - 1] + &prev[j];
        }
        rows.push(row);
    }
    rows
}

/// `num / den` rounded to double precision.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-shift as i32)
}

/// Probability that two independent uniform oriented `k`-step walks in `Z^d`
/// end at the same point, computed exactly and rounded once.
pub fn zd_collision_probability(d: usize, k: usize) -> Result<f64> {
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if k > ZD_LENGTH_CAP {
        return Err(Error::CapExceeded {
            what: "walk length k",
            requested: k as u64,
            cap: ZD_LENGTH_CAP as u64,
        });
    }
    let num = zd_collision_count(d, k);
    let den = BigUint::from(d).pow(2 * k as u32);
    Ok(ratio_to_f64(&num, &den))
}

/// Difference walk state: coordinates plus the number of nonzero entries.
struct DiffWalk {
    x: [i64; MAX_DIM],
    nonzero: usize,
}

impl DiffWalk {
    fn new() -> Self {
        DiffWalk {
            x: [0; MAX_DIM],
            nonzero: 0,
        }
    }

    #[inline]
    fn bump(&mut self, i: usize, delta: i64) {
        let before = self.x[i] != 0;
        self.x[i] += delta;
        let after = self.x[i] != 0;
        match (before, after) {
            (false, true) => self.nonzero += 1,
            (true, false) => self.nonzero -= 1,
            _ => {}
        }
    }

    /// Takes the step `e_i - e_j`; returns whether the walk moved.
    #[inline]
    fn step(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        self.bump(i, 1);
        self.bump(j, -1);
        true
    }

    fn at_origin(&self) -> bool {
        self.nonzero == 0
    }
}

fn check_dim(d: usize) -> Result<()> {
    if !(4..=MAX_DIM).contains(&d) {
        return Err(invalid(format!("dimension must be in 4..={MAX_DIM}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub d: usize,
    pub horizon: usize,
    pub samples: u64,
    /// Walks that returned to the origin (after leaving it) by the horizon.
    pub returns: u64,
    pub theta_hat: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    /// `first_returns[t]` = walks whose first return happens at step `t`.
    pub first_returns: Vec<u64>,
    /// Estimated mass of first returns after the horizon; `None` when the
    /// first-return tail is too thin to fit.
    pub censoring_bound: Option<f64>,
}

impl ThetaEstimate {
    /// Estimate restricted to a shorter horizon, from the same samples.
    pub fn at_horizon(&self, h: usize) -> f64 {
        let h = h.min(self.horizon);
        self.first_returns[..=h].iter().sum::<u64>() as f64 / self.samples as f64
    }

    /// `P[another vertex coincidence | at a coincidence]` implied by the
    /// return probability: a lazy step, or a move followed by a return.
    pub fn implied_vertex_ratio(&self) -> f64 {
        implied_vertex_ratio(self.d, self.theta_hat)
    }

    /// `P[another shared edge | just shared one]` implied by the return probability.
    pub fn implied_edge_ratio(&self) -> f64 {
        implied_edge_ratio(self.d, self.theta_hat)
    }
}

pub fn implied_vertex_ratio(d: usize, rho: f64) -> f64 {
    let lazy = 1.0 / d as f64;
    lazy + (1.0 - lazy) * rho
}

/// From the origin a shared edge is a lazy step; otherwise the walk leaves
/// and must return first, so `q = (1/d) / (1 - (1 - 1/d) ρ)`.
pub fn implied_edge_ratio(d: usize, rho: f64) -> f64 {
    let lazy = 1.0 / d as f64;
    lazy / (1.0 - (1.0 - lazy) * rho)
}

/// Monte Carlo return probability of the difference walk by `horizon` steps.
pub fn theta_d_estimate(d: usize, horizon: usize, samples: u64, seed: u64) -> Result<ThetaEstimate> {
    check_dim(d)?;
    if horizon == 0 || samples == 0 {
        return Err(invalid("horizon and samples must be at least 1"));
    }
    let first_returns = (0..rng::blocks(samples))
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b);
            let mut src = BitSource::new(&mut stream);
            let mut hist = vec![0u64; horizon + 1];
            for _ in rng::block_range(b, samples) {
                let mut walk = DiffWalk::new();
                let mut left = false;
                for slot in &mut hist[1..] {
                    let i = src.below(d as u32) as usize;
                    let j = src.below(d as u32) as usize;
                    left |= walk.step(i, j);
                    if left && walk.at_origin() {
                        *slot += 1;
                        break;
                    }
                }
            }
            hist
        })
        .reduce(
            || vec![0u64; horizon + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let returns: u64 = first_returns.iter().sum();
    let n = samples as f64;
    let theta_hat = returns as f64 / n;
    let std_error = (theta_hat * (1.0 - theta_hat) / n).sqrt();
    let censoring_bound = first_return_tail_bound(&first_returns, samples);
    Ok(ThetaEstimate {
        d,
        horizon,
        samples,
        returns,
        theta_hat,
        std_error,
        ci95: (theta_hat - 1.96 * std_error, theta_hat + 1.96 * std_error),
        first_returns,
        censoring_bound,
    })
}

/// Fits a power law `c·t^-α` to first-return frequencies in the dyadic bins
/// covering the last four octaves below the horizon and sums it past the horizon.
fn first_return_tail_bound(hist: &[u64], samples: u64) -> Option<f64> {
    let horizon = hist.len() - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lo = 1usize;
    while lo * 2 <= horizon + 1 {
        let hi = lo * 2; // bin [lo, hi)
        if hi * 16 > horizon {
            let count: u64 = hist[lo..hi].iter().sum();
            if count > 0 {
                let density = count as f64 / (samples as f64 * (hi - lo) as f64);
                let mid = ((lo * (hi - 1)) as f64).sqrt();
                xs.push(mid.ln());
                ys.push(density.ln());
            }
        }
        lo = hi;
    }
    let fit = linear_fit(&xs, &ys)?;
    let alpha = -fit.slope;
    if alpha <= 1.0 {
        return None;
    }
    let c = fit.intercept.exp();
    Some(c * (horizon as f64).powf(1.0 - alpha) / (alpha - 1.0))
}

/// Exact `P[first return at step t]` for `t = 0..=horizon`, by propagating
/// the law of the not-yet-returned difference walk.
pub fn exact_first_returns(d: usize, horizon: usize) -> Result<Vec<f64>> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(invalid(format!("dimension must be in 2..={MAX_DIM}")));
    }
    if horizon > 40 {
        return Err(Error::CapExceeded {
            what: "exact return horizon",
            requested: horizon as u64,
            cap: 40,
        });
    }
    let step_p = 1.0 / (d * d) as f64;
    // Key: (coordinates, has left the origin).
    let mut law: HashMap<(Vec<i64>, bool), f64> = HashMap::new();
    law.insert((vec![0; d], false), 1.0);
    let mut out = vec![0.0; horizon + 1];
    for slot in out.iter_mut().skip(1) {
        let mut next: HashMap<(Vec<i64>, bool), f64> = HashMap::new();
        for ((x, left), p) in &law {
            for i in 0..d {
                for j in 0..d {
                    let mut y = x.clone();
                    let moved = i != j;
                    if moved {
                        y[i] += 1;
                        y[j] -= 1;
                    }
                    let left2 = *left || moved;
                    if left2 && y.iter().all(|&v| v == 0) {
                        *slot += p * step_p;
                    } else {
                        *next.entry((y, left2)).or_default() += p * step_p;
                    }
                }
            }
        }
        law = next;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZdTail {
    pub d: usize,
    pub edges: TailEstimate,
    pub vertices: TailEstimate,
}

/// Shared-edge and vertex-coincidence survivor functions for pairs of
/// uniform oriented walks in `Z^d`.
pub fn zd_eit_tail(d: usize, horizon: usize, samples: u64, seed: u64) -> Result<ZdTail> {
    check_dim(d)?;
    if horizon == 0 || samples == 0 {
        return Err(invalid("horizon and samples must be at least 1"));
    }
    let (edge_hist, vertex_hist) = (0..rng::blocks(samples))
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b);
            let mut src = BitSource::new(&mut stream);
            let mut eh = vec![0u64; horizon + 1];
            let mut vh = vec![0u64; horizon + 1];
            for _ in rng::block_range(b, samples) {
                let mut walk = DiffWalk::new();
                let (mut edges, mut vertices) = (0usize, 0usize);
                for _ in 0..horizon {
                    let i = src.below(d as u32) as usize;
                    let j = src.below(d as u32) as usize;
                    if walk.at_origin() && i == j {
                        edges += 1;
                    }
                    walk.step(i, j);
                    if walk.at_origin() {
                        vertices += 1;
                    }
                }
                eh[edges] += 1;
                vh[vertices] += 1;
            }
            (eh, vh)
        })
        .reduce(
            || (vec![0u64; horizon + 1], vec![0u64; horizon + 1]),
            |mut a, b| {
                a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
                a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
                a
            },
        );
    // Collisions decay like k^{-(d-1)/2}; the tail past the horizon sums to O(h^{(3-d)/2}).
    let censoring = (horizon as f64).powf((3.0 - d as f64) / 2.0);
    Ok(ZdTail {
        d,
        edges: TailEstimate::from_histogram(&edge_hist, samples, horizon, DEFAULT_MIN_COUNT, censoring),
        vertices: TailEstimate::from_histogram(&vertex_hist, samples, horizon, DEFAULT_MIN_COUNT, censoring),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_binomial_ratio(k: usize) -> (BigUint, BigUint) {
        let rows = binomial_rows(2 * k);
        (rows[2 * k][k].clone(), BigUint::from(4u32).pow(k as u32))
    }

    /// Enumerates count vectors directly.
    fn brute_collision(d: usize, k: usize) -> f64 {
        fn rec(d: usize, left: usize, acc: &mut Vec<usize>, out: &mut f64, k: usize) {
            if acc.len() == d - 1 {
                acc.push(left);
                let mut logm = ln_fact(k);
                for &c in acc.iter() {
                    logm -= ln_fact(c);
                }
                *out += (2.0 * (logm - k as f64 * (d as f64).ln())).exp();
                acc.pop();
                return;
            }
            for c in 0..=left {
                acc.push(c);
                rec(d, left - c, acc, out, k);
                acc.pop();
            }
        }
        fn ln_fact(n: usize) -> f64 {
            (1..=n).map(|i| (i as f64).ln()).sum()
        }
        let mut out = 0.0;
        rec(d, k, &mut Vec::new(), &mut out, k);
        out
    }

    #[test]
    fn dimension_one_and_two() {
        for k in [0, 1, 5, 40] {
            assert_eq!(zd_collision_probability(1, k).unwrap(), 1.0);
        }
        for k in 0..=30 {
            let (num, den) = central_binomial_ratio(k);
            assert_eq!(zd_collision_count(2, k), num);
            assert_eq!(zd_collision_probability(2, k).unwrap(), ratio_to_f64(&num, &den));
        }
        assert_eq!(zd_collision_probability(2, 1).unwrap(), 0.5);
        assert_eq!(zd_collision_probability(2, 2).unwrap(), 0.375);
    }

    #[test]
    fn matches_count_vector_enumeration() {
        for d in 2..=5 {
            for k in [1usize, 3, 8, 15] {
                let exact = zd_collision_probability(d, k).unwrap();
                assert!((exact - brute_collision(d, k)).abs() < 1e-12 * exact.max(1e-300), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn decreasing_in_length_and_dimension() {
        for d in 2..=6 {
            let ps: Vec<f64> = (1..=40).map(|k| zd_collision_probability(d, k).unwrap()).collect();
            assert!(ps.windows(2).all(|w| w[1] < w[0]), "d={d}");
        }
        for k in 1..=30 {
            let ps: Vec<f64> = (1..=6).map(|d| zd_collision_probability(d, k).unwrap()).collect();
            assert!(ps.windows(2).all(|w| w[1] < w[0]), "k={k}");
        }
    }

    #[test]
    fn ratio_rounding() {
        let third = ratio_to_f64(&BigUint::from(1u32), &BigUint::from(3u32));
        assert_eq!(third, 1.0 / 3.0);
        let big = BigUint::from(7u32) << 2000usize;
        assert_eq!(ratio_to_f64(&big, &(BigUint::from(2u32) << 2000usize)), 3.5);
    }

    #[test]
    fn theta_basics() {
        let one = theta_d_estimate(4, 1, 5000, 1).unwrap();
        assert_eq!(one.returns, 0);
        let est = theta_d_estimate(4, 400, 20_000, 9).unwrap();
        let mut last = 0.0;
        for h in [1, 2, 5, 10, 50, 100, 400] {
            let v = est.at_horizon(h);
            assert!(v >= last);
            last = v;
        }
        assert_eq!(est.at_horizon(400), est.theta_hat);
        assert!(theta_d_estimate(3, 10, 10, 0).is_err());
    }

    #[test]
    fn theta_matches_exact_small_horizon() {
        let h = 10;
        let exact: f64 = exact_first_returns(4, h).unwrap().iter().sum();
        let est = theta_d_estimate(4, h, 200_000, 77).unwrap();
        assert!((est.theta_hat - exact).abs() <= 4.0 * est.std_error, "{} vs {exact}", est.theta_hat);
        // The two-step return: leave by e_i - e_j, come back by e_j - e_i.
        let ex = exact_first_returns(4, 2).unwrap();
        assert_eq!(ex[1], 0.0);
        assert!((ex[2] - 12.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn zd_tail_invariants_and_renewal() {
        let t = zd_eit_tail(4, 500, 50_000, 3).unwrap();
        assert_eq!(t.edges.counts[0], 50_000);
        assert!(t.edges.counts.windows(2).all(|w| w[0] >= w[1]));
        assert!(t.edges.memorylessness(3.0).pass);
        assert!(t.vertices.memorylessness(3.0).pass);
        // One lazy step at the start has probability 1/4.
        let first = t.edges.count(1) as f64 / 50_000.0;
        assert!(first >= 0.25 - 0.01);
    }
}
