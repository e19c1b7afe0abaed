//! Globally adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with the 8-point rule on the whole panel and on
//! its two halves; the difference is the panel's error estimate and the
//! halves' sum is its value. The panel with the largest estimate is split
//! until the total estimate meets the tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub panels: usize,
}

impl QuadratureResult {
    pub fn scaled(self, factor: f64) -> Self {
        QuadratureResult {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * factor.abs(),
            panels: self.panels,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-4,
            max_panels: 4_000_000,
        }
    }
}

impl Tolerance {
    /// The looser of the absolute and relative targets.
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        s += w * (f(c - h * x) + f(c + h * x));
    }
    s * h
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
}

impl Panel {
    fn with_halves<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64) -> Panel {
        let m = 0.5 * (a + b);
        let left = gauss8(f, a, m);
        let right = gauss8(f, m, b);
        Panel {
            a,
            b,
            left,
            right,
            err: (whole - left - right).abs(),
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Integrates `f` over `[breaks[0], breaks.last()]`, starting from the panels
/// delimited by `breaks` (which must be increasing).
pub fn integrate<F>(f: F, breaks: &[f64], tol: Tolerance) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    assert!(breaks.len() >= 2, "need at least one panel");
    let initial: Vec<Panel> = breaks
        .par_windows(2)
        .map(|w| Panel::with_halves(&f, w[0], w[1], gauss8(&f, w[0], w[1])))
        .collect();
    let mut total_err: f64 = initial.iter().map(|p| p.err).sum();
    let mut total: f64 = initial.iter().map(Panel::value).sum();
    let mut heap: BinaryHeap<Panel> = initial.into_iter().collect();
    let mut done: Vec<Panel> = Vec::new();

    while total_err > tol.target(total) {
        if heap.len() + done.len() >= tol.max_panels {
            return Err(Error::Quadrature {
                tolerance: tol.target(total),
                estimate: total_err,
                panels: heap.len() + done.len(),
            });
        }
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Cannot split further in floating point.
            done.push(p);
            continue;
        }
        let l = Panel::with_halves(&f, p.a, m, p.left);
        let r = Panel::with_halves(&f, m, p.b, p.right);
        total_err += l.err + r.err - p.err;
        total += l.value() + r.value() - p.value();
        heap.push(l);
        heap.push(r);
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = panels.iter().map(Panel::value).collect();
    let errs: Vec<f64> = panels.iter().map(|p| p.err).collect();
    let value = pairwise_sum(&values);
    let abs_error_estimate = pairwise_sum(&errs);
    if abs_error_estimate > tol.target(value) {
        return Err(Error::Quadrature {
            tolerance: tol.target(value),
            estimate: abs_error_estimate,
            panels: panels.len(),
        });
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate,
        panels: panels.len(),
    })
}

/// Evenly spaced break points with spacing at most `step`.
pub fn uniform_breaks(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 })
        .collect()
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 16 => xs.iter().sum(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x.powi(7) - 3.0 * x * x, &[0.0, 2.0], Tolerance::default()).unwrap();
        assert!((r.value - (256.0 / 8.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand() {
        let r = integrate(|x: f64| x.cos().abs(), &uniform_breaks(-PI, PI, 0.3), Tolerance {
            abs: 1e-12,
            rel: 0.0,
            max_panels: 100_000,
        })
        .unwrap();
        assert!((r.value - 4.0).abs() < 1e-11);
        assert!(r.abs_error_estimate <= 1e-12);
    }

    #[test]
    fn narrow_peak_with_fine_initial_panels() {
        let s = 1e-4;
        let breaks = uniform_breaks(0.0, 1.0, s);
        let r = integrate(|x| (-(x / s).powi(2)).exp(), &breaks, Tolerance::default()).unwrap();
        assert!((r.value - s * PI.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn panel_budget_is_enforced() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 0.0,
            max_panels: 8,
        };
        let res = integrate(|x: f64| (1.0 / x).sin(), &[1e-3, 1.0], tol);
        assert!(matches!(res, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn breaks_cover_interval() {
        let b = uniform_breaks(0.0, 1.0, 0.3);
        assert_eq!(b.len(), 5);
        assert_eq!(*b.last().unwrap(), 1.0);
        assert!(b.windows(2).all(|w| w[1] - w[0] <= 0.3 + 1e-15));
    }
}
