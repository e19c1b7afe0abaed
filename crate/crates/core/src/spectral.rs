//! Fourier-side estimates for the weighted sum `W = Σ_{j<k} j·α_j`.
//!
//! Two transforms appear here. The exact characteristic function of `W` is
//! `φ(x) = Π_{j<k} (1 + e^{ijx}) / 2`, whose modulus is `Π |cos(jx/2)|`; it is
//! used for inversion. The bound-side integrals use the product
//! `Π_{j<k} |cos(jx)|` as written in the estimate chain. The two are related
//! by the substitution `x ↦ x/2` and the period `π` of the product, so
//! `(1/2π)∫_{-π}^{π} |φ| = (1/2π)∫_{-π}^{π} Π|cos(jx)|`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature::{integrate, uniform_breaks, QuadratureResult, Tolerance};

/// `Π_{j<k} |cos(jx)|`; the `j = 0` factor is 1.
pub fn cos_product(k: usize, x: f64) -> f64 {
    let mut p = 1.0;
    for j in 1..k {
        p *= (j as f64 * x).cos().abs();
        if p < 1e-300 {
            return 0.0;
        }
    }
    p
}

/// Distance from `x` to the nearest multiple of `π`.
pub fn dist_to_pi_lattice(x: f64) -> f64 {
    let r = x.rem_euclid(PI);
    r.min(PI - r)
}

/// Largest violation of the three identities used to fold `[-π, π]` onto
/// `[0, π/2]`: period `π`, evenness, and `x ↦ π - x`.
pub fn fold_symmetry_error(k: usize, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| {
            let p = cos_product(k, x);
            let shift = (cos_product(k, x + PI) - p).abs();
            let even = (cos_product(k, -x) - p).abs();
            let mirror = (cos_product(k, PI - x) - p).abs();
            shift.max(even).max(mirror)
        })
        .fold(0.0, f64::max)
}

/// Break points on `[a, b]`: spacing `min(1e-2, k^{-3/2}/8)` on the central
/// peak `[0, 1/k]`, and `min(1e-2, 1/(2k))` beyond it.
fn cos_product_breaks(k: usize, a: f64, b: f64) -> Vec<f64> {
    let kf = k as f64;
    let peak_end = (1.0 / kf).min(FRAC_PI_2);
    let fine = (1e-2f64).min(kf.powf(-1.5) / 8.0);
    let coarse = (1e-2f64).min(1.0 / (2.0 * kf));
    let mut breaks = Vec::new();
    if a < peak_end {
        breaks.extend(uniform_breaks(a, peak_end.min(b), fine));
    }
    if b > peak_end {
        let start = a.max(peak_end);
        let tail = uniform_breaks(start, b, coarse);
        let skip = usize::from(!breaks.is_empty());
        breaks.extend(tail.into_iter().skip(skip));
    }
    breaks
}

fn integrate_cos_product(k: usize, a: f64, b: f64) -> Result<QuadratureResult> {
    integrate(|x| cos_product(k, x), &cos_product_breaks(k, a, b), Tolerance::default())
}

/// `∫_{-π}^{π} Π_{j<k} |cos(jx)| dx`, computed as `4 ∫_0^{π/2}` after
/// checking the folding symmetries numerically.
pub fn cos_product_integral(k: usize) -> Result<QuadratureResult> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let probes: Vec<f64> = (0..32).map(|i| 0.1 + 2.9 * i as f64 / 31.0).collect();
    let err = fold_symmetry_error(k, &probes);
    if err > 1e-9 {
        return Err(invalid(format!("folding symmetry violated by {err:e}")));
    }
    Ok(integrate_cos_product(k, 0.0, FRAC_PI_2)?.scaled(4.0))
}

/// `∫_0^{1/k} Π_{j<k} |cos(jx)| dx`. On this interval every `jx < 1 < π`,
/// so the distance to the π-lattice is `jx` itself.
pub fn head_integral(k: usize) -> Result<QuadratureResult> {
    if k < 2 {
        return Err(invalid("head integral needs k >= 2"));
    }
    debug_assert!((k as f64 - 1.0) / k as f64 <= PI);
    integrate_cos_product(k, 0.0, 1.0 / k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailDecay {
    pub k: usize,
    /// `∫_{1/k}^{π/2} Π_{j<k} |cos(jx)| dx`.
    pub integral: QuadratureResult,
    /// `min_x (1/k) Σ_{j<k} dist(jx, πZ)^2` over a grid of `[1/k, π/2]`.
    pub min_quadratic_sum_rate: f64,
    pub argmin: f64,
    pub grid_points: usize,
}

/// `(1/k) Σ_{j<k} dist(jx, πZ)^2`.
pub fn quadratic_sum_rate(k: usize, x: f64) -> f64 {
    (1..k)
        .map(|j| dist_to_pi_lattice(j as f64 * x).powi(2))
        .sum::<f64>()
        / k as f64
}

pub fn tail_integral_decay(k: usize) -> Result<TailDecay> {
    if k < 4 {
        return Err(invalid("tail integral needs k >= 4"));
    }
    let kf = k as f64;
    let integral = integrate_cos_product(k, 1.0 / kf, FRAC_PI_2)?;
    // The rate varies on a scale of 1/k^2; cap the work at ~2e8 terms.
    let grid_points = (8 * k * k).min(200_000_000 / k).max(10_000);
    let lo = 1.0 / kf;
    let (min_rate, argmin) = (0..=grid_points)
        .into_par_iter()
        .map(|i| {
            let x = lo + (FRAC_PI_2 - lo) * i as f64 / grid_points as f64;
            (quadratic_sum_rate(k, x), x)
        })
        .reduce(
            || (f64::INFINITY, 0.0),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok(TailDecay {
        k,
        integral,
        min_quadratic_sum_rate: min_rate,
        argmin,
        grid_points: grid_points + 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosBoundCheck {
    pub c: f64,
    pub holds: bool,
    /// `max_x (|cos x| - exp(-c·dist(x, πZ)^2))`; positive means violated.
    pub worst_gap: f64,
    pub worst_x: f64,
    pub points_checked: usize,
}

fn cos_gap(c: f64, x: f64) -> f64 {
    let f = dist_to_pi_lattice(x);
    x.cos().abs() - (-c * f * f).exp()
}

/// Checks `|cos x| <= exp(-c·dist(x, πZ)^2)` on a uniform grid of `[0, π]`,
/// then refines every grid-local maximum of the gap by golden-section search.
/// Both sides are even and π-periodic, so `[0, π]` suffices.
pub fn cos_gaussian_bound(c: f64, grid_points: usize) -> Result<CosBoundCheck> {
    if c.is_nan() || c <= 0.0 {
        return Err(invalid("c must be positive"));
    }
    if grid_points < 1000 {
        return Err(invalid("need at least 1000 grid points"));
    }
    let h = PI / (grid_points - 1) as f64;
    let gaps: Vec<f64> = (0..grid_points).map(|i| cos_gap(c, i as f64 * h)).collect();
    let mut worst = (f64::NEG_INFINITY, 0.0);
    let mut checked = grid_points;
    for (i, &g) in gaps.iter().enumerate() {
        if g > worst.0 {
            worst = (g, i as f64 * h);
        }
        let left = if i > 0 { gaps[i - 1] } else { f64::NEG_INFINITY };
        let right = gaps.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if g >= left && g >= right && i > 0 && i + 1 < grid_points {
            let (x, gx, evals) = golden_max(|x| cos_gap(c, x), (i - 1) as f64 * h, (i + 1) as f64 * h);
            checked += evals;
            if gx > worst.0 {
                worst = (gx, x);
            }
        }
    }
    // Two ulps of slack where both sides round to 1.
    let holds = worst.0 <= 4.0 * f64::EPSILON;
    Ok(CosBoundCheck {
        c,
        holds,
        worst_gap: worst.0,
        worst_x: worst.1,
        points_checked: checked,
    })
}

pub fn verify_cos_gaussian_bound(c: f64, grid_points: usize) -> Result<bool> {
    Ok(cos_gaussian_bound(c, grid_points)?.holds)
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64, usize) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evals = 2;
    for _ in 0..60 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        evals += 1;
    }
    if f1 > f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Trapezoid rule on `[-π, π)` is exact for trigonometric polynomials of
/// degree below the node count; `e^{-ixn} φ(x)` has degree at most `k(k-1)/2`.
fn inversion_nodes(k: usize) -> usize {
    let degree = k * k.saturating_sub(1) / 2;
    (2 * (degree + 1)).next_power_of_two().max(8)
}

fn char_fn_samples(k: usize, nodes: usize) -> Vec<Complex64> {
    (0..nodes)
        .into_par_iter()
        .map(|m| {
            let x = -PI + 2.0 * PI * m as f64 / nodes as f64;
            (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| {
                let jx = j as f64 * x;
                acc * Complex64::new(0.5 * (1.0 + jx.cos()), 0.5 * jx.sin())
            })
        })
        .collect()
}

fn invert_at(samples: &[Complex64], roots: &[Complex64], n: usize) -> f64 {
    let nodes = samples.len();
    // e^{-i x_m n} with x_m = -π + 2πm/N equals (-1)^n · ω^{-mn}.
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut acc = 0.0;
    for (m, phi) in samples.iter().enumerate() {
        let r = roots[(m * n) % nodes];
        // Re(conj(r) · φ)
        acc += r.re * phi.re + r.im * phi.im;
    }
    sign * acc / nodes as f64
}

fn unit_roots(nodes: usize) -> Vec<Complex64> {
    (0..nodes)
        .map(|r| Complex64::from_polar(1.0, 2.0 * PI * r as f64 / nodes as f64))
        .collect()
}

/// `P[W = n]` by inverting the exact characteristic function of `W`.
pub fn point_mass_via_inversion(k: usize, n: usize) -> Result<f64> {
    let degree = k * k.saturating_sub(1) / 2;
    if k == 0 || n > degree {
        return Err(invalid(format!("need k >= 1 and 0 <= n <= {degree}")));
    }
    let nodes = inversion_nodes(k);
    Ok(invert_at(&char_fn_samples(k, nodes), &unit_roots(nodes), n))
}

/// `P[W = n]` for all `n = 0..=k(k-1)/2` by inversion.
pub fn inverted_weight_law(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let degree = k * (k - 1) / 2;
    let nodes = inversion_nodes(k);
    let samples = char_fn_samples(k, nodes);
    let roots = unit_roots(nodes);
    Ok((0..=degree)
        .into_par_iter()
        .map(|n| invert_at(&samples, &roots, n))
        .collect())
}

/// `(1/2π) ∫_{-π}^{π} |φ(x)| dx`, which bounds every point mass of `W` by the
/// triangle inequality. Equal to `cos_product_integral(k) / 2π`.
pub fn inversion_bound(k: usize) -> Result<f64> {
    Ok(cos_product_integral(k)?.value / (2.0 * PI))
}

/// One row of the Fourier experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierRow {
    pub k: usize,
    pub integral: f64,
    pub head: f64,
    pub tail: f64,
    /// `integral · k^{3/2}`.
    pub k32_scaled: f64,
    pub abs_error_estimate: f64,
}

pub fn fourier_row(k: usize) -> Result<FourierRow> {
    let total = cos_product_integral(k)?;
    let (head, tail) = if k >= 2 {
        let head = head_integral(k)?.value;
        let tail = integrate_cos_product(k, 1.0 / k as f64, FRAC_PI_2)?.value;
        (head, tail)
    } else {
        (total.value / 4.0, 0.0)
    };
    Ok(FourierRow {
        k,
        integral: total.value,
        head,
        tail,
        k32_scaled: total.value * (k as f64).powf(1.5),
        abs_error_estimate: total.abs_error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::CountWeightTable;

    #[test]
    fn integral_closed_forms() {
        let one = cos_product_integral(1).unwrap();
        assert!((one.value - 2.0 * PI).abs() < 1e-8);
        let two = cos_product_integral(2).unwrap();
        assert!((two.value - 4.0).abs() < 1e-8);
        assert!(cos_product_integral(0).is_err());
    }

    #[test]
    fn head_closed_form_and_containment() {
        let h = head_integral(2).unwrap();
        assert!((h.value - 0.5f64.sin()).abs() < 1e-10);
        for k in [2, 3, 8, 40] {
            let total = cos_product_integral(k).unwrap().value;
            assert!(head_integral(k).unwrap().value <= total / 4.0 + 1e-12);
        }
        assert!(head_integral(1).is_err());
    }

    #[test]
    fn head_plus_tail_is_quarter_total() {
        for k in [4usize, 9, 16, 50] {
            let total = cos_product_integral(k).unwrap();
            let head = head_integral(k).unwrap();
            let tail = tail_integral_decay(k).unwrap().integral;
            let slack = total.abs_error_estimate / 4.0
                + head.abs_error_estimate
                + tail.abs_error_estimate
                + 1e-12;
            assert!((total.value / 4.0 - head.value - tail.value).abs() <= slack, "k={k}");
        }
    }

    #[test]
    fn integral_against_brute_riemann_sum() {
        // Independent check: a midpoint sum on a fine uniform grid over [-π, π].
        for k in [3usize, 5, 8] {
            let n = 2_000_000;
            let h = 2.0 * PI / n as f64;
            let brute: f64 = (0..n).map(|i| cos_product(k, -PI + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            let q = cos_product_integral(k).unwrap().value;
            assert!((q - brute).abs() < 1e-6, "k={k}: {q} vs {brute}");
        }
    }

    #[test]
    fn symmetry_identities() {
        let xs: Vec<f64> = (0..1000).map(|i| -PI + 2.0 * PI * (i as f64 + 0.37) / 1000.0).collect();
        for k in [2, 7, 16, 64] {
            assert!(fold_symmetry_error(k, &xs) <= 1e-12, "k={k}");
        }
    }

    #[test]
    fn gaussian_bound_witnesses() {
        assert!(verify_cos_gaussian_bound(0.5, 100_000).unwrap());
        let bad = cos_gaussian_bound(0.7, 100_000).unwrap();
        assert!(!bad.holds);
        assert!(bad.worst_x > 0.0 && bad.worst_x < PI);
        assert!(verify_cos_gaussian_bound(1e-12, 10_000).unwrap());
        assert!(cos_gaussian_bound(0.0, 10_000).is_err());
        assert!(cos_gaussian_bound(0.5, 10).is_err());
    }

    #[test]
    fn tail_properties() {
        let t = tail_integral_decay(16).unwrap();
        assert!(t.min_quadratic_sum_rate > 0.0);
        // cos(jπ/2) for odd j is zero up to rounding of π/2.
        assert!(cos_product(16, FRAC_PI_2) < 1e-100);
        assert!(cos_product(4, FRAC_PI_2) < 1e-15);
        let t32 = tail_integral_decay(32).unwrap();
        let t64 = tail_integral_decay(64).unwrap();
        assert!(t64.integral.value.ln() - t32.integral.value.ln() < -1.0);
        assert!(tail_integral_decay(3).is_err());
    }

    #[test]
    fn inversion_spot_values() {
        assert!((point_mass_via_inversion(2, 0).unwrap() - 0.5).abs() < 1e-14);
        assert!((point_mass_via_inversion(4, 3).unwrap() - 0.25).abs() < 1e-14);
        assert!(point_mass_via_inversion(4, 7).is_err());
        for k in [1usize, 5, 20] {
            let law = inverted_weight_law(k).unwrap();
            assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn inversion_matches_table() {
        CountWeightTable::sweep(40, |t| {
            let law = inverted_weight_law(t.k()).unwrap();
            for (a, b) in law.iter().zip(t.weight_marginal()) {
                assert!((a - b).abs() <= 1e-6);
            }
        })
        .unwrap();
    }

    #[test]
    fn inversion_bound_matches_direct_modulus_integral() {
        for k in [2usize, 5, 12] {
            let direct = integrate(
                |x| (0..k).map(|j| (0.5 * j as f64 * x).cos().abs()).product::<f64>(),
                &uniform_breaks(-PI, PI, 1e-2),
                Tolerance::default(),
            )
            .unwrap()
            .value
                / (2.0 * PI);
            let via = inversion_bound(k).unwrap();
            assert!((direct - via).abs() < 1e-6 * via.max(1e-3), "k={k}");
            let max = inverted_weight_law(k).unwrap().into_iter().fold(0.0, f64::max);
            assert!(max <= via + 1e-9);
        }
    }
}
