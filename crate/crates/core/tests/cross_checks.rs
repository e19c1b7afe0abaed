//! Simulation routes checked against the exact ones.

use heislab::oracle::collision_rows;
use heislab::paths::{simulate_pairs, tail_estimate};
use heislab::percolation::{resistance_profile, Lattice};
use heislab::reference::{exact_first_returns, srw_return_profile, theta_d_estimate};
use heislab::rng;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn simulated_collisions_match_the_exact_law() {
    let samples = 200_000;
    let counts = simulate_pairs(128, samples, 77).unwrap();
    let exact = collision_rows(&[8, 32, 128]).unwrap();
    for row in exact {
        let (p, se) = counts.collision_frequency(row.k);
        assert!(
            (p - row.p_collision).abs() <= 4.0 * se.max(1.0 / samples as f64),
            "k={}: simulated {p} vs exact {}",
            row.k,
            row.p_collision
        );
    }
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let one = in_pool(1, || tail_estimate(256, 5000, 3).unwrap());
    let four = in_pool(4, || tail_estimate(256, 5000, 3).unwrap());
    assert_eq!(one, four);
    let a = in_pool(1, || theta_d_estimate(4, 64, 3000, 9).unwrap());
    let b = in_pool(3, || theta_d_estimate(4, 64, 3000, 9).unwrap());
    assert_eq!(a, b);
}

#[test]
fn exact_experiments_are_thread_count_independent() {
    let a = in_pool(1, || srw_return_profile(40).unwrap());
    let b = in_pool(4, || srw_return_profile(40).unwrap());
    assert_eq!(a, b);
    let ra = in_pool(1, || resistance_profile(Lattice::Heisenberg, 0.9, &[3, 6], &[1, 2]).unwrap());
    let rb = in_pool(4, || resistance_profile(Lattice::Heisenberg, 0.9, &[3, 6], &[1, 2]).unwrap());
    assert_eq!(ra, rb);
}

#[test]
fn simulated_srw_returns_match_convolution() {
    let n = 12;
    let samples = 400_000u64;
    let exact = srw_return_profile(n).unwrap().probabilities[n];
    let mut hits = 0u64;
    for b in 0..rng::blocks(samples) {
        let mut stream = rng::stream(5, b);
        let mut src = rng::BitSource::new(&mut stream);
        for _ in rng::block_range(b, samples) {
            let mut g = heislab::GroupElement::IDENTITY;
            for _ in 0..n {
                g = g.apply(heislab::Generator::ALL[src.below(4) as usize]).unwrap();
            }
            hits += (g == heislab::GroupElement::IDENTITY) as u64;
        }
    }
    let p = hits as f64 / samples as f64;
    let se = (exact * (1.0 - exact) / samples as f64).sqrt();
    assert!((p - exact).abs() <= 4.0 * se, "{p} vs {exact}");
}

#[test]
fn theta_estimate_matches_exact_first_returns() {
    let h = 16;
    let exact: f64 = exact_first_returns(5, h).unwrap().iter().sum();
    let est = theta_d_estimate(5, h, 200_000, 12).unwrap();
    assert!((est.theta_hat - exact).abs() <= 4.0 * est.std_error, "{} vs {exact}", est.theta_hat);
}
