//! Preprocessing and symbolic layer against quadrature/enumeration
//! oracles, plus property tests of the documented invariants.

use proptest::prelude::*;

use tda_core::preprocess::{delay_embed, fnn_ratio, sliding_windows, z_normalize};
use tda_core::symbolic::{esax, gaussian_breakpoints, paa, sax};
use tda_core::TimeSeries;
use tda_testutil::{normal_quantile_bisection, paa_split_mass};

#[test]
fn breakpoints_match_quadrature_oracle() {
    for a in [2usize, 4, 7, 10, 20] {
        let fast = gaussian_breakpoints(a).unwrap();
        for (i, b) in fast.iter().enumerate() {
            let oracle = normal_quantile_bisection((i + 1) as f64 / a as f64);
            assert!(
                (b - oracle).abs() < 1e-4,
                "a={a}, i={i}: {b} vs oracle {oracle}"
            );
        }
    }
}

#[test]
fn sax_words_match_independent_breakpoint_table() {
    use rand::{Rng, SeedableRng};
    // independent table from the quadrature oracle, same upper-tie rule
    let a = 7usize;
    let oracle_table: Vec<f64> = (1..a)
        .map(|i| normal_quantile_bisection(i as f64 / a as f64))
        .collect();
    let oracle_symbol = |x: f64| oracle_table.iter().filter(|b| **b <= x).count() as u8;
    for seed in 0..20u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..64).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let z = z_normalize(&raw).unwrap();
        let features = paa(&z, 8).unwrap();
        let word = sax(&features, a).unwrap();
        let expected: Vec<u8> = features.values.iter().map(|x| oracle_symbol(*x)).collect();
        assert_eq!(word.symbols, expected, "seed {seed}");
    }
}

#[test]
fn paa_matches_split_mass_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let n = rng.gen_range(2..24usize);
        let w = rng.gen_range(1..=n);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fast = paa(&v, w).unwrap();
        let oracle = paa_split_mass(&v, w);
        for (x, y) in fast.values.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-10, "paa {x} vs split-mass {y}");
        }
    }
}

#[test]
fn fnn_matches_direct_neighbor_scan() {
    use rand::{Rng, SeedableRng};
    // independent re-implementation: embed both dimensions separately
    // and scan neighbors quadratically
    fn oracle(v: &[f64], m: usize, tau: usize, r_tol: f64) -> f64 {
        let emb_m: Vec<Vec<f64>> = delay_embed(v, m, tau).unwrap().points;
        let emb_m1: Vec<Vec<f64>> = delay_embed(v, m + 1, tau).unwrap().points;
        let count = emb_m1.len();
        let mut false_count = 0;
        for i in 0..count {
            let mut nearest = None;
            let mut nearest_d = f64::INFINITY;
            for j in 0..count {
                if i == j {
                    continue;
                }
                let d: f64 = emb_m[i]
                    .iter()
                    .zip(&emb_m[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if d < nearest_d {
                    nearest_d = d;
                    nearest = Some(j);
                }
            }
            let j = nearest.unwrap();
            let lift = (emb_m1[i][m] - emb_m1[j][m]).abs();
            let is_false = if nearest_d <= 1e-12 {
                lift > 1e-12
            } else {
                lift / nearest_d > r_tol
            };
            if is_false {
                false_count += 1;
            }
        }
        false_count as f64 / count as f64
    }
    for seed in 0..8u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..60).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (m, tau) in [(1usize, 1usize), (2, 1), (2, 3), (3, 2)] {
            let fast = fnn_ratio(&v, m, tau, 10.0).unwrap();
            let slow = oracle(&v, m, tau, 10.0);
            assert!(
                (fast - slow).abs() < 1e-12,
                "seed {seed} m {m} tau {tau}: {fast} vs {slow}"
            );
        }
    }
}

#[test]
fn esax_flattening_against_manual_example() {
    // two segments of [min mean max] computed by hand for a = 4
    let v = [-2.0, 0.0, 0.0, 2.0];
    let word = esax(&v, 2, 4).unwrap();
    // segment 1: min -2 -> 0, mean -1 -> 0, max 0 -> 2 (upper tie)
    // segment 2: min 0 -> 2, mean 1 -> 3, max 2 -> 3
    assert_eq!(word.triples, vec![(0, 0, 2), (2, 3, 3)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn znorm_zero_mean(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let z = z_normalize(&v).unwrap();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        prop_assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn znorm_idempotent(v in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let z = z_normalize(&v).unwrap();
        let zz = z_normalize(&z).unwrap();
        for (a, b) in z.iter().zip(&zz) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn window_count_formula(n in 2usize..60, len in 1usize..60, stride in 1usize..10) {
        let series = TimeSeries::from_values("s", (0..n).map(|i| i as f64).collect()).unwrap();
        match sliding_windows(&series, len, stride) {
            Ok(ws) => {
                prop_assert!(len <= n);
                prop_assert_eq!(ws.len(), (n - len) / stride + 1);
            }
            Err(_) => prop_assert!(len > n),
        }
    }

    #[test]
    fn sax_monotone_under_quantization(
        v in prop::collection::vec(-3f64..3.0, 4..32),
        a in 2usize..12
    ) {
        let features = paa(&v, v.len().min(6)).unwrap();
        let word = sax(&features, a).unwrap();
        // symbols respect the ordering of the underlying means
        for i in 0..features.values.len() {
            for j in 0..features.values.len() {
                if features.values[i] <= features.values[j] {
                    prop_assert!(word.symbols[i] <= word.symbols[j]);
                }
            }
        }
    }

    #[test]
    fn esax_ordered_everywhere(
        v in prop::collection::vec(-3f64..3.0, 4..32),
        w in 1usize..8,
        a in 2usize..12
    ) {
        let w = w.min(v.len());
        let word = esax(&v, w, a).unwrap();
        for (lo, mid, hi) in &word.triples {
            prop_assert!(lo <= mid && mid <= hi);
        }
    }
}
