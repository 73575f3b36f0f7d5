mod common;

use common::{brute_d2, brute_u2, random_chain};
use edgelab::chain::AdditiveFunctional;
use edgelab::hexagon::{bridge_kernel, hexagon_d2, hexagon_u2, Hexagon};
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn contraction_matches_enumeration() {
    for seed in 0..20u64 {
        let (chain, f) = random_chain(seed, 4, 6);
        for n in 3..=6 {
            let u = hexagon_u2(&chain, &f, n).unwrap();
            assert!((u - brute_u2(&chain, &f, n)).abs() <= 1e-10, "seed {seed} n {n}");
            for xi in [0.3, 1.0, 3.0] {
                let d = hexagon_d2(&chain, &f, n, xi).unwrap();
                assert!((d - brute_d2(&chain, &f, n, xi)).abs() <= 1e-10, "seed {seed} n {n} xi {xi}");
            }
        }
    }
}

#[test]
fn bridge_rows_sum_to_one() {
    let (chain, _) = random_chain(42, 4, 5);
    for n in 2..=5 {
        let b = bridge_kernel(&chain, n).unwrap();
        let (mx, mz, my) = b.dims();
        for x in 0..mx {
            for z in 0..mz {
                let s: f64 = (0..my).map(|y| b.get(x, z, y)).sum();
                assert!((s - 1.0).abs() < 1e-12);
                for y in 0..my {
                    assert!((b.get(x, z, y) - common::bridge(&chain, n, x, z, y)).abs() < 1e-14);
                }
            }
        }
    }
}

#[test]
fn bridge_out_of_range() {
    let (chain, _) = random_chain(1, 3, 4);
    assert!(bridge_kernel(&chain, 1).is_err());
    assert!(bridge_kernel(&chain, 5).is_err());
    let (chain, f) = random_chain(1, 3, 4);
    assert!(hexagon_u2(&chain, &f, 2).is_err());
    assert!(hexagon_u2(&chain, &f, 5).is_err());
}

#[test]
fn small_xi_taylor() {
    let (chain, f) = random_chain(5, 4, 6);
    let xi = 1e-3;
    let bound = xi * xi * (6.0 * f.norm_sup()).powi(4) / 12.0;
    for n in 3..=6 {
        let u = hexagon_u2(&chain, &f, n).unwrap();
        let d = hexagon_d2(&chain, &f, n, xi).unwrap();
        assert!((d / (xi * xi) - u).abs() <= bound, "n {n}");
        assert_eq!(hexagon_d2(&chain, &f, n, 0.0).unwrap(), 0.0);
    }
}

fn shifted(f: &AdditiveFunctional, k: usize, c: f64) -> AdditiveFunctional {
    let mut tables = f.tables().to_vec();
    tables[k - 1].mapv_inplace(|v| v + c);
    AdditiveFunctional::new(tables).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constant_shift_invariance(seed in 0u64..1000, k in 1usize..=6, c in -5.0f64..5.0) {
        let (chain, f) = random_chain(seed, 4, 6);
        let g = shifted(&f, k, c);
        for n in 3..=6 {
            prop_assert!((hexagon_u2(&chain, &f, n).unwrap() - hexagon_u2(&chain, &g, n).unwrap()).abs() < 1e-10);
            prop_assert!((hexagon_d2(&chain, &f, n, 1.3).unwrap() - hexagon_d2(&chain, &g, n, 1.3).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn coboundaries_vanish(seed in 0u64..1000, amp in 0.1f64..10.0) {
        let (chain, _) = random_chain(seed, 4, 6);
        let a: Vec<Vec<f64>> = (1..=7)
            .map(|j| (0..chain.size(j)).map(|x| amp * (((seed + 13 * j as u64 + x as u64) as f64).sin())).collect())
            .collect();
        let tables = (1..=6)
            .map(|k| Array2::from_shape_fn((chain.size(k), chain.size(k + 1)), |(x, y)| a[k][y] - a[k - 1][x]))
            .collect();
        let f = AdditiveFunctional::new(tables).unwrap();
        for n in 3..=6 {
            prop_assert!(hexagon_u2(&chain, &f, n).unwrap().abs() < 1e-10);
            prop_assert!(hexagon_d2(&chain, &f, n, 2.0).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn d2_range_and_monotone_aggregate(seed in 0u64..1000, xi in 0.01f64..20.0) {
        let (chain, f) = random_chain(seed, 3, 8);
        let h = Hexagon::new(&chain, &f).unwrap();
        let mut prev = 0.0;
        for n in 3..=8 {
            let d = h.d2(n, xi).unwrap();
            prop_assert!((0.0..=4.0).contains(&d));
            prop_assert!(h.u2(n).unwrap() >= 0.0);
            let big = h.big_d(n, xi).unwrap();
            prop_assert!(big >= prev);
            prev = big;
        }
    }
}
