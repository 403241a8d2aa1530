use itertools::Itertools;
use nalgebra::DMatrix;
use proptest::prelude::*;

use tscausal::dataset::{difference, standardize, TimeSeriesDataset};
use tscausal::graphs::{from_json, structural_distance, to_json, Collapse, Graph};
use tscausal::LaggedDag;
use tscausal::lingam::solve_assignment;
use tscausal::stattests::{adf_test, mackinnon_p_value, AdfSpec};
use tscausal::synthbench::{random_truth, NoiseFamily, MAX_RADIUS};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

// Lower-triangular B0 (acyclic by construction) plus `lags` dense lag matrices.
fn lagged_dag() -> impl Strategy<Value = LaggedDag> {
    (2usize..5, 1usize..3).prop_flat_map(|(n, lags)| {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n * n), lags + 1).prop_map(move |mats| {
            let adjacency = mats
                .into_iter()
                .enumerate()
                .map(|(lag, v)| {
                    let mut m = DMatrix::from_row_slice(n, n, &v);
                    if lag == 0 {
                        for i in 0..n {
                            for j in i..n {
                                m[(i, j)] = 0.0;
                            }
                        }
                    }
                    m
                })
                .collect();
            LaggedDag::new(names(n), adjacency).unwrap()
        })
    })
}

fn series(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len).prop_map(|steps| {
        // A stationary AR(1) path.
        steps
            .iter()
            .scan(0.0, |acc, s| {
                *acc = 0.7 * *acc + s;
                Some(*acc)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_json_round_trip(dag in lagged_dag()) {
        for g in [Graph::Lagged(dag.clone()), Graph::Summary(dag.collapse())] {
            let back = from_json(&to_json(&g).unwrap()).unwrap();
            prop_assert_eq!(back, g);
        }
    }

    #[test]
    fn collapse_is_idempotent(dag in lagged_dag()) {
        let once = dag.collapse();
        prop_assert_eq!(once.collapse(), once);
    }

    #[test]
    fn distance_to_self_is_zero(dag in lagged_dag(), threshold in 0.0f64..0.5) {
        let d = structural_distance(&dag, &dag, threshold).unwrap();
        prop_assert_eq!(d.hamming, 0);
        prop_assert_eq!(d.precision, 1.0);
        prop_assert_eq!(d.recall, 1.0);
    }

    #[test]
    fn distance_is_symmetric_in_hamming(a in lagged_dag(), seed in any::<u64>()) {
        let n = a.variable_names().len();
        let b = LaggedDag::new(
            names(n),
            a.adjacency()
                .iter()
                .enumerate()
                .map(|(lag, m)| m.map(|v| if (v.to_bits() ^ seed ^ lag as u64).is_multiple_of(3) { 0.0 } else { v }))
                .collect(),
        )
        .unwrap();
        let ab = structural_distance(&a, &b, 0.1).unwrap();
        let ba = structural_distance(&b, &a, 0.1).unwrap();
        prop_assert_eq!(ab.hamming, ba.hamming);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
    }

    #[test]
    fn adf_statistic_is_scale_invariant(x in series(120), scale in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        for spec in AdfSpec::ALL {
            let a = adf_test(&x, spec, Some(2)).unwrap();
            let b = adf_test(&scaled, spec, Some(2)).unwrap();
            prop_assert!((a.test_statistic - b.test_statistic).abs() < 1e-6 * a.test_statistic.abs().max(1.0));
        }
    }

    #[test]
    fn mackinnon_p_value_is_monotone(a in -8.0f64..4.0, b in -8.0f64..4.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        for spec in AdfSpec::ALL {
            let (p_lo, p_hi) = (mackinnon_p_value(lo, spec), mackinnon_p_value(hi, spec));
            prop_assert!((0.0..=1.0).contains(&p_lo) && (0.0..=1.0).contains(&p_hi));
            prop_assert!(p_lo <= p_hi + 1e-12);
        }
    }

    #[test]
    fn transforms_invert(cols in prop::collection::vec(series(40), 1..4)) {
        let n = cols.len();
        let values = DMatrix::from_fn(40, n, |i, j| cols[j][i] + 10.0);
        let ds = TimeSeriesDataset::from_matrix(names(n), values).unwrap();
        let (d, log) = difference(&ds, 1).unwrap();
        let (s, log2) = standardize(&d).unwrap();
        let log = log.then(log2);
        let replayed = log.replay(&ds).unwrap();
        prop_assert_eq!(replayed.values(), s.values());
        let back = log.invert(&s).unwrap();
        prop_assert_eq!(back.dates(), ds.dates());
        prop_assert!((back.values() - ds.values()).abs().max() < 1e-9);
    }

    #[test]
    fn assignment_matches_brute_force(n in 1usize..6, v in prop::collection::vec(0.0f64..10.0, 25)) {
        let cost = DMatrix::from_fn(n, n, |i, j| v[i * 5 + j]);
        let got = solve_assignment(&cost).unwrap();
        let best = (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        prop_assert!((got.cost - best).abs() < 1e-9);
        prop_assert!(got.row_to_col.iter().copied().sorted().eq(0..n));
    }

    #[test]
    fn random_truths_are_stable(seed in any::<u64>(), n in 2usize..6, lags in 1usize..3) {
        let t = random_truth("p", n, lags, &[NoiseFamily::Laplace, NoiseFamily::Uniform], seed).unwrap();
        prop_assert!(t.spectral_radius().unwrap() < MAX_RADIUS);
        prop_assert!(t.is_lingam_identifiable());
        t.validate().unwrap();
    }
}
