use edf_calibration::classical::log_lrs;
use edf_calibration::isotonic::pav_fit;
use edf_calibration::murphy::decompose;
use edf_calibration::{Family, TestSample};
use proptest::prelude::*;

/// Minimiser of the weighted squared error over all non-decreasing fits that
/// are constant on tied ranks, by enumeration of contiguous partitions.
fn brute_force(y: &[f64], w: &[f64], ranks: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| ranks[a].total_cmp(&ranks[b]));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut group_of = vec![0; y.len()];
    let mut last = f64::NAN;
    for &i in &order {
        if ranks[i] != last {
            groups.push((0.0, 0.0));
            last = ranks[i];
        }
        let g = groups.len() - 1;
        groups[g].0 += w[i];
        groups[g].1 += w[i] * y[i];
        group_of[i] = g;
    }
    let m = groups.len();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..(1 << (m - 1)) {
        let mut values = vec![0.0; m];
        let mut start = 0;
        let mut prev = f64::NEG_INFINITY;
        let mut feasible = true;
        for end in 0..m {
            if end == m - 1 || mask & (1 << end) != 0 {
                let (sw, swy) = groups[start..=end].iter().fold((0.0, 0.0), |a, g| (a.0 + g.0, a.1 + g.1));
                let mean = swy / sw;
                if mean < prev - 1e-12 {
                    feasible = false;
                    break;
                }
                prev = mean;
                values[start..=end].iter_mut().for_each(|v| *v = mean);
                start = end + 1;
            }
        }
        if !feasible {
            continue;
        }
        let sse: f64 = (0..y.len()).map(|i| w[i] * (y[i] - values[group_of[i]]).powi(2)).sum();
        if sse < best.0 - 1e-12 {
            best = (sse, values);
        }
    }
    (0..y.len()).map(|i| best.1[group_of[i]]).collect()
}

fn fitted(y: &[f64], w: &[f64], ranks: &[f64]) -> Vec<f64> {
    let fit = pav_fit(y, w, ranks).unwrap();
    ranks.iter().map(|&r| fit.predict(r)).collect()
}

fn small_sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0.1f64..5.0, n),
            prop::collection::vec((0u8..4).prop_map(f64::from), n),
        )
    })
}

fn medium_sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..60).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0.1f64..5.0, n),
            prop::collection::vec((0u16..30).prop_map(f64::from), n),
        )
    })
}

proptest! {
    #[test]
    fn pav_matches_brute_force((y, w, r) in small_sample()) {
        let got = fitted(&y, &w, &r);
        let want = brute_force(&y, &w, &r);
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn pav_is_monotone_and_idempotent((y, w, r) in medium_sample()) {
        let once = fitted(&y, &w, &r);
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| r[a].total_cmp(&r[b]));
        for pair in order.windows(2) {
            prop_assert!(once[pair[0]] <= once[pair[1]] + 1e-12);
        }
        let twice = fitted(&once, &w, &r);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pav_depends_on_ranks_only((y, w, r) in medium_sample()) {
        let warped: Vec<f64> = r.iter().map(|x| (0.3 * x).exp() + x.powi(3)).collect();
        prop_assert_eq!(fitted(&y, &w, &r), fitted(&y, &w, &warped));
    }

    #[test]
    fn pav_blocks_balance_weights((y, w, r) in medium_sample()) {
        let fit = pav_fit(&y, &w, &r).unwrap();
        let mut resid = vec![0.0; fit.n_blocks()];
        let mut weight = vec![0.0; fit.n_blocks()];
        for i in 0..y.len() {
            let k = fit.block_index(r[i]);
            resid[k] += w[i] * (y[i] - fit.block_values()[k]);
            weight[k] += w[i];
        }
        for k in 0..fit.n_blocks() {
            prop_assert!(resid[k].abs() < 1e-9 * (1.0 + weight[k]));
            prop_assert!((weight[k] - fit.block_weights()[k]).abs() < 1e-9);
        }
        prop_assert!(fit.breakpoints().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn lrs_nonnegative_and_bridges_to_mcb(
        pairs in prop::collection::vec((0.05f64..4.0, 0u8..8, 0.5f64..3.0), 2..80),
    ) {
        let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
        let mu: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let v: Vec<f64> = pairs.iter().map(|p| p.2).collect();
        let s = TestSample::from_columns(Family::Poisson, 1.0, y, mu, Some(v)).unwrap();
        let l = log_lrs(&s).unwrap();
        prop_assert!(l >= -1e-10);
        let d = decompose(&s).unwrap();
        prop_assert!((l - s.total_weight() * d.mcb).abs() <= 1e-8 * (1.0 + l.abs()));
    }
}
