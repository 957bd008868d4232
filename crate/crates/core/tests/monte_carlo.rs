//! Seeded Monte Carlo properties of the selectors and the oracle on AR(1).

use blockpick_core::oracle::{oracle_grid, OracleSpec};
use blockpick_core::seed::derive_seed;
use blockpick_core::{
    bias_hat, block_grid, hhj_oracle_select, hhj_select, nppi_select, optimal_block_approx,
    pw_select, subsample_mse_curve, theorem1_residual, true_mse_curve, CurveKind, HhjConfig,
    NppiConfig, ProcessModel, PwConfig, SmoothStatistic, SubsamplePlan,
};

const MEAN: SmoothStatistic = SmoothStatistic::Mean;

fn ar1() -> ProcessModel {
    ProcessModel::ar1(0.5, 1.0)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn ell0(n: usize) -> f64 {
    optimal_block_approx(&ar1().theoretical_constants().unwrap(), n)
}

#[test]
fn oracle_centred_subsample_curve_has_interior_minimum() {
    let grid = block_grid(45, 4.0).unwrap();
    let interior = (0..200u64)
        .filter(|&r| {
            let series = ar1().generate(2000, derive_seed(101, &[r])).unwrap();
            let plan = SubsamplePlan {
                m: 45,
                grid: grid.clone(),
                stride: 1,
                budget: 2,
                seed: r,
            };
            let curve = subsample_mse_curve(&series, MEAN, &plan, 4.0, CurveKind::Oracle).unwrap();
            assert!(curve.entries.values().all(|v| v.is_finite() && *v > 0.0));
            let b = curve.argmin().unwrap();
            b != grid[0] && b != *grid.last().unwrap()
        })
        .count();
    assert!(interior >= 180, "interior minimum in {interior} / 200");
}

#[test]
fn averaged_oracle_curves_match_true_subsample_mse() {
    let (m, n, reps) = (40, 200, 2000);
    let grid = block_grid(m, 4.0).unwrap();
    let plan = SubsamplePlan {
        m,
        grid: grid.clone(),
        stride: 1,
        budget: 2,
        seed: 0,
    };
    let mut avg = vec![0.0; grid.len()];
    for r in 0..reps {
        let series = ar1().generate(n, derive_seed(202, &[r])).unwrap();
        let curve = subsample_mse_curve(&series, MEAN, &plan, 4.0, CurveKind::Oracle).unwrap();
        for (a, v) in avg.iter_mut().zip(curve.entries.values()) {
            *a += v / reps as f64;
        }
    }
    let truth = true_mse_curve(&ar1(), MEAN, m, &grid, 40_000, 4.0, 2, 303).unwrap();
    let worst = grid
        .iter()
        .zip(&avg)
        .map(|(b, a)| (a - truth.curve.entries[b]).abs() / truth.curve.entries[b])
        .fold(0.0f64, f64::max);
    assert!(worst < 0.10, "max relative deviation {worst}");
}

/// `ell_opt` at `n` from a cached-size oracle run.
fn ell_opt(n: usize, seed: u64) -> f64 {
    OracleSpec::with_default_grid(ar1(), MEAN, n, 5000, seed)
        .unwrap()
        .run()
        .unwrap()
        .ell_opt as f64
}

#[test]
fn oracle_hhj_no_worse_than_empirical_hhj() {
    let n = 4000;
    let opt = ell_opt(n, 404);
    let mut cfg = HhjConfig::defaults_for(n);
    cfg.m = 63;
    let (mut plain, mut oracle) = (Vec::new(), Vec::new());
    for r in 0..200u64 {
        let series = ar1().generate(n, derive_seed(405, &[r])).unwrap();
        let a = hhj_select(&series, MEAN, &cfg, r).unwrap().block_length as f64;
        let b = hhj_oracle_select(&series, MEAN, &cfg, 4.0, r)
            .unwrap()
            .block_length as f64;
        plain.push((a - opt).abs() / opt);
        oracle.push((b - opt).abs() / opt);
    }
    let (p, o) = (median(plain), median(oracle));
    assert!(o <= p, "oracle median error {o} vs empirical {p}");
}

fn selector_median(select: impl Fn(&blockpick_core::TimeSeries, u64) -> usize) -> f64 {
    let picks = (0..200u64)
        .map(|r| select(&ar1().generate(4000, derive_seed(505, &[r])).unwrap(), r) as f64)
        .collect();
    median(picks)
}

#[test]
fn hhj_median_within_factor_two_of_l0() {
    let cfg = HhjConfig::defaults_for(4000);
    let med = selector_median(|s, r| hhj_select(s, MEAN, &cfg, r).unwrap().block_length);
    let l0 = ell0(4000);
    assert!(med >= l0 / 2.0 && med <= 2.0 * l0, "median {med}, l0 {l0}");
}

#[test]
fn nppi_median_within_factor_two_of_l0() {
    let cfg = NppiConfig::defaults_for(4000);
    let med = selector_median(|s, r| nppi_select(s, MEAN, &cfg, r).unwrap().block_length);
    let l0 = ell0(4000);
    assert!(med >= l0 / 2.0 && med <= 2.0 * l0, "median {med}, l0 {l0}");
}

#[test]
fn pw_median_within_factor_one_and_a_half_of_l0() {
    let cfg = PwConfig::defaults_for(4000);
    assert_eq!(cfg.bandwidth, 6);
    let med = selector_median(|s, _| pw_select(s, MEAN, &cfg).unwrap().block_length);
    let l0 = ell0(4000);
    assert!(med >= l0 / 1.5 && med <= 1.5 * l0, "median {med}, l0 {l0}");
}

#[test]
fn doubling_difference_estimates_minus_b0() {
    let ell2 = NppiConfig::defaults_for(4000).ell2;
    let reps = 500;
    let mean = (0..reps)
        .map(|r| {
            let s = ar1().generate(4000, derive_seed(606, &[r])).unwrap();
            ell2 as f64 * bias_hat(&s, ell2, MEAN, 2, 0).unwrap()
        })
        .sum::<f64>()
        / reps as f64;
    let target = -16.0 / 3.0;
    assert!((mean - target).abs() <= 0.25 * target.abs(), "mean {mean}");
}

#[test]
fn oracle_argmin_is_seed_stable() {
    let grid: Vec<usize> = (1..=24).collect();
    let a = true_mse_curve(&ar1(), MEAN, 500, &grid, 5000, 4.0, 2, 707).unwrap();
    let b = true_mse_curve(&ar1(), MEAN, 500, &grid, 5000, 4.0, 2, 708).unwrap();
    let (la, lb) = (a.curve.argmin().unwrap(), b.curve.argmin().unwrap());
    assert!(la.abs_diff(lb) <= 3, "{la} vs {lb}");
}

#[test]
fn oracle_curve_is_resolved() {
    let grid = oracle_grid(500, 4.0).unwrap();
    assert_eq!(grid[0], 2);
    let grid: Vec<usize> = (1..=*grid.last().unwrap()).collect();
    let mc = true_mse_curve(&ar1(), MEAN, 500, &grid, 5000, 4.0, 2, 808).unwrap();
    let best = mc.curve.argmin().unwrap();
    let gap = mc.curve.entries[&1] - mc.curve.entries[&best];
    assert!(gap > 5.0 * mc.se[&1], "gap {gap}, se {}", mc.se[&1]);
}

#[test]
fn white_noise_oracle_curve_is_positive() {
    let model = ProcessModel::m_dependent(0, 1.0);
    let grid = [1, 2, 4, 8];
    let mc = true_mse_curve(&model, MEAN, 200, &grid, 200, 1.0, 2, 9).unwrap();
    assert!(mc.curve.entries.values().all(|v| *v > 0.0));
}

#[test]
fn expansion_residual_shrinks_on_the_leading_scale() {
    let small = theorem1_residual(&ar1(), MEAN, 250, 10_000, 2, 909).unwrap();
    let large = theorem1_residual(&ar1(), MEAN, 2000, 10_000, 2, 910).unwrap();
    let scaled =
        |c: &blockpick_core::oracle::ExpansionCheck, n: f64| c.max_abs_residual * n.powf(2.0 / 3.0);
    let (s, l) = (scaled(&small, 250.0), scaled(&large, 2000.0));
    assert!(l < s, "scaled residuals {s} (n=250) vs {l} (n=2000)");
    assert!(small.ratio > 0.0 && large.ratio > 0.0);
}

#[test]
fn oracle_ratio_in_band_at_2000() {
    let check = theorem1_residual(&ar1(), MEAN, 2000, 10_000, 2, 911).unwrap();
    assert!((0.6..=1.6).contains(&check.ratio), "ratio {}", check.ratio);
}
