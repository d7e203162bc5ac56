mod common;

use ndarray::{s, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavefolio_core::backtest::{run, RollingPlan, Strategy};
use wavefolio_core::benchmarks::{
    mv_monte_carlo, olmar_update, simplex_project, BuildSettings, LagParams, Olmar, StrategyFactory, StrategySpec,
};
use wavefolio_core::features::{lag_features, paper_features, ta_features, Dataset, PipelineConfig};
use wavefolio_core::indicators::IndicatorParams;
use wavefolio_core::rrl::{feature_matrix, sharpe};

use common::{random_panel, returns_dataset};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn projection_matches_grid_search() {
    // Two stocks: scan w1 on a 1e-4 grid for the closest simplex point.
    for v in [[0.6, 0.6], [1.3, -0.2], [0.1, 0.05], [-2.0, 5.0]] {
        let best = (0..=10_000)
            .map(|i| {
                let w1 = i as f64 * 1e-4;
                (dist(&[w1, 1.0 - w1], &v), w1)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap()
            .1;
        let p = simplex_project(&v);
        assert!((p[0] - best).abs() <= 1e-4, "{v:?}: {p:?} vs {best}");
    }
}

#[test]
fn projection_satisfies_optimality_conditions() {
    // w is the projection iff v - w equals a common θ on the support and
    // v <= θ off it.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let m = rng.gen_range(1..8);
        let v: Vec<f64> = (0..m).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let w = simplex_project(&v);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let support: Vec<usize> = (0..m).filter(|&i| w[i] > 0.0).collect();
        let theta = v[support[0]] - w[support[0]];
        for i in 0..m {
            if w[i] > 0.0 {
                assert!((v[i] - w[i] - theta).abs() < 1e-12);
            } else {
                assert!(v[i] <= theta + 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        a in prop::collection::vec(-5.0f64..5.0, 4),
        b in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        let pa = simplex_project(&a);
        let pb = simplex_project(&b);
        let ppa = simplex_project(&pa);
        prop_assert!(dist(&pa, &ppa) < 1e-12);
        prop_assert!(dist(&pa, &pb) <= dist(&a, &b) + 1e-12);
        prop_assert!(pa.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn olmar_stays_on_the_simplex(
        x in prop::collection::vec(0.5f64..1.5, 3),
        raw in prop::collection::vec(0.01f64..1.0, 3),
        eps in 0.5f64..20.0,
    ) {
        let s: f64 = raw.iter().sum();
        let b: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let next = olmar_update(&b, &x, eps);
        prop_assert!(next.iter().all(|v| *v >= 0.0));
        prop_assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

fn noisy_returns(seed: u64, periods: usize, m: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((periods, m), |_| 0.0003 + 0.015 * rng.sample::<f64, _>(StandardNormal))
}

#[test]
fn olmar_below_every_relative_never_trades() {
    let ds = returns_dataset(noisy_returns(8, 400, 3));
    let plan = RollingPlan::new(ds.horizon(), 100, 100).unwrap();
    // ε = 0 is below any attainable b·x̃, which is positive.
    let mut olmar = Olmar::fixed(0.0, 5);
    let res = run(&ds, &plan, &mut olmar, 0.001).unwrap();
    assert!(res.weights.iter().all(|w| w == &vec![1.0 / 3.0; 3]));
}

#[test]
fn olmar_tuning_picks_a_grid_point_and_ignores_cost() {
    let ds = returns_dataset(noisy_returns(9, 400, 3));
    let plan = RollingPlan::new(ds.horizon(), 100, 100).unwrap();
    let build = || Olmar::new(vec![1.01, 1.1, 5.0], vec![3, 10, 30]);
    let mut a = build();
    let ra = run(&ds, &plan, &mut a, 0.0).unwrap();
    let mut b = build();
    let rb = run(&ds, &plan, &mut b, 0.005).unwrap();
    let (eps, w) = a.chosen().unwrap();
    assert!([1.01, 1.1, 5.0].contains(&eps) && [3, 10, 30].contains(&w));
    assert_eq!(a.chosen(), b.chosen());
    assert_eq!(ra.weights, rb.weights);
}

#[test]
fn mv_dominant_stock_gets_the_weight() {
    // Perfectly correlated; stock 0 has the higher mean and the lower variance.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let z: Vec<f64> = (0..100).map(|_| rng.sample(StandardNormal)).collect();
    let r = Array2::from_shape_fn((100, 2), |(t, a)| if a == 0 { 0.002 + 0.01 * z[t] } else { 0.001 + 0.02 * z[t] });
    let out = mv_monte_carlo(r.view(), 50_000, 11).unwrap();
    assert!(out.weights[0] > 0.9, "{:?}", out.weights);
    assert_eq!(out, mv_monte_carlo(r.view(), 50_000, 11).unwrap());
}

#[test]
fn mv_beats_uniform_in_sample() {
    let mut wins = 0;
    let trials = 100;
    for seed in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let m = rng.gen_range(2..5);
        let r = noisy_returns(2000 + seed, 100, m);
        let out = mv_monte_carlo(r.view(), 50_000, seed).unwrap();
        let port = |w: &[f64]| -> Vec<f64> { r.rows().into_iter().map(|row| row.dot(&ndarray::arr1(w))).collect() };
        let uniform = vec![1.0 / m as f64; m];
        // Mean over population std, as used for the selection.
        if sharpe(&port(&out.weights)).value >= sharpe(&port(&uniform)).value {
            wins += 1;
        }
    }
    println!("MV in-sample Sharpe >= uniform on {wins}/{trials} windows");
    assert!(wins >= 99);
}

#[test]
fn lag_features_shape_and_zero_returns() {
    let ds = returns_dataset(Array2::zeros((50, 2)));
    let f = lag_features(&ds, 1, 10..20).unwrap();
    let x = feature_matrix(f.slice(s![0, .., ..]), &[0.3, 0.7]);
    assert_eq!(x.dim(), (2, 3));
    assert_eq!(x.row(1).to_vec(), vec![1.0, 0.0, 0.7]);
}

fn dataset(seed: u64, m: usize, horizon: usize) -> Dataset {
    Dataset::build(&random_panel(seed, m, 63 + horizon), &IndicatorParams::default()).unwrap()
}

#[test]
fn ta_features_equal_full_pca_without_thresholding() {
    let ds = dataset(21, 3, 256);
    let cfg = PipelineConfig {
        pca_ratio: 1.0,
        threshold_factor: 0.0,
        ..PipelineConfig::default()
    };
    let pf = paper_features(&ds, &cfg).unwrap();
    assert_eq!(pf.n, 11);
    let ta = ta_features(&ds);
    assert_eq!(ta.dim(), (256, 3, 11));
    // Rotating the denoised scores back gives the z-scored indicators.
    for a in 0..3 {
        let model = &pf.models[a];
        for t in 0..256 {
            for j in 0..11 {
                let back: f64 =
                    model.mean[j] + (0..11).map(|k| pf.features[[t, a, k]] * model.components[k][j]).sum::<f64>();
                assert!((back - ta[[t, a, j]]).abs() < 1e-9, "stock {a} t {t} col {j}");
            }
        }
    }
}

#[test]
fn every_strategy_emits_simplex_weights() {
    let ds = dataset(5, 3, 360);
    let plan = RollingPlan::new(ds.horizon(), 100, 100).unwrap();
    let mut settings = BuildSettings::default();
    settings.trainer.max_epochs = 20;
    let factory = StrategyFactory::new(&ds, settings);
    let mut specs = StrategySpec::all();
    specs[2] = StrategySpec::Mv(wavefolio_core::benchmarks::MvParams { n_samples: 2000, seed: None });
    specs[3] = StrategySpec::LagRrl(LagParams { lags: vec![1, 2, 3] });
    for spec in &specs {
        let mut s = factory.build(spec, 0.001).unwrap();
        let res = run(&ds, &plan, s.as_mut(), 0.001).unwrap();
        assert_eq!(res.strategy, spec.name());
        assert_eq!(res.weights.len(), 260);
        for w in &res.weights {
            assert!(w.iter().all(|v| *v >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn rrl_strategies_are_deterministic_and_warm_start_runs() {
    let ds = dataset(6, 2, 330);
    let plan = RollingPlan::new(ds.horizon(), 100, 100).unwrap();
    for warm_start in [false, true] {
        let mut settings = BuildSettings {
            warm_start,
            ..BuildSettings::default()
        };
        settings.trainer.max_epochs = 10;
        let factory = StrategyFactory::new(&ds, settings);
        let mut a = factory.build(&StrategySpec::PcaDwtRrl, 0.001).unwrap();
        let mut b = factory.build(&StrategySpec::PcaDwtRrl, 0.001).unwrap();
        let ra = run(&ds, &plan, a.as_mut(), 0.001).unwrap();
        let rb = run(&ds, &plan, b.as_mut(), 0.001).unwrap();
        assert_eq!(ra, rb);
        assert!(ra.windows.iter().all(|w| w.epochs.is_some()));
    }
}

#[test]
fn carry_over_flag_changes_only_the_start() {
    let ds = dataset(7, 2, 200);
    let plan = RollingPlan::new(ds.horizon(), 100, 100).unwrap();
    let run_with = |carry_over: bool| {
        let mut settings = BuildSettings {
            carry_over,
            ..BuildSettings::default()
        };
        settings.trainer.max_epochs = 5;
        let factory = StrategyFactory::new(&ds, settings);
        let mut s: Box<dyn Strategy> = factory.build(&StrategySpec::TaRrl, 0.0).unwrap();
        run(&ds, &plan, s.as_mut(), 0.0).unwrap()
    };
    let with = run_with(true);
    let without = run_with(false);
    // Same parameters, different initial holdings: the paths differ but both
    // are valid.
    assert_eq!(with.windows[0].sharpe_log, without.windows[0].sharpe_log);
    assert_ne!(with.weights[0], without.weights[0]);
}
