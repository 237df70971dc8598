use proptest::prelude::*;
use retire_core::market::*;
use retire_core::sim::market_paths;

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let c = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
    c / (sa * sb)
}

#[test]
fn mixture_sample_moments() {
    let g = GaussianMixture::paper();
    let xs = sample_market_returns(&g, 100_000, 1);
    let (m, s) = mean_std(&xs);
    assert!((m - 0.117).abs() <= 0.005, "mean {m}");
    assert!((s - 0.204).abs() <= 0.010, "std {s}");
    assert!((m - g.mean()).abs() < 0.002);
    assert!((s - g.std_dev()).abs() < 0.003);
}

#[test]
fn mixture_samples_match_cdf() {
    let g = GaussianMixture::paper();
    let mut xs = sample_market_returns(&g, 100_000, 2);
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = g.cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS distance {ks}");
}

/// 1,000 paths from the 1962 observation through 2023, pooled.
fn pooled() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let paths = market_paths(&MarketModel::paper(), RATES_1962, 2023 - 1962, 1_000, 7);
    let mut m = vec![];
    let mut t = vec![];
    let mut i = vec![];
    for y in paths.iter().flatten() {
        m.push(y.market);
        t.push(y.treasury);
        i.push(y.inflation);
    }
    (m, t, i)
}

#[test]
fn rate_path_statistics() {
    let (_, t, i) = pooled();
    let (tm, ts) = mean_std(&t);
    let (im, _) = mean_std(&i);
    let c = corr(&t, &i);
    assert!((tm - 0.053).abs() <= 0.005, "treasury mean {tm}");
    assert!((ts - 0.028).abs() <= 0.005, "treasury vol {ts}");
    assert!((im - 0.035).abs() <= 0.005, "inflation mean {im}");
    assert!((c - 0.70).abs() <= 0.10, "correlation {c}");
}

#[test]
fn portfolio_statistics() {
    let (m, t, i) = pooled();
    let ret = |spec: &PortfolioSpec| -> Vec<f64> { (0..m.len()).map(|k| spec.real_return(m[k], t[k], i[k])).collect() };
    let (cm, cs) = mean_std(&ret(&PortfolioSpec::conservative()));
    let (bm, bs) = mean_std(&ret(&PortfolioSpec::balanced()));
    assert!((cm - 0.031).abs() <= 0.005, "20/80 mean {cm}");
    assert!((cs - 0.044).abs() <= 0.010, "20/80 vol {cs}");
    assert!((bm - 0.057).abs() <= 0.010, "60/40 mean {bm}");
    assert!((bs - 0.121).abs() <= 0.020, "60/40 vol {bs}");
}

#[test]
fn var_fit_recovers_its_own_parameters() {
    let model = VarModel::paper();
    let path = simulate_var(&model, model.mean, 20_000, 5);
    let fit = fit_var(&path).unwrap();
    for r in 0..2 {
        assert!((fit.mean[r] - model.mean[r]).abs() < 0.01, "mean {:?}", fit.mean);
        for c in 0..2 {
            assert!((fit.coefficient[r][c] - model.coefficient[r][c]).abs() < 0.03, "A {:?}", fit.coefficient);
            let rel = (fit.noise_cov[r][c] - model.noise_cov[r][c]).abs() / model.noise_cov[r][c].abs();
            assert!(rel < 0.1, "noise {:?}", fit.noise_cov);
        }
    }
}

#[test]
fn forecasts_converge_to_the_mean() {
    let model = VarModel::paper();
    let f = model.forecast([0.15, 0.12], 200);
    assert!((f[0] - model.mean[0]).abs() < 1e-6 && (f[1] - model.mean[1]).abs() < 1e-6);
    assert_eq!(model.forecast(model.mean, 7), model.mean);
}

proptest! {
    #[test]
    fn forecast_composes(t in -0.05f64..0.2, i in -0.05f64..0.2, a in 0usize..20, b in 0usize..20) {
        let model = VarModel::paper();
        let once = model.forecast([t, i], a + b);
        let twice = model.forecast(model.forecast([t, i], a), b);
        prop_assert!((once[0] - twice[0]).abs() < 1e-12 && (once[1] - twice[1]).abs() < 1e-12);
    }

    #[test]
    fn transform_round_trips(z in -0.5f64..0.5) {
        let t = PwlTransform::paper();
        prop_assert!((t.invert(t.apply(z)) - z).abs() < 1e-12);
    }
}
