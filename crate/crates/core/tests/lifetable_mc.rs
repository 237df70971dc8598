use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use retire_core::lifetable::{LifeTable, Sex};

#[test]
fn sampled_lifetimes_match_expectancy() {
    for (sex, age) in [(Sex::Female, 65), (Sex::Male, 65), (Sex::Female, 85)] {
        let table = LifeTable::synthetic(sex);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50_000;
        let draws: Vec<f64> = (0..n).map(|_| (table.sample_death_age(age, &mut rng).unwrap() - age) as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let e = table.derived_expectancy(age).unwrap();
        assert!((mean - e).abs() < 4.0 * sd / (n as f64).sqrt(), "{sex:?} {age}: {mean} vs {e}");
        assert!(draws.iter().all(|&d| d >= 0.0 && d <= (table.terminal_age() - age) as f64));
    }
}

#[test]
fn synthetic_expectancies_at_retirement() {
    let f = LifeTable::synthetic(Sex::Female).expected_remaining(65).unwrap();
    let m = LifeTable::synthetic(Sex::Male).expected_remaining(65).unwrap();
    assert!((f - 20.0).abs() < 0.05 && (m - 17.5).abs() < 0.05, "{f} {m}");
}
