use proptest::prelude::*;
use retire_core::tax::{exact_capital_gains_tax, income_tax, income_tax_epigraph, TaxSchedule};

/// Independent evaluation of the 2024 single schedule from the published
/// per-bracket base amounts.
fn published_table(omega: f64) -> f64 {
    const ROWS: [(f64, f64, f64); 7] = [
        (0.0, 0.0, 0.10),
        (11_600.0, 1_160.0, 0.12),
        (47_150.0, 5_426.0, 0.22),
        (100_525.0, 17_168.5, 0.24),
        (191_950.0, 39_110.5, 0.32),
        (243_725.0, 55_678.5, 0.35),
        (609_350.0, 183_647.25, 0.37),
    ];
    if omega <= 0.0 {
        return 0.0;
    }
    let &(start, base, rate) = ROWS.iter().rev().find(|r| omega > r.0).unwrap();
    base + rate * (omega - start)
}

#[test]
fn matches_published_bracket_bases_on_a_grid() {
    let t = TaxSchedule::us_2024_single(0.15);
    let mut w = -50_000.0;
    while w < 1_000_000.0 {
        let a = income_tax(w, &t);
        let b = published_table(w);
        assert!((a - b).abs() <= 1e-9 * (1.0 + b), "omega {w}: {a} vs {b}");
        w += 137.0;
    }
}

#[test]
fn epigraph_max_equals_tax_on_dense_grid() {
    let t = TaxSchedule::us_2024_single(0.15);
    let pieces = income_tax_epigraph(&t);
    for k in 0..=200_000 {
        let w = -1e6 + 10.0 * k as f64;
        let top = pieces.iter().map(|p| p.eval(w)).fold(f64::MIN, f64::max);
        let phi = income_tax(w, &t);
        assert!((top - phi).abs() <= 1e-9 * phi.abs().max(1.0), "omega {w}: {top} vs {phi}");
    }
}

proptest! {
    #[test]
    fn tax_is_convex(a in -2e5f64..1e6, b in -2e5f64..1e6, lam in 0.0f64..1.0) {
        let t = TaxSchedule::us_2024_single(0.15);
        let mid = income_tax(lam * a + (1.0 - lam) * b, &t);
        let chord = lam * income_tax(a, &t) + (1.0 - lam) * income_tax(b, &t);
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn tax_is_nondecreasing(a in -2e5f64..1e6, d in 0.0f64..1e5) {
        let t = TaxSchedule::us_2024_single(0.15);
        prop_assert!(income_tax(a + d, &t) >= income_tax(a, &t));
    }

    #[test]
    fn gains_tax_monotone_in_both_arguments(g in 1.0f64..3e5, inc in -1e5f64..8e5, dg in 0.0f64..5e4, di in 0.0f64..5e4) {
        let t = TaxSchedule::us_2024_single(0.15);
        let base = exact_capital_gains_tax(g, inc, &t);
        prop_assert!(exact_capital_gains_tax(g + dg, inc, &t) >= base);
        prop_assert!(exact_capital_gains_tax(g, inc + di, &t) >= base - 1e-9);
    }
}
