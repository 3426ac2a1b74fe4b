use std::path::Path;

use fairform::ingestion::{apply_exclusions, bundled_epscor_states, bundled_gdp_table, load_pool};
use fairform::metrics::*;
use fairform::profile::{ProtectedFlags, ThresholdConfig};
use fairform::score_pool;
use fairform::selection::*;
use fairform::synth::{generate_pool, SynthSpec};
use proptest::prelude::*;

/// (label, D_G, UL, Y, F) as printed in the published results table.
const PUBLISHED: [(&str, f64, f64, f64, f64); 6] = [
    ("chi/uga", 67.18, 32.88, 67.12, 67.15),
    ("chi/mga", 55.5, 20.67, 79.33, 65.31),
    ("mod/uga", 50.51, 17.47, 82.53, 62.67),
    ("mod/mga", 53.00, -2.42, 102.42, 69.85),
    ("comm/uga", 46.80, 55.37, 44.63, 45.69),
    ("comm/mga", 50.56, 27.99, 72.01, 59.41),
];

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 / (1.0 / a + 1.0 / b)
}

fn sigcomm_store() -> ProfileStore {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sigcomm2017_current_pc.csv");
    let (kept, _) = apply_exclusions(&load_pool(&path, None).unwrap().records).unwrap();
    let (_, scored) =
        score_pool(&kept, &bundled_gdp_table(), &bundled_epscor_states(), &ThresholdConfig::fixed(700.0)).unwrap();
    ProfileStore::new(scored).unwrap()
}

#[test]
fn published_rows_are_self_consistent() {
    for (label, d, ul, y, f) in PUBLISHED {
        assert!((f_measure(d, y) - f).abs() <= 0.05, "{label}");
        assert!((f_measure(d, y) - harmonic(d, y)).abs() < 1e-9);
        assert!((utility_savings_pct(ul) - y).abs() <= 0.01, "{label}");
    }
}

#[test]
fn published_averages_are_column_means() {
    let rows: Vec<ResultRow> = PUBLISHED
        .iter()
        .map(|&(label, d_gain, ul_pct, y_pct, f)| ResultRow { label: label.into(), d_gain, ul_pct, y_pct, f })
        .collect();
    for (algo, want) in [("uga", (54.83, 35.24, 64.76, 58.50)), ("mga", (53.02, 15.41, 84.59, 64.86))] {
        let picked: Vec<&ResultRow> = rows.iter().filter(|r| r.label.ends_with(algo)).collect();
        let avg = average_row(algo, &picked).unwrap();
        for (got, exp) in [(avg.d_gain, want.0), (avg.ul_pct, want.1), (avg.y_pct, want.2), (avg.f, want.3)] {
            assert!((got - exp).abs() <= 0.01, "{algo}: {got} vs {exp}");
        }
    }
}

#[test]
fn sigcomm_current_composition() {
    let store = sigcomm_store();
    let base = baseline_expectation(&store, GroupSet::Six).unwrap();
    let pct = |g| base.proportions[&g];
    let expected = [
        (Group::Female, 8.70),
        (Group::NonWhite, 30.43),
        (Group::Junior, 34.78),
        (Group::Developing, 4.35),
        (Group::Epscor, 0.0),
        (Group::LowRankUniversity, 26.09),
    ];
    for (g, want) in expected {
        assert!((pct(g) - want).abs() <= 0.01, "{g:?}: {}", pct(g));
    }
    assert!((base.utility - 29.43).abs() <= 0.01, "{}", base.utility);
}

#[test]
fn mean_h_index_of_a_known_group() {
    // A 20-member group whose h-indices sum to 491 has mean 24.55.
    let hs: Vec<u32> = (0..20).map(|i| if i < 11 { 25 } else { 24 }).collect();
    assert_eq!(hs.iter().sum::<u32>(), 491);
    let members: Vec<ScoredCandidate> = hs
        .iter()
        .enumerate()
        .map(|(i, &h)| ScoredCandidate::new(format!("m{i}"), ProtectedFlags::default(), h))
        .collect();
    let refs: Vec<&ScoredCandidate> = members.iter().collect();
    assert!((utility_of(&refs).unwrap() - 24.55).abs() < 1e-9);
}

#[test]
fn rho_uses_percent_scale_either_way() {
    // Gains are ratios, so fractions and percentages give the same rho.
    assert!((rho_gain(0.3043, 0.087) - rho_gain(30.43, 8.7)).abs() < 1e-9);
    assert!((rho_gain(30.43, 8.7) - 249.77).abs() < 0.01);
}

#[test]
fn edge_cases() {
    assert_eq!(rho_gain(0.0, 0.0), 0.0);
    assert!(rho_gain(0.2, 0.0).is_infinite());
    assert_eq!(diversity_gain(&[f64::INFINITY]).unwrap(), 100.0);
    assert_eq!(diversity_gain(&[300.0, 0.0]).unwrap(), 50.0);
    assert!(diversity_gain(&[]).is_err());
    assert!(utility_loss_pct(10.0, 0.0).is_err());
    assert_eq!(f_measure(0.0, 0.0), 0.0);
    assert_eq!(f_measure(0.0, 100.0), 0.0);
}

#[test]
fn selection_against_itself_is_neutral() {
    let store = sigcomm_store();
    let sel = mga_select(store.candidates(), 8, 1).unwrap();
    let base = baseline_from_selection(&sel, &store, GroupSet::Six).unwrap();
    let r = evaluate(&sel, &store, &base, GroupSet::Six).unwrap();
    assert_eq!((r.d_gain, r.ul_pct, r.y_pct, r.f), (0.0, 0.0, 100.0, 0.0));
}

#[test]
fn monte_carlo_converges_to_expectation() {
    let pool = generate_pool(&SynthSpec { pool_size: 300, seed: 4, ..SynthSpec::default() }).unwrap();
    let spec = SynthSpec::default();
    let (_, scored) =
        score_pool(&pool.records, &bundled_gdp_table(), &bundled_epscor_states(), &spec.threshold_config()).unwrap();
    let store = ProfileStore::new(scored).unwrap();
    let exact = baseline_expectation(&store, GroupSet::Six).unwrap();
    let mc = baseline_monte_carlo(&store, 30, 4_000, 17, GroupSet::Six).unwrap();
    for (g, p) in &exact.proportions {
        assert!((mc.proportions[g] - p).abs() <= 1.0, "{g:?}");
    }
    assert!(((mc.utility - exact.utility) / exact.utility).abs() <= 0.01);
    assert_eq!(mc, baseline_monte_carlo(&store, 30, 4_000, 17, GroupSet::Six).unwrap());
}

#[test]
fn report_json_marks_unbounded_gain_as_null() {
    let store = sigcomm_store();
    let sel = uga_select(store.candidates(), 6, 2).unwrap();
    let base = baseline_expectation(&store, GroupSet::Six).unwrap();
    let report = evaluate(&sel, &store, &base, GroupSet::Six).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    let epscor = json["groups"].as_array().unwrap().iter().find(|r| r["group"] == "epscor").unwrap();
    assert_eq!(report.rho()[&Group::Epscor].is_infinite(), epscor["rho"].is_null());
    let back: EvaluationReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);
}

proptest! {
    #[test]
    fn f_bounded_by_inputs(d in 0.0f64..=100.0, y in -50.0f64..200.0) {
        let f = f_measure(d, y);
        if d + y > 0.0 && d > 0.0 && y > 0.0 {
            prop_assert!(f <= 2.0 * d.min(y) + 1e-9);
            prop_assert!(f <= (d + y) / 2.0 + 1e-9);
            prop_assert!(f >= d.min(y) - 1e-9);
        }
    }

    #[test]
    fn diversity_gain_never_exceeds_cap(rhos in prop::collection::vec(prop_oneof![-100.0f64..1e6, Just(f64::INFINITY)], 1..8)) {
        let d = diversity_gain(&rhos).unwrap();
        prop_assert!(d <= GAIN_CAP);
    }

    #[test]
    fn ul_plus_y_is_one_hundred(a in 0.1f64..100.0, b in 0.1f64..100.0) {
        let ul = utility_loss_pct(a, b).unwrap();
        prop_assert!((ul + utility_savings_pct(ul) - 100.0).abs() < 1e-9);
    }
}
