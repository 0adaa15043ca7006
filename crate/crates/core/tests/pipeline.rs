use xtructure::applications::{detect_outliers, find_similar, OutlierScoring, SimilarityConfig, SimilarityMethod};
use xtructure::comparison::{compare_xtructures, ComparisonConfig};
use xtructure::learner::{learn_column, learn_parallel};
use xtructure::minhash::triple_set;
use xtructure::model::Hyperparameters;
use xtructure::persist::{from_json, to_json};
use xtructure::synth::{synth_generate, SynthKind};

#[test]
fn learning_is_deterministic() {
    let col = synth_generate(SynthKind::MixedNaId, 2000, 0.02, 3).unwrap().values;
    let p = Hyperparameters::default();
    let a = learn_column(&col, &p, false).unwrap();
    let b = learn_column(&col, &p, false).unwrap();
    assert_eq!(to_json(&a), to_json(&b));
}

#[test]
fn parallel_matches_serial_on_regular_columns() {
    let p = Hyperparameters::default();
    for kind in [SynthKind::Zip, SynthKind::Phone, SynthKind::ProductId] {
        let col = synth_generate(kind, 4000, 0.0, 11).unwrap().values;
        let serial = learn_column(&col, &p, false).unwrap().serialize().unwrap();
        for workers in [2, 3, 8] {
            assert_eq!(learn_parallel(&col, &p, workers, false).unwrap().serialize().unwrap(), serial, "{kind}");
        }
    }
}

#[test]
fn reloaded_models_compare_identically() {
    let cfg = ComparisonConfig::default();
    let p = Hyperparameters::default();
    let a = learn_column(synth_generate(SynthKind::Ipv4, 500, 0.0, 1).unwrap().values, &p, false).unwrap();
    let b = learn_column(synth_generate(SynthKind::Ipv4, 500, 0.0, 2).unwrap().values, &p, false).unwrap();
    let before = compare_xtructures(&a, &b, &cfg, 9).unwrap();
    let (a2, b2) = (from_json(&to_json(&a)).unwrap(), from_json(&to_json(&b)).unwrap());
    assert_eq!(compare_xtructures(&a2, &b2, &cfg, 9).unwrap(), before);
    assert_eq!(triple_set(&a2).unwrap(), triple_set(&a).unwrap());
}

#[test]
fn lsh_reports_a_subset_of_all_pairs_candidates() {
    let p = Hyperparameters::default();
    let models: Vec<_> = [SynthKind::Zip, SynthKind::Zip, SynthKind::CurrencyCode, SynthKind::CurrencyCode]
        .iter()
        .enumerate()
        .map(|(i, &k)| learn_column(synth_generate(k, 300, 0.0, i as u64).unwrap().values, &p, false).unwrap())
        .collect();
    let cfg = SimilarityConfig::default();
    let lsh = find_similar(&models, SimilarityMethod::Lsh, 0.5, &cfg).unwrap();
    let pairs: Vec<_> = lsh.iter().map(|s| (s.a, s.b)).collect();
    assert_eq!(pairs, [(0, 1), (2, 3)]);
}

#[test]
fn outlier_report_covers_every_row() {
    let col = synth_generate(SynthKind::Zip, 500, 0.02, 4).unwrap();
    let x = learn_column(&col.values[..100], &Hyperparameters::default(), false).unwrap();
    let rows: Vec<(usize, &str)> = col.values.iter().map(String::as_str).enumerate().collect();
    let report = detect_outliers("zip", &x, &rows, 0.5, OutlierScoring::WeightedSum).unwrap();
    assert_eq!(report.entries.len(), 500);
    let flagged: Vec<usize> = report.entries.iter().filter(|e| e.is_outlier).map(|e| e.row).collect();
    let corrupted: Vec<usize> = (0..500).filter(|&i| col.ground_truth[i]).collect();
    assert!(flagged.iter().all(|r| corrupted.contains(r)), "{flagged:?} vs {corrupted:?}");
}
