use proptest::prelude::*;
use shiftshap::data::{load_csv, per_sample_loss, perf, split};
use shiftshap::{Error, MetricKind, MetricSpec, Normalization, TabularDataset};

fn dataset(schema: &[&str], rows: &[Vec<f64>]) -> TabularDataset {
    TabularDataset::from_rows(schema.iter().map(|s| s.to_string()).collect(), rows).unwrap()
}

proptest! {
    #[test]
    fn split_partitions_rows(n in 2usize..500, fraction in 0.05f64..0.95, seed in any::<u64>()) {
        match split(n, fraction, seed) {
            Ok(s) => {
                let mut all: Vec<usize> = s.fit_indices.iter().chain(&s.eval_indices).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(s.fit_indices.len(), (n as f64 * fraction).round() as usize);
                prop_assert_eq!(split(n, fraction, seed).unwrap(), s);
            }
            Err(e) => prop_assert!(matches!(e, Error::SplitTooSmall { .. }), "{}", e),
        }
    }

    #[test]
    fn unit_weights_give_the_plain_mean(losses in prop::collection::vec(0.0f64..10.0, 1..50)) {
        let ones = vec![1.0; losses.len()];
        let mean = perf(&losses, None, Normalization::Plain).unwrap();
        let plain = perf(&losses, Some(&ones), Normalization::Plain).unwrap();
        let selfn = perf(&losses, Some(&ones), Normalization::SelfNormalized).unwrap();
        prop_assert!((mean - plain).abs() <= 1e-12 * (1.0 + mean.abs()));
        prop_assert!((mean - selfn).abs() <= 1e-12 * (1.0 + mean.abs()));
    }

    #[test]
    fn self_normalized_ignores_weight_scale(
        pairs in prop::collection::vec((0.0f64..10.0, 0.01f64..5.0), 1..50),
        scale in 0.1f64..100.0,
    ) {
        let (losses, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scaled: Vec<f64> = w.iter().map(|x| x * scale).collect();
        let a = perf(&losses, Some(&w), Normalization::SelfNormalized).unwrap();
        let b = perf(&losses, Some(&scaled), Normalization::SelfNormalized).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        let pa = perf(&losses, Some(&w), Normalization::Plain).unwrap();
        let pb = perf(&losses, Some(&scaled), Normalization::Plain).unwrap();
        prop_assert!((pa * scale - pb).abs() <= 1e-10 * (1.0 + pb.abs()));
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 1..30)) {
        let ds = dataset(&["a", "b", "c"], &rows);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        ds.write_csv(&path).unwrap();
        let back = load_csv(&path, &["b".to_string()]).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn bounded_losses(p in 0.0f64..=1.0, y in 0u8..2) {
        let ds = dataset(&["p", "y"], &[vec![p, y as f64]]);
        for kind in [MetricKind::Brier, MetricKind::ZeroOne, MetricKind::SquaredError] {
            let l = per_sample_loss(&ds, &MetricSpec::prediction(kind, "p", "y")).unwrap()[0];
            prop_assert!((0.0..=1.0).contains(&l));
        }
        let log = per_sample_loss(&ds, &MetricSpec::prediction(MetricKind::LogLoss, "p", "y")).unwrap()[0];
        prop_assert!(log.is_finite() && log >= 0.0);
    }
}

#[test]
fn metric_values() {
    let ds = dataset(&["p", "y"], &[vec![0.8, 1.0], vec![0.8, 0.0], vec![0.5, 1.0], vec![0.0, 1.0]]);
    let loss = |kind| per_sample_loss(&ds, &MetricSpec::prediction(kind, "p", "y")).unwrap();
    let brier = loss(MetricKind::Brier);
    assert!((brier[0] - 0.04).abs() < 1e-15 && (brier[1] - 0.64).abs() < 1e-15);
    assert_eq!(loss(MetricKind::ZeroOne), vec![0.0, 1.0, 0.0, 1.0]);
    let log = loss(MetricKind::LogLoss);
    assert!((log[0] + 0.8f64.ln()).abs() < 1e-15);
    assert!((log[1] + 0.2f64.ln()).abs() < 1e-12);
    assert!((log[3] - 1e-12f64.ln().abs()).abs() < 1e-9);
}

#[test]
fn prediction_metrics_reject_bad_inputs() {
    let out_of_range = dataset(&["p", "y"], &[vec![1.5, 1.0]]);
    let spec = MetricSpec::prediction(MetricKind::Brier, "p", "y");
    assert!(matches!(per_sample_loss(&out_of_range, &spec), Err(Error::PredictionOutOfRange { .. })));
    let non_binary = dataset(&["p", "y"], &[vec![0.5, 2.0]]);
    assert!(matches!(per_sample_loss(&non_binary, &spec), Err(Error::LabelNotBinary { .. })));
    let squared = MetricSpec::prediction(MetricKind::SquaredError, "p", "y");
    assert_eq!(per_sample_loss(&non_binary, &squared).unwrap(), vec![2.25]);
}

#[test]
fn csv_errors_name_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n1,2\n3,abc\n").unwrap();
    let err = load_csv(&path, &[]).unwrap_err();
    assert!(matches!(&err, Error::NonNumeric { row: 1, column, .. } if column == "y"), "{err}");
    std::fs::write(&path, "x,y\n1,true\n").unwrap();
    assert_eq!(load_csv(&path, &[]).unwrap().row(0), &[1.0, 1.0]);
    std::fs::write(&path, "x,y\n1,NaN\n").unwrap();
    assert!(matches!(load_csv(&path, &[]), Err(Error::NonFinite { .. })));
    assert!(matches!(load_csv(&path, &["z".into()]), Err(Error::MissingColumn(c)) if c == "z"));
}
