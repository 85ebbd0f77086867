use std::path::{Path, PathBuf};

use ncvx_core::datagen::{CovarianceSpec, GeneratorSpec, LabelModel, NoiseSpec};
use ncvx_core::DataSet;
use ncvx_harness::io::{read_csv, save_dataset_csv, write_trace_csv, TRACE_HEADER};
use ncvx_harness::{corrupt_targets, load_dataset, normalize_features, Format, HarnessError, LabelMode, LoadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn libsvm_lines_are_densified() {
    let opts = LoadOptions { dim: Some(3), ..LoadOptions::default() };
    let d = load_dataset(&fixture("small.libsvm"), Format::Libsvm, &opts).unwrap();
    assert_eq!((d.len(), d.dim()), (3, 3));
    assert_eq!(d.x(0), &[0.5, 0.0, -2.0]);
    assert_eq!(d.y(0), 1.0);
    assert_eq!((d.x(1), d.y(1)), (&[0.0, 1.5, 0.0][..], 0.0));
    assert_eq!(d.targets(), &[1.0, 0.0, 1.0]);
}

#[test]
fn libsvm_dimension_is_inferred_or_checked() {
    let d = load_dataset(&fixture("small.libsvm"), Format::Libsvm, &LoadOptions::default()).unwrap();
    assert_eq!(d.dim(), 3);
    let wide = LoadOptions { dim: Some(5), ..LoadOptions::default() };
    assert_eq!(load_dataset(&fixture("small.libsvm"), Format::Libsvm, &wide).unwrap().x(0), &[0.5, 0.0, -2.0, 0.0, 0.0]);
    let narrow = LoadOptions { dim: Some(2), ..LoadOptions::default() };
    assert!(matches!(
        load_dataset(&fixture("small.libsvm"), Format::Libsvm, &narrow),
        Err(HarnessError::Parse { line: 2, .. })
    ));
}

#[test]
fn libsvm_parse_errors_carry_line_numbers() {
    match load_dataset(&fixture("bad_value.libsvm"), Format::Libsvm, &LoadOptions::default()) {
        Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other:?}"),
    }
    let zero = ncvx_harness::io::read_libsvm("1 0:1.0\n".as_bytes(), Path::new("inline"), None);
    assert!(matches!(zero, Err(HarnessError::Parse { line: 1, .. })));
}

#[test]
fn multiclass_needs_a_filter() {
    let path = fixture("multiclass.libsvm");
    assert!(matches!(
        load_dataset(&path, Format::Libsvm, &LoadOptions::default()),
        Err(HarnessError::InvalidData(_))
    ));
    let opts = LoadOptions { labels: Some(LabelMode::TwoClass { negative: 1.0, positive: 2.0 }), ..LoadOptions::default() };
    let d = load_dataset(&path, Format::Libsvm, &opts).unwrap();
    assert_eq!(d.targets(), &[0.0, 1.0, 1.0]);
    assert_eq!(d.x(2), &[-0.5, 0.0]);
}

#[test]
fn csv_target_column() {
    let opts = LoadOptions { target_column: Some("y".into()), ..LoadOptions::default() };
    let d = load_dataset(&fixture("small.csv"), Format::Csv, &opts).unwrap();
    assert_eq!((d.x(0), d.y(0)), (&[1.0, 2.0][..], 3.0));
    let by_a = read_csv("a,b,y\n1,2,3\n".as_bytes(), Path::new("inline"), Some("a")).unwrap();
    assert_eq!(by_a, (vec![vec![2.0, 3.0]], vec![1.0]));
    assert!(read_csv("a,b,y\n1,2,3\n".as_bytes(), Path::new("inline"), Some("z")).is_err());
    let bad = read_csv("a,b,y\n1,2,3\n4,x,6\n".as_bytes(), Path::new("inline"), None);
    assert!(matches!(bad, Err(HarnessError::Parse { line: 3, .. })));
}

#[test]
fn csv_round_trip() {
    let spec = GeneratorSpec {
        labels: LabelModel::Regression { noise: NoiseSpec::new(0.1, 5.0).unwrap() },
        covariance: CovarianceSpec { rotate: true, seed: 3, ..CovarianceSpec::new(6, 100.0) },
        theta_seed: 2,
    };
    let data = spec.generate(300, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    save_dataset_csv(&data, &path).unwrap();
    let back = load_dataset(&path, Format::Csv, &LoadOptions::default()).unwrap();
    assert_eq!((back.len(), back.dim()), (300, 6));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    for i in 0..300 {
        assert!(close(data.y(i), back.y(i)));
        assert!(data.x(i).iter().zip(back.x(i)).all(|(a, b)| close(*a, *b)));
    }
}

#[test]
fn normalization_examples() {
    let d = DataSet::from_rows(&[[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]], vec![0.0; 3]).unwrap();
    let z = normalize_features(&d);
    assert_eq!((0..3).map(|i| z.x(i)[0]).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
    assert_eq!((0..3).map(|i| z.x(i)[1]).collect::<Vec<_>>(), vec![0.0; 3]);
    let ranges = z.meta().normalization.as_ref().unwrap();
    assert_eq!((ranges[0].min, ranges[0].max, ranges[1].min), (0.0, 10.0, 7.0));

    let mut r = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..500).map(|_| (0..8).map(|j| r.random_range(-1e3..1e3) * (j + 1) as f64).collect()).collect();
    let z = normalize_features(&DataSet::from_rows(&rows, vec![0.0; 500]).unwrap());
    assert!(z.features().as_slice().iter().all(|v| (-1.0 - 1e-12..=1.0 + 1e-12).contains(v)));
}

fn regression_data(n: usize) -> DataSet {
    let spec = GeneratorSpec {
        labels: LabelModel::Regression { noise: NoiseSpec::new(0.0, 1.0).unwrap() },
        covariance: CovarianceSpec::new(3, 2.0),
        theta_seed: 1,
    };
    spec.generate(n, 9).unwrap()
}

fn added_noise_variance(before: &DataSet, after: &DataSet) -> f64 {
    let d: Vec<f64> = before.targets().iter().zip(after.targets()).map(|(a, b)| b - a).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64
}

#[test]
fn corruption_examples() {
    let data = regression_data(10_000);
    let clean = corrupt_targets(&data, &NoiseSpec::new(0.0, 50.0).unwrap(), 1).unwrap();
    let v = added_noise_variance(&data, &clean);
    assert!((0.9..=1.1).contains(&v), "{v}");

    let noise = NoiseSpec::new(0.1, 5.0).unwrap();
    let a = corrupt_targets(&data, &noise, 2).unwrap();
    assert_eq!(a.targets(), corrupt_targets(&data, &noise, 2).unwrap().targets());
    assert_eq!(a.features(), data.features());
    let v = added_noise_variance(&data, &a);
    assert!((3.06..=3.74).contains(&v), "{v}");
    assert_eq!(a.meta().corruption.as_ref().unwrap().seed, 2);
}

#[test]
fn trace_csv_layout() {
    use ncvx_core::optim::{GdConfig, RunContext};
    let data = regression_data(50);
    let model = ncvx_core::LossModel::robust_regression(4.865).unwrap();
    let mut trace = ncvx_core::optim::run_batch_gd(&model, &data, &GdConfig::new(0.1, 3), &RunContext::default()).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], TRACE_HEADER.join(","));
    assert_eq!(lines.len(), 5);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((first.len(), first[0], first[2], first[4]), (5, "0", "", ""));

    trace.fill_gaps(0.0, 1e-16);
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let row: Vec<String> = String::from_utf8(buf).unwrap().lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row.len(), 5);
    assert_eq!(row[1], row[2]);
    assert_eq!(row[4], "");
}
