mod common;

use common::*;
use proptest::prelude::*;
use projstab::data::{
    decode_binary, decode_network, encode_binary, encode_network, load_matrix, parse_csv,
    parse_labels, split_dataset, to_csv, write_matrix, MatrixFormat, NetworkFile, NetworkMeta,
    SplitSpec,
};
use projstab::mlp::forward;
use projstab::report::to_canonical_json;
use projstab::{Error, Matrix};

fn matrix() -> impl Strategy<Value = Matrix> {
    (1usize..8, 1usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(
            prop_oneof![
                -1e6..1e6f64,
                any::<f64>().prop_filter("finite", |v| v.is_finite()),
                Just(0.0),
                Just(-0.0),
                Just(f64::MIN_POSITIVE),
            ],
            r * c,
        )
        .prop_map(move |v| Matrix::new(r, c, v).unwrap())
    })
}

fn same_bits(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape() && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(m in matrix()) {
        let back = parse_csv(&to_csv(&m)).unwrap();
        prop_assert!(same_bits(&m, &back));
    }

    #[test]
    fn binary_round_trip_is_exact(m in matrix()) {
        let back = decode_binary(&encode_binary(&m)).unwrap();
        prop_assert!(same_bits(&m, &back));
    }

    #[test]
    fn network_round_trip_is_exact(seed in any::<u64>(), lambda in 0.0..100.0f64, epochs in 0usize..1000) {
        let mut r = rng(seed);
        let file = NetworkFile {
            network: random_net(&mut r, 200),
            meta: NetworkMeta { lambda, seed, epochs_run: epochs, best_epoch: epochs / 2, best_val_mse: lambda / 3.0 },
        };
        let back = decode_network(&encode_network(&file).unwrap()).unwrap();
        prop_assert_eq!(&back, &file);
        let probe = random_matrix(&mut r, 3, file.network.input_dim(), 1.0);
        prop_assert!(same_bits(&forward(&file.network, &probe).unwrap(), &forward(&back.network, &probe).unwrap()));
    }

    #[test]
    fn canonical_floats_survive_parsing(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = to_canonical_json(&serde_json::json!({ "v": v })).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back["v"].as_f64().unwrap().to_bits(), v.to_bits());
        prop_assert_eq!(to_canonical_json(&back).unwrap(), text);
    }

    #[test]
    fn split_is_a_partition(n in 10usize..500, seed in any::<u64>(), val in 0.05..0.3f64, test in 0.05..0.3f64) {
        let spec = SplitSpec { train: 1.0 - val - test, val, test };
        prop_assume!(spec.validate().is_ok() && val * n as f64 >= 1.0 && test * n as f64 >= 1.0);
        let s = split_dataset(n, &spec, seed).unwrap();
        prop_assert_eq!(s.val.len(), (val * n as f64 + 1e-9).floor() as usize);
        prop_assert_eq!(s.test.len(), (test * n as f64 + 1e-9).floor() as usize);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split_dataset(n, &spec, seed).unwrap(), s);
    }
}

#[test]
fn small_csv_transcribes_directly() {
    let m = parse_csv("0,0\n1,0\n0,1").unwrap();
    assert_eq!(m.shape(), (3, 2));
    assert_eq!(m.values(), &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
}

#[test]
fn csv_errors_name_their_location() {
    match parse_csv("1,2\n3,abc\n") {
        Err(Error::Parse { row, col, .. }) => assert_eq!((row, col), (1, 1)),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_csv("1,nan\n"), Err(Error::Validation(_))));
    assert!(matches!(parse_csv("# 3 2\n1,2\n3,4\n"), Err(Error::Format(_))));
}

#[test]
fn truncated_bulk_header_is_rejected() {
    let mut bytes = b"PSTB".to_vec();
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&70_000u64.to_le_bytes());
    bytes.extend_from_slice(&784u64.to_le_bytes());
    bytes.extend_from_slice(&[0u8; 64]);
    assert!(matches!(decode_binary(&bytes), Err(Error::Format(_))));
}

#[test]
fn files_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let m = random_matrix(&mut rng(1), 20, 3, 10.0);
    for fmt in [MatrixFormat::Csv, MatrixFormat::Binary] {
        let p = dir.path().join(format!("m.{}", fmt.extension()));
        write_matrix(&m, &p, fmt).unwrap();
        assert_eq!(MatrixFormat::infer(&p), fmt);
        assert!(same_bits(&m, &load_matrix(&p, fmt).unwrap()));
    }
}

#[test]
fn labels_are_remapped_to_a_contiguous_range() {
    let l = parse_labels("0\n1\n0").unwrap();
    assert_eq!((l.values(), l.class_count()), (&[0, 1, 0][..], 2));
    let l = parse_labels("2\n5\n2").unwrap();
    assert_eq!((l.values(), l.class_count()), (&[0, 1, 0][..], 2));
    assert_eq!(l.original_ids(), &[2, 5]);
    assert!(matches!(parse_labels("-1"), Err(Error::Validation(_))));
    assert!(matches!(parse_labels(""), Err(Error::Format(_))));
}

#[test]
fn split_sizes_and_errors() {
    let s = split_dataset(10, &SplitSpec::default(), 7).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
    assert!(matches!(split_dataset(5, &SplitSpec::default(), 7), Err(Error::Config(_))));
    let thin = SplitSpec { train: 0.9, val: 0.05, test: 0.05 };
    assert!(matches!(split_dataset(10, &thin, 7), Err(Error::Config(_))));
}
