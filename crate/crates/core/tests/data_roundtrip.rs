use proptest::prelude::*;
use saddle_core::data::{
    parse_libsvm, synth_gaussian_classes, ClassGroupedDataset, LabeledClass, SparseVector,
};
use saddle_core::{Error, RandomSource};

fn sparse_vector() -> impl Strategy<Value = SparseVector> {
    proptest::collection::btree_map(1u32..200, -1e6f64..1e6, 0..12).prop_map(|m| {
        let (indices, values): (Vec<u32>, Vec<f64>) = m.into_iter().unzip();
        SparseVector::new(indices, values).unwrap()
    })
}

fn dataset() -> impl Strategy<Value = ClassGroupedDataset> {
    proptest::collection::btree_map(
        -50i64..50,
        proptest::collection::vec(sparse_vector(), 1..6),
        1..5,
    )
    .prop_map(|classes| {
        let classes: Vec<LabeledClass> = classes
            .into_iter()
            .map(|(label, points)| LabeledClass { label, points })
            .collect();
        let dim = classes
            .iter()
            .flat_map(|c| c.points.iter().map(|p| p.max_index() as usize))
            .max()
            .unwrap_or(0);
        ClassGroupedDataset::new(classes, dim).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_then_parse_is_identity(ds in dataset()) {
        let text = ds.to_libsvm_string();
        let back = ClassGroupedDataset::parse_str(&text).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn crlf_and_comments_do_not_change_the_result(ds in dataset()) {
        let text = ds.to_libsvm_string();
        let noisy: String = text
            .lines()
            .map(|l| format!("{l} # note\r\n\r\n"))
            .collect();
        let back = ClassGroupedDataset::parse_str(&format!("# header\n{noisy}")).unwrap();
        prop_assert_eq!(back, ds);
    }
}

fn parse_error_line(text: &str) -> usize {
    match parse_libsvm(text.as_bytes()) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_inputs_report_line_numbers() {
    assert_eq!(parse_error_line("1 1:2\n1 3:1 2:1\n"), 2);
    assert_eq!(parse_error_line("1 1:2\n# c\nx 1:1\n"), 3);
    assert_eq!(parse_error_line("1 a:1\n"), 1);
    assert_eq!(parse_error_line("1 1:b\n"), 1);
    assert!(matches!(parse_libsvm("".as_bytes()), Err(Error::Data(_))));
    assert!(matches!(
        parse_libsvm("# only\n\n".as_bytes()),
        Err(Error::Data(_))
    ));
}

#[test]
fn documented_lines() {
    let ds = ClassGroupedDataset::parse_str("2 1:0.5 7:-3\n1\n").unwrap();
    assert_eq!(ds.labels(), vec![2, 1]);
    assert_eq!(ds.feature_dim(), 7);
    let p = &ds.classes()[0].points[0];
    assert_eq!(
        (p.indices.clone(), p.values.clone()),
        (vec![1, 7], vec![0.5, -3.0])
    );
    assert!(ds.classes()[1].points[0].indices.is_empty());
}

#[test]
fn synthetic_data_is_reproducible_and_normalizes() {
    let make = || synth_gaussian_classes(&mut RandomSource::new(9, 9), 3, 5, 20, 1.0).unwrap();
    assert_eq!(make(), make());
    let two = synth_gaussian_classes(&mut RandomSource::new(1, 0), 2, 3, 1, 1.0).unwrap();
    assert_eq!(two.num_points(), 2);
    let n = make().normalized();
    for c in n.classes() {
        for p in &c.points {
            assert!((p.norm() - 1.0).abs() <= 1e-12);
        }
    }
}
