use std::io::Cursor;

use border_peel::{load_csv, read_csv, ClusterLabels, Error, PointSet};
use proptest::prelude::*;

proptest! {
    #[test]
    fn csv_round_trip_is_bit_exact(
        rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 3), 1..40),
        header in any::<bool>(),
    ) {
        let points = PointSet::from_rows(&rows).unwrap();
        let mut buf = Vec::new();
        points.write_csv(&mut buf, header).unwrap();
        let back = read_csv(Cursor::new(buf), header, None).unwrap();
        prop_assert_eq!(back.dim(), 3);
        let same = points.coords().iter().zip(back.coords()).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
    }

    #[test]
    fn compacted_labels_are_contiguous(raw in prop::collection::vec(-3i64..40, 0..60)) {
        let labels = ClusterLabels::from_assignments(&raw);
        let k = labels.n_clusters() as i64;
        prop_assert!(labels.labels().iter().all(|&l| l == -1 || (0..k).contains(&l)));
        prop_assert_eq!(labels.n_noise(), raw.iter().filter(|&&l| l < 0).count());
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] >= 0 && raw[j] >= 0 {
                    prop_assert_eq!(raw[i] == raw[j], labels.labels()[i] == labels.labels()[j]);
                }
            }
        }
    }
}

#[test]
fn label_column_becomes_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    std::fs::write(&path, "x,label,y\n0.5,1,2\n1.5,-1,3\n2.5,0,4\n").unwrap();
    let points = load_csv(&path, true, Some(1)).unwrap();
    assert_eq!(points.dim(), 2);
    assert_eq!(points.point(1), &[1.5, 3.0]);
    assert_eq!(points.ground_truth().unwrap(), &[1, -1, 0]);
}

#[test]
fn malformed_input_reports_line() {
    let err = read_csv(Cursor::new("1,2\n3,x\n"), false, None).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    assert!(matches!(
        read_csv(Cursor::new(""), false, None),
        Err(Error::EmptyInput)
    ));
    assert!(matches!(
        load_csv("/nonexistent/pts.csv", false, None),
        Err(Error::Io(_))
    ));
}
