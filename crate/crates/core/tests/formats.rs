use flyact::detect::InterestPoint;
use flyact::io::{self, SignatureEntry, SignatureTable};
use flyact::sift3d::Descriptor;
use flyact::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn point(x: usize, response: f64) -> InterestPoint {
    InterestPoint {
        x,
        y: x + 1,
        t: x + 2,
        scale: 1.5,
        response,
    }
}

#[test]
fn points_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let pts = vec![point(3, 0.1), point(10, 1.0 / 3.0), point(0, 7.25e-9)];
    io::write_points(&pts, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,y,t,scale,response\n3,4,5,1.5000000000000000e0,1.0000000000000001e-1\n"));
    assert_eq!(io::read_points(&path).unwrap(), pts);
}

#[test]
fn bad_points_row_reports_row_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    std::fs::write(&path, "x,y,t,scale,response\n1,2,3,1.5,0.2\n1,2,three,1.5,0.2\n").unwrap();
    assert!(matches!(io::read_points(&path), Err(Error::Parse { row: 2, .. })));
}

#[test]
fn descriptor_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.bin");
    let recs = vec![
        (point(5, 0.5), Descriptor((0..640).map(|i| i as f64 / 640.0).collect())),
        (point(9, 0.25), Descriptor(vec![0.0; 640])),
    ];
    io::write_descriptors(&recs, &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 8 + 2 * (12 + 640 * 8));
    let back = io::read_descriptors(&path).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!((back[1].x, back[1].y, back[1].t), (9, 10, 11));
    assert_eq!(back[0].descriptor, recs[0].1);
}

#[test]
fn signature_table_with_failed_clip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    let table = SignatureTable {
        entries: vec![
            SignatureEntry { clip_id: "a".into(), label: "hold".into(), row: Some(0) },
            SignatureEntry { clip_id: "b".into(), label: "hold".into(), row: None },
            SignatureEntry { clip_id: "c".into(), label: "tussle".into(), row: Some(1) },
        ],
        matrix: DMatrix::from_row_slice(2, 3, &[0.6, 0.8, 0.0, 0.0, 0.0, 1.0]),
    };
    io::write_signatures(&table, &path).unwrap();
    let side = std::fs::read_to_string(io::sidecar_path(&path)).unwrap();
    assert_eq!(side, "clip_id,label,row_index\na,hold,0\nb,hold,\nc,tussle,1\n");
    let back = io::read_signatures(&path).unwrap();
    assert_eq!(back, table);
    assert_eq!(back.signature(&back.entries[2]), Some(vec![0.0, 0.0, 1.0]));
}

#[test]
fn model_file_checks() {
    assert!(matches!(io::decode_model(b"NOTAMODEL..............."), Err(Error::CorruptFile(_))));
    assert!(matches!(io::decode_model(b""), Err(Error::CorruptFile(_))));
}

proptest! {
    #[test]
    fn matrix_round_trip(rows in 0usize..5, cols in 0usize..5, seed in any::<u64>()) {
        let m = DMatrix::from_fn(rows, cols, |i, j| f64::from_bits(seed.rotate_left((i * 7 + j) as u32) >> 2));
        prop_assert_eq!(io::decode_matrix(&io::encode_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn float_text_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(io::fmt_f64(v).parse::<f64>().unwrap(), v);
    }
}
