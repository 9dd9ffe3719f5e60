use modalms::dataset::{read_dataset, write_dataset};
use modalms::{observed_fraction, ColumnSpec, Dataset, Sample};
use proptest::prelude::*;

fn samples(d: usize) -> impl Strategy<Value = Vec<Sample>> {
    prop::collection::vec((prop::collection::vec(-1e6f64..1e6, d), prop::option::of(-1e6f64..1e6)), 1..30).prop_map(
        |rows| {
            let mut out: Vec<Sample> = rows
                .into_iter()
                .map(|(x, y)| match y {
                    Some(v) => Sample::observed(x, v),
                    None => Sample::missing(x),
                })
                .collect();
            if out.iter().all(|s| !s.delta()) {
                let x = out[0].x.clone();
                out[0] = Sample::observed(x, 0.0);
            }
            out
        },
    )
}

proptest! {
    #[test]
    fn write_then_read_is_identity(rows in (1usize..4).prop_flat_map(samples)) {
        let d = rows[0].x.len();
        let ds = Dataset::new(rows).unwrap();
        let names: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        let cols = ColumnSpec::new(names, "y".to_string());
        let mut buf = Vec::new();
        write_dataset(&mut buf, &ds, &cols).unwrap();
        let back = read_dataset(buf.as_slice(), &cols).unwrap();
        prop_assert_eq!(&back, &ds);
        let mean_delta = (0..ds.len()).filter(|&i| ds.delta(i)).count() as f64 / ds.len() as f64;
        prop_assert_eq!(observed_fraction(&back), mean_delta);
    }
}
