use chrono::NaiveDate;
use proptest::prelude::*;
use traffic_core::RawSample;
use trafficflow::raw::{parse_raw_csv, write_raw_csv, ParseOptions};

fn sample(lanes: usize) -> impl Strategy<Value = RawSample> {
    (
        0i64..400,
        1u32..=2880,
        prop_oneof![Just(191u32), 1u32..1000],
        prop::collection::vec(prop::option::weighted(0.9, 0u32..60), lanes),
        prop::collection::vec(prop::option::weighted(0.9, 0u32..=900), lanes),
    )
        .prop_map(|(day, slot, detector_id, lane_volumes, lane_occupancies)| RawSample {
            date: NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + chrono::Duration::days(day),
            time_end: slot * 30,
            detector_id,
            lane_volumes,
            lane_occupancies,
            off_counts: Vec::new(),
            psg_counts: Vec::new(),
        })
}

proptest! {
    #[test]
    fn written_samples_parse_back((lanes, samples) in (1usize..=4).prop_flat_map(|l| (Just(l), prop::collection::vec(sample(l), 1..40)))) {
        let mut buf = Vec::new();
        write_raw_csv(&mut buf, &samples).unwrap();
        let parsed = parse_raw_csv(&buf[..], &ParseOptions::default()).unwrap();
        prop_assert_eq!(&parsed.samples, &samples);
        prop_assert!(parsed.row_errors.is_empty());
        prop_assert_eq!(parsed.stats.rows, samples.len());
        let missing = samples.iter().filter(|s| !s.is_complete()).count();
        prop_assert_eq!(parsed.stats.rows_with_missing, missing);
        prop_assert_eq!(lanes, parsed.samples[0].lane_volumes.len());
    }
}
