mod common;

use chrono::{Datelike, NaiveDate};
use traffic_core::{
    build_cfd, detect_gaps, filter_weekdays, generate, interpolate_linear, pivot_by_detector, resample, Interval,
    SynthConfig,
};

fn month_of_data(missing_rate: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        start_date: NaiveDate::from_ymd_opt(2022, 9, 1).unwrap(),
        end_date: NaiveDate::from_ymd_opt(2022, 9, 30).unwrap(),
        detector_ids: vec![191],
        missing_rate,
        seed,
        ..SynthConfig::default()
    }
}

#[test]
fn volume_is_conserved_through_resampling() {
    let out = generate(&month_of_data(0.0, 4)).unwrap();
    let raw_total: u64 = out.samples.iter().flat_map(|s| s.lane_volumes.iter()).map(|v| u64::from(v.unwrap())).sum();
    let series = interpolate_linear(&pivot_by_detector(&out.samples).unwrap()[&191]).unwrap();
    for interval in Interval::ALL {
        let r = resample(&series, interval).unwrap();
        let kept: f64 = r.records.iter().map(|a| a.volume_sum).sum();
        assert_eq!(kept + r.dropped_volume, raw_total as f64, "{interval}");
    }
}

#[test]
fn two_one_minute_windows_make_a_two_minute_window() {
    let out = generate(&month_of_data(0.0114, 9)).unwrap();
    let series = interpolate_linear(&pivot_by_detector(&out.samples).unwrap()[&191]).unwrap();
    let one = resample(&series, Interval::OneMinute).unwrap().records;
    let two = resample(&series, Interval::TwoMinutes).unwrap().records;
    assert_eq!(two.len(), one.len() / 2);
    for (t, pair) in two.iter().zip(one.chunks_exact(2)) {
        assert_eq!(t.label_time, pair[0].label_time);
        assert_eq!(t.label_date, pair[0].label_date);
        assert_eq!(t.volume_sum, pair[0].volume_sum + pair[1].volume_sum);
        assert_eq!(t.occupancy_sum, pair[0].occupancy_sum + pair[1].occupancy_sum);
    }
}

#[test]
fn weekday_table_has_one_row_per_window() {
    let out = generate(&month_of_data(0.0114, 2)).unwrap();
    let raw = &pivot_by_detector(&out.samples).unwrap()[&191];
    assert_eq!(detect_gaps(raw).missing_slots, out.truth.len());
    let series = interpolate_linear(raw).unwrap();
    let weekdays = filter_weekdays(&resample(&series, Interval::FiveMinutes).unwrap().records);
    let ds = build_cfd(&weekdays, Interval::FiveMinutes, 191).unwrap();
    let days = (1..=30)
        .map(|d| NaiveDate::from_ymd_opt(2022, 9, d).unwrap())
        .filter(|&d| !matches!(common::zeller_weekday(d), 1 | 7))
        .count();
    assert_eq!(days, 22);
    assert_eq!(ds.len(), days * 288);
    assert!(ds.rows.iter().all(|r| r.month == 9 && (-1.0..1.0).contains(&r.time_norm)));
    assert!(ds.rows.iter().all(|r| r.stamp.date.weekday().number_from_monday() <= 5));
}
