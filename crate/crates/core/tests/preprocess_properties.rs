use std::collections::BTreeMap;

use nilm_core::preprocess::{
    build_dataset, detect_segments_in, extract_windows_in, median, FeatureWindow, Normalize,
};
use proptest::prelude::*;

fn powers() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![3 => 0.0f64..8.0, 2 => 40.0f64..300.0], 0..300)
}

proptest! {
    #[test]
    fn segments_sorted_disjoint_and_anchored(p in powers(), threshold in 1.0f64..60.0, min_gap in 0usize..8) {
        let segs = detect_segments_in(&p, threshold, min_gap).unwrap();
        if segs.is_empty() { return Ok(()); }
        let base = median(&p).unwrap();
        for s in &segs {
            prop_assert!(s.start <= s.end && s.end < p.len());
            prop_assert!(p[s.start] - base >= threshold);
            prop_assert!(p[s.end] - base >= threshold);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end < w[1].start);
            // unmerged neighbours are at least min_gap apart
            prop_assert!(w[1].start - w[0].end > min_gap);
        }
        // every active sample is covered
        for (i, &v) in p.iter().enumerate() {
            if v - base >= threshold {
                prop_assert!(segs.iter().any(|s| s.start <= i && i <= s.end));
            }
        }
    }

    #[test]
    fn window_count_identity(p in powers(), len in 1usize..40, mode in prop::sample::select(vec![Normalize::None, Normalize::Max, Normalize::Zscore])) {
        let segs = detect_segments_in(&p, 20.0, 3).unwrap();
        let windows = extract_windows_in(&p, &segs, len, mode).unwrap();
        let expected: usize = segs.iter().map(|s| s.sample_count() / len).sum();
        prop_assert_eq!(windows.len(), expected);
        for w in &windows {
            prop_assert_eq!(w.len(), len);
            prop_assert!(w.values().iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn windows_never_straddle_segments(p in powers(), len in 1usize..20) {
        let segs = detect_segments_in(&p, 20.0, 3).unwrap();
        let windows = extract_windows_in(&p, &segs, len, Normalize::None).unwrap();
        // reconstruct each raw window's position and check it lies in one segment
        let mut it = windows.iter();
        for s in &segs {
            for k in 0..s.sample_count() / len {
                let start = s.start + k * len;
                let w = it.next().unwrap();
                prop_assert!(start + len - 1 <= s.end);
                prop_assert_eq!(w.values(), &p[start..start + len]);
            }
        }
        prop_assert!(it.next().is_none());
    }

    #[test]
    fn dataset_histogram_and_determinism(counts in prop::collection::btree_map("[a-z]{1,6}", 0usize..6, 1..6), len in 1usize..5) {
        let map: BTreeMap<String, Vec<FeatureWindow>> = counts
            .iter()
            .map(|(name, &n)| {
                let ws = (0..n).map(|i| FeatureWindow::new(vec![i as f64; len]).unwrap()).collect();
                (name.clone(), ws)
            })
            .collect();
        let result = build_dataset(&map);
        if counts.values().all(|&n| n == 0) {
            prop_assert!(result.is_err());
            return Ok(());
        }
        let ds = result.unwrap();
        let expected: Vec<usize> = counts.values().copied().filter(|&n| n > 0).collect();
        prop_assert_eq!(ds.class_counts(), expected);
        prop_assert!(ds.class_names().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ds.labels().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(build_dataset(&map).unwrap(), ds);
    }

    #[test]
    fn max_normalized_windows_peak_at_one(v in prop::collection::vec(0.0f64..1e4, 1..30)) {
        let mut w = v.clone();
        Normalize::Max.apply(&mut w);
        let max = v.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            prop_assert_eq!(w.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
        } else {
            prop_assert_eq!(w, v);
        }
    }
}
