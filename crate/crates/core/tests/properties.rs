use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use wikipersona::ingest::{read_cache, write_cache, QualityClass, RevisionRecord};
use wikipersona::personas::{
    classify_article, decide, ClassifierConfig, EditorFeatures, Persona, Rule,
};
use wikipersona::stats::{chi_square_independence, percent_distribution, ContingencyTable};
use wikipersona::timeline::{
    bucket_by_quarter, derivative_series, pearson, select_top_editors, ArticleTimeline,
    EditorSeries, QuarterIndex,
};

fn revision_stream() -> impl Strategy<Value = Vec<RevisionRecord>> {
    // seconds since 2001-01-01, editor index
    prop::collection::vec((0i64..380_000_000, 0usize..12), 1..300).prop_map(|raw| {
        let base = Utc.with_ymd_and_hms(2001, 1, 1, 0, 0, 0).unwrap();
        let mut v: Vec<RevisionRecord> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (s, e))| RevisionRecord {
                article_key: "P".into(),
                revision_id: i as u64 + 1,
                timestamp: base + chrono::Duration::seconds(s),
                editor_key: format!("E{e}"),
            })
            .collect();
        v.sort_by_key(|r| (r.timestamp, r.revision_id));
        v
    })
}

fn timeline_from(series: Vec<Vec<u32>>) -> ArticleTimeline {
    let span = series.iter().map(Vec::len).max().unwrap_or(0);
    ArticleTimeline {
        article_key: "T".into(),
        quality_class: QualityClass::Other,
        start_quarter: QuarterIndex(20),
        span,
        revision_count: series.iter().flatten().map(|&c| c as usize).sum(),
        series: series
            .into_iter()
            .enumerate()
            .map(|(i, mut c)| {
                c.resize(span, 0);
                EditorSeries::new(format!("ed{i}"), c)
            })
            .collect(),
    }
}

fn editor_series() -> impl Strategy<Value = Vec<Vec<u32>>> {
    (1usize..16).prop_flat_map(|span| {
        prop::collection::vec(
            prop::collection::vec(0u32..9, span)
                .prop_filter("non-empty", |c| c.iter().any(|&x| x > 0)),
            1..8,
        )
    })
}

fn features() -> impl Strategy<Value = EditorFeatures> {
    (
        1usize..40,
        0usize..40,
        1u32..500,
        0usize..40,
        prop::option::of(0.0f64..=1.0),
    )
        .prop_flat_map(|(span, active_raw, total, dom_raw, neg)| {
            let active = 1 + active_raw % span;
            let dominant = dom_raw % (active + 1);
            (1u32..=total).prop_map(move |peak| EditorFeatures {
                editor_key: "x".into(),
                total,
                active_quarters: active,
                span_quarters: span,
                peak_share: f64::from(peak) / f64::from(total),
                onset_quarter: 0,
                dominant_quarters: dominant,
                negative_corr_fraction: neg,
            })
        })
}

proptest! {
    #[test]
    fn bucketing_conserves_edits(revs in revision_stream()) {
        let b = bucket_by_quarter(&revs).unwrap();
        let total: u64 = b.series.values().map(|s| u64::from(s.total)).sum();
        prop_assert_eq!(total as usize, revs.len());
        let mut per_editor: BTreeMap<&str, u32> = BTreeMap::new();
        for r in &revs {
            *per_editor.entry(r.editor_key.as_str()).or_default() += 1;
        }
        for (k, s) in &b.series {
            prop_assert_eq!(s.counts.len(), b.span);
            prop_assert_eq!(s.counts.iter().sum::<u32>(), s.total);
            prop_assert_eq!(per_editor[k.as_str()], s.total);
        }
        let first = QuarterIndex::from_timestamp(&revs[0].timestamp);
        let last = QuarterIndex::from_timestamp(&revs[revs.len() - 1].timestamp);
        prop_assert_eq!(b.start_quarter, first);
        prop_assert_eq!(b.span as i32, last.0 - first.0 + 1);
    }

    #[test]
    fn top_editor_selection_ignores_input_order(revs in revision_stream(), top_n in 1usize..6) {
        let a = bucket_by_quarter(&revs).unwrap();
        let mut reversed = revs.clone();
        reversed.reverse();
        let b = bucket_by_quarter(&reversed).unwrap();
        let ta = select_top_editors(&a, top_n, QualityClass::Other);
        let tb = select_top_editors(&b, top_n, QualityClass::Other);
        prop_assert_eq!(ta.editor_keys(), tb.editor_keys());
        prop_assert!(ta.series.len() <= top_n);
        prop_assert!(ta.series.windows(2).all(|w| w[0].total >= w[1].total));
    }

    #[test]
    fn derivative_integrates_back(counts in prop::collection::vec(0u32..1000, 1..50)) {
        let d = derivative_series(&counts);
        prop_assert_eq!(d.len(), counts.len() - 1);
        let mut acc = i64::from(counts[0]);
        for (k, step) in d.iter().enumerate() {
            acc += step;
            prop_assert_eq!(acc, i64::from(counts[k + 1]));
        }
    }

    #[test]
    fn pearson_symmetric_and_bounded(
        xy in (2usize..30).prop_flat_map(|n| (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(-50.0f64..50.0, n),
        ))
    ) {
        let (x, y) = xy;
        let r = pearson(&x, &y);
        prop_assert_eq!(r, pearson(&y, &x));
        if let Some(r) = r {
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn classification_is_total(f in features()) {
        let cfg = ClassifierConfig::default();
        let rule = decide(&f, &cfg);
        let burst = f.active_quarters <= cfg.cowboy_max_active_quarters
            || f.peak_share >= cfg.cowboy_peak_share;
        prop_assert_eq!(rule == Rule::CowboyBurst, burst);
        prop_assert_eq!(rule.persona() == Persona::Cowboy, burst);
    }

    #[test]
    fn burst_rule_is_monotone(f in features(), extra in 0.0f64..0.5) {
        // a cowboy stays a cowboy when its edits become more concentrated
        let cfg = ClassifierConfig::default();
        if decide(&f, &cfg) == Rule::CowboyBurst {
            let mut g = f.clone();
            g.peak_share = (f.peak_share + extra).min(1.0);
            g.active_quarters = f.active_quarters.saturating_sub(1).max(1);
            prop_assert_eq!(decide(&g, &cfg), Rule::CowboyBurst);
        }
    }

    #[test]
    fn disabling_burst_rule_removes_cowboys(series in editor_series()) {
        let cfg = ClassifierConfig {
            cowboy_max_active_quarters: 0,
            cowboy_peak_share: 1.01,
            ..ClassifierConfig::default()
        };
        cfg.validate().unwrap();
        let out = classify_article(&timeline_from(series), &cfg).unwrap();
        prop_assert!(out.iter().all(|a| a.persona != Persona::Cowboy));
    }

    #[test]
    fn personas_ignore_editor_order(series in editor_series(), seed in any::<u64>()) {
        let cfg = ClassifierConfig::default();
        let t = timeline_from(series);
        let mut shuffled = t.clone();
        // deterministic Fisher-Yates from the seed
        let mut s = seed | 1;
        for i in (1..shuffled.series.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.series.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let key = |v: Vec<wikipersona::personas::PersonaAssignment>| -> BTreeMap<String, Persona> {
            v.into_iter().map(|a| (a.editor_key, a.persona)).collect()
        };
        prop_assert_eq!(
            key(classify_article(&t, &cfg).unwrap()),
            key(classify_article(&shuffled, &cfg).unwrap())
        );
    }

    #[test]
    fn chi_square_scales_with_sample_size(
        counts in prop::collection::vec(prop::collection::vec(1u64..80, 4), 2..4),
        k in 2u64..6,
    ) {
        let rows = counts.len();
        let t = ContingencyTable::new(
            (0..rows).map(|i| format!("r{i}")).collect(),
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            counts,
        ).unwrap();
        let base = chi_square_independence(&t).unwrap();
        let big = chi_square_independence(&t.scaled(k)).unwrap();
        let kf = k as f64;
        prop_assert!((big.statistic - kf * base.statistic).abs() <= 1e-9 * (1.0 + big.statistic));
        prop_assert_eq!(big.df, base.df);
        prop_assert!(big.p_value <= base.p_value + 1e-12);
        for (rb, rs) in big.std_residuals.iter().flatten().zip(base.std_residuals.iter().flatten()) {
            prop_assert!((rb - kf.sqrt() * rs).abs() < 1e-9);
        }
        let pa = percent_distribution(&t).unwrap();
        let pb = percent_distribution(&t.scaled(k)).unwrap();
        for (a, b) in pa.iter().flatten().zip(pb.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        for row in &pa {
            prop_assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cache_round_trip_is_byte_exact(
        names in prop::collection::vec("[a-zA-Z0-9 ._\"\\\\é:/-]{1,12}", 1..20),
        title in "[A-Z][a-z0-9 ()/:'.-]{0,20}",
    ) {
        let dir = tempfile::tempdir().unwrap();
        let base = Utc.with_ymd_and_hms(2008, 3, 31, 23, 59, 59).unwrap();
        let recs: Vec<RevisionRecord> = names
            .iter()
            .enumerate()
            .map(|(i, n)| RevisionRecord {
                article_key: title.clone(),
                revision_id: 100 + i as u64,
                timestamp: base + chrono::Duration::minutes(i as i64 * 37),
                editor_key: n.clone(),
            })
            .collect();
        write_cache(dir.path(), &title, &recs).unwrap();
        let path = wikipersona::ingest::cache_path(dir.path(), &title);
        let bytes = std::fs::read(&path).unwrap();
        let back = read_cache(dir.path(), &title).unwrap().unwrap();
        prop_assert_eq!(&back, &recs);
        write_cache(dir.path(), &title, &back).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }
}
