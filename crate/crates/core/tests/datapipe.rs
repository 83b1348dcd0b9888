use std::collections::{BTreeMap, BTreeSet};

use clipwise_core::datapipe::{
    category_normalize, label_by_median, normalize_views, split_dataset, Category, Corpus, EmbeddingTable, Label,
    LabeledCorpus, SplitRatios, VideoRecord,
};
use clipwise_core::Error;
use proptest::prelude::*;

fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn record(id: &str, channel: &str, views: u64, likes: Option<u64>) -> VideoRecord {
    VideoRecord {
        video_id: id.into(),
        title: format!("title {id}"),
        channel_id: channel.into(),
        views,
        category: Category::new("news", "general"),
        tags: vec![],
        features_path: None,
        published_at: chrono::DateTime::from_timestamp(1_600_000_000, 0).unwrap(),
        shares: 0,
        comments: 0,
        channel_likes: likes,
    }
}

#[test]
fn labels_match_sort_oracle_examples() {
    let (labels, m) = label_by_median(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(m, 2.5);
    assert_eq!(labels, [Label::Unpopular, Label::Unpopular, Label::Popular, Label::Popular]);
    let (labels, m) = label_by_median(&[2.0, 2.0, 2.0]).unwrap();
    assert_eq!(m, 2.0);
    assert!(labels.iter().all(|&l| l == Label::Unpopular));
    assert_eq!(label_by_median(&[5.0]).unwrap(), (vec![Label::Unpopular], 5.0));
    assert_eq!(label_by_median(&[]), Err(Error::EmptyDataset));
}

#[test]
fn normalization_examples() {
    assert_eq!(normalize_views(1000, 500), Ok(2.0));
    assert_eq!(normalize_views(0, 10), Ok(0.0));
    assert!(matches!(normalize_views(5, 0), Err(Error::MissingChannelStats(_))));
}

#[test]
fn labeled_corpus_uses_channel_file_and_inline_likes() {
    let corpus = Corpus::new(vec![
        record("a", "c1", 100, None),
        record("b", "c2", 100, Some(10)),
        record("c", "c1", 300, None),
    ])
    .unwrap();
    let channels = BTreeMap::from([("c1".to_string(), 100u64), ("c2".to_string(), 1u64)]);
    let lc = LabeledCorpus::build(&corpus, &channels).unwrap();
    let scores: Vec<f64> = lc.examples.iter().map(|e| e.normalized_score).collect();
    // Inline likes win over the channel file for "b".
    assert_eq!(scores, vec![1.0, 10.0, 3.0]);
    assert_eq!(lc.median_used, 3.0);
    for e in &lc.examples {
        assert_eq!(e.label == Label::Popular, e.normalized_score > lc.median_used);
    }
    let missing = Corpus::new(vec![record("z", "unknown", 1, None)]).unwrap();
    assert!(matches!(LabeledCorpus::build(&missing, &channels), Err(Error::MissingChannelStats(_))));
}

#[test]
fn split_sizes_for_reference_counts() {
    for n in [10usize, 37042, 101] {
        let items: Vec<usize> = (0..n).collect();
        let s = split_dataset(&items, SplitRatios::STANDARD, 5).unwrap();
        // Integer oracle: a tenth rounded down for val and test, remainder to train.
        let tenth = n / 10;
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (n - 2 * tenth, tenth, tenth), "n = {n}");
    }
    let s = split_dataset(&(0..10).collect::<Vec<_>>(), SplitRatios::STANDARD, 0).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
}

#[test]
fn bad_ratios_are_config_errors() {
    let items = [1, 2, 3];
    assert!(matches!(split_dataset(&items, SplitRatios::new(0.5, 0.5, 0.5), 0), Err(Error::Config(_))));
    assert!(matches!(split_dataset(&items, SplitRatios::new(1.2, -0.1, -0.1), 0), Err(Error::Config(_))));
}

#[test]
fn category_examples() {
    let out = category_normalize(&[("a", 2.0), ("a", 4.0), ("a", 6.0), ("b", 7.0)]).unwrap();
    assert_eq!(out, vec![0.5, 1.0, 1.5, 1.0]);
    assert_eq!(
        category_normalize(&[("z", 0.0), ("z", 0.0)]),
        Err(Error::DegenerateCategory("z".into()))
    );
}

#[test]
fn embedding_examples() {
    let t = EmbeddingTable::parse("cat 1 0 0\ndog 0 1 0", 3).unwrap();
    assert_eq!(t.len(), 2);
    assert!(matches!(EmbeddingTable::parse("cat 1 0", 3), Err(Error::Format { line: 1, .. })));
    assert_eq!(t.lookup("zebra"), (vec![0.0; 3], true));
    assert_eq!(t.lookup("dog"), (vec![0.0, 1.0, 0.0], false));
    assert!(matches!(EmbeddingTable::parse("2 4\ncat 1 0 0 0\n", 3), Err(Error::Config(_))));
}

proptest! {
    #[test]
    fn odd_distinct_inputs_split_in_half(raw in prop::collection::btree_set(-1_000_000i64..1_000_000, 1..60usize)) {
        let mut v: Vec<f64> = raw.into_iter().map(|x| x as f64 / 7.0).collect();
        if v.len().is_multiple_of(2) {
            v.pop();
        }
        let (labels, m) = label_by_median(&v).unwrap();
        prop_assert_eq!(m, sorted_median(&v));
        let popular = labels.iter().filter(|&&l| l == Label::Popular).count();
        prop_assert_eq!(popular, (v.len() - 1) / 2);
        for (l, s) in labels.iter().zip(&v) {
            prop_assert_eq!(*l == Label::Popular, *s > m);
        }
    }

    #[test]
    fn category_medians_become_one(items in prop::collection::vec((0u8..4, 0.01f64..1e6), 1..80)) {
        let named: Vec<(String, f64)> = items.iter().map(|(c, s)| (format!("cat{c}"), *s)).collect();
        let out = category_normalize(&named).unwrap();
        let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for ((c, _), o) in named.iter().zip(&out) {
            groups.entry(c).or_default().push(*o);
        }
        for vals in groups.values() {
            prop_assert!((sorted_median(vals) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn splits_partition_the_input(
        n in 0usize..300,
        w in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
        seed in any::<u64>(),
    ) {
        let total = w.0 + w.1 + w.2;
        prop_assume!(total > 1e-6);
        let ratios = SplitRatios::new(w.0 / total, w.1 / total, 1.0 - w.0 / total - w.1 / total);
        let items: Vec<usize> = (0..n).collect();
        let s = split_dataset(&items, ratios, seed).unwrap();
        let all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(all.iter().copied().collect::<BTreeSet<_>>(), items.iter().copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(s, split_dataset(&items, ratios, seed).unwrap());
    }
}
