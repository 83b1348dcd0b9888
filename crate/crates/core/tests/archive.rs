#![allow(clippy::needless_range_loop)]

use std::collections::BTreeSet;

use clipwise_core::archive::{
    classify_topic, levenshtein, Archive, Metric, TopicClassifier, TopicExample, TOPIC_EMBEDDING_DIM,
};
use clipwise_core::datapipe::{Category, Corpus, VideoRecord};
use clipwise_core::nnkern::train::accuracy;
use clipwise_core::nnkern::{train_classifier, TrainConfig};
use clipwise_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAGS: [&str; 6] = ["cats", "Cats", "dogs", "news", "music", " DIY "];

fn rec(i: usize, tags: Vec<String>, views: u64, shares: u64, comments: u64) -> VideoRecord {
    VideoRecord {
        video_id: format!("v{i:03}"),
        title: format!("video {i}"),
        channel_id: "c".into(),
        views,
        category: Category::new("misc", "misc"),
        tags,
        features_path: None,
        published_at: chrono::DateTime::UNIX_EPOCH,
        shares,
        comments,
        channel_likes: Some(1),
    }
}

fn corpus_strategy() -> impl Strategy<Value = Vec<VideoRecord>> {
    prop::collection::vec(
        (prop::collection::vec(0..TAGS.len(), 0..4), 0u64..10_000, 0u64..500, 0u64..500),
        1..40,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (tags, v, s, c))| rec(i, tags.into_iter().map(|t| TAGS[t].to_string()).collect(), v, s, c))
            .collect()
    })
}

/// Edit distance by full dynamic-programming table.
fn lev_table(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

fn brute_ids(records: &[VideoRecord], tag: &str) -> Vec<String> {
    let needle = tag.trim().to_lowercase();
    let set: BTreeSet<String> = records
        .iter()
        .filter(|r| r.tags.iter().any(|t| t.trim().to_lowercase() == needle))
        .map(|r| r.video_id.clone())
        .collect();
    set.into_iter().collect()
}

#[test]
fn suggestions_for_misspelled_tag() {
    let archive = Archive::new(
        Corpus::new(vec![
            rec(0, vec!["cooking".into()], 1, 0, 0),
            rec(1, vec!["cookie".into()], 1, 0, 0),
            rec(2, vec!["gaming".into()], 1, 0, 0),
        ])
        .unwrap(),
    );
    let q = archive.query_by_tag("cookng");
    assert!(q.videos.is_empty());
    assert_eq!(q.suggestions, ["cooking", "cookie"]);
    assert!(matches!(archive.tag_stats("nothing", "views"), Err(Error::NoVideos(_))));
    assert!(matches!(archive.tag_stats("cooking", "likes"), Err(Error::Config(_))));
}

#[test]
fn topic_rejects_wrong_dimension() {
    let model = TopicClassifier::new(vec![Category::new("a", "b")], 8, 0).unwrap();
    assert!(matches!(classify_topic(&vec![0.0; 300], &model), Err(Error::Shape(_))));
}

#[test]
fn topic_classifier_separates_four_classes() {
    let classes = vec![
        Category::new("animals", "cats"),
        Category::new("animals", "dogs"),
        Category::new("news", "politics"),
        Category::new("music", "rock"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut centers = vec![vec![0.0; TOPIC_EMBEDDING_DIM]; 4];
    for (k, c) in centers.iter_mut().enumerate() {
        for d in 0..10 {
            c[k * 10 + d] = 1.0;
        }
    }
    let mut sample = |n: usize| -> Vec<TopicExample> {
        (0..n)
            .map(|i| {
                let class = i % 4;
                let embedding = centers[class].iter().map(|&c| c + rng.random_range(-0.3..0.3)).collect();
                TopicExample { embedding, class }
            })
            .collect()
    };
    let train = sample(200);
    let val = sample(40);
    let test = sample(200);
    let model = TopicClassifier::new(classes, 16, 3).unwrap();
    let cfg = TrainConfig { learning_rate: 0.1, epochs: 30, batch_size: 8, seed: 3, l2: 0.0 };
    let trained = train_classifier(model, &train, Some(&val), &cfg).unwrap();
    let acc = accuracy(&trained.model, &test).unwrap();
    assert!(acc >= 0.95, "topic accuracy {acc}");
    let p = classify_topic(&test[0].embedding, &trained.model).unwrap();
    assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(trained.model.classes[p.class], p.category);
}

proptest! {
    #[test]
    fn query_matches_linear_scan(records in corpus_strategy(), q in 0..TAGS.len()) {
        let archive = Archive::new(Corpus::new(records.clone()).unwrap());
        for tag in [TAGS[q], "CATS", "unknown"] {
            let got: Vec<String> = archive.query_by_tag(tag).videos.iter().map(|r| r.video_id.clone()).collect();
            prop_assert_eq!(got, brute_ids(&records, tag));
        }
    }

    #[test]
    fn stats_match_brute_sums(records in corpus_strategy(), q in 0..TAGS.len()) {
        let archive = Archive::new(Corpus::new(records.clone()).unwrap());
        let ids = brute_ids(&records, TAGS[q]);
        for metric in [Metric::Views, Metric::Shares, Metric::Comments] {
            let res = archive.tag_stats_for(TAGS[q], metric);
            if ids.is_empty() {
                prop_assert!(matches!(res, Err(Error::NoVideos(_))));
                continue;
            }
            let mut vals: Vec<u64> = records.iter().filter(|r| ids.contains(&r.video_id)).map(|r| metric.of(r)).collect();
            vals.sort();
            let total: u64 = vals.iter().sum();
            let n = vals.len();
            let median = if n % 2 == 1 { vals[n / 2] as f64 } else { (vals[n / 2 - 1] + vals[n / 2]) as f64 / 2.0 };
            let s = res.unwrap();
            prop_assert_eq!(s.count, n);
            prop_assert_eq!(s.total, total);
            prop_assert_eq!(s.median, median);
            prop_assert!((s.mean - total as f64 / n as f64).abs() <= 1e-9 * (1.0 + s.mean.abs()));
        }
    }

    #[test]
    fn levenshtein_matches_table(a in "[a-dé]{0,8}", b in "[a-dé]{0,8}") {
        prop_assert_eq!(levenshtein(&a, &b), lev_table(&a, &b));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn suggestions_are_near_sorted_and_capped(records in corpus_strategy(), probe in "[a-z]{2,6}") {
        let archive = Archive::new(Corpus::new(records).unwrap());
        let q = archive.query_by_tag(&probe);
        if q.videos.is_empty() {
            let mut expect: Vec<(usize, String)> = archive
                .index()
                .vocabulary()
                .map(|t| (lev_table(&probe, t), t.to_string()))
                .filter(|(d, _)| *d <= 2)
                .collect();
            expect.sort();
            expect.truncate(3);
            prop_assert_eq!(q.suggestions, expect.into_iter().map(|(_, t)| t).collect::<Vec<_>>());
        }
    }

    #[test]
    fn topic_distribution_sums_to_one(seed in any::<u64>(), x in prop::collection::vec(-2.0f64..2.0, TOPIC_EMBEDDING_DIM)) {
        let classes = (0..5).map(|i| Category::new("t", format!("s{i}"))).collect();
        let model = TopicClassifier::new(classes, 8, seed).unwrap();
        let p = classify_topic(&x, &model).unwrap();
        prop_assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.probabilities.iter().all(|&v| v >= 0.0));
    }
}
