//! Seeded synthetic corpora with planted signals, used by the acceptance
//! suite and the `demo` data generator.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use clipwise_core::datapipe::{Category, Corpus, EmbeddingTable, LabeledCorpus, VideoRecord};
use clipwise_core::nnkern::Tensor;
use clipwise_core::visual::opening::OpeningExample;
use clipwise_core::visual::{FeatureExample, ImageExample, OPENING_FRAMES};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Keywords whose presence makes a synthetic title popular.
pub const PLANTED_KEYWORDS: [&str; 2] = ["amazing", "incredible"];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn timestamp(i: usize) -> DateTime<Utc> {
    DateTime::from_timestamp(1_500_000_000 + 3600 * i as i64, 0).expect("in range")
}

/// A synthetic headline corpus: half the titles contain one planted keyword.
pub struct HeadlineCorpus {
    pub corpus: Corpus,
    pub labeled: LabeledCorpus,
    pub embeddings: EmbeddingTable,
}

/// `n` titles of 4–8 filler words; popular ones carry one planted keyword at
/// a random position and get more views than every unpopular one.
pub fn headline_corpus(n: usize, dim: usize, seed: u64) -> HeadlineCorpus {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let filler: Vec<String> = (0..200).map(|i| format!("w{i:03}")).collect();
    let mut embeddings = EmbeddingTable::new(dim).unwrap();
    for tok in filler.iter().map(String::as_str).chain(PLANTED_KEYWORDS) {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut r)).collect();
        embeddings.insert(tok, v).unwrap();
    }
    let records: Vec<VideoRecord> = (0..n)
        .map(|i| {
            let popular = i % 2 == 0;
            let len = r.random_range(4..=8);
            let mut words: Vec<&str> = (0..len).map(|_| filler[r.random_range(0..filler.len())].as_str()).collect();
            if popular {
                let kw = PLANTED_KEYWORDS[r.random_range(0..2)];
                let at = r.random_range(0..len);
                words[at] = kw;
            }
            let views = if popular { r.random_range(2_000..4_000) } else { r.random_range(100..1_000) };
            VideoRecord {
                video_id: format!("h{i:05}"),
                title: words.join(" "),
                channel_id: "synthetic".into(),
                views,
                category: Category::new("news", "general"),
                tags: vec![],
                features_path: None,
                published_at: timestamp(i),
                shares: 0,
                comments: 0,
                channel_likes: Some(100),
            }
        })
        .collect();
    let corpus = Corpus::new(records).unwrap();
    let labeled = LabeledCorpus::build(&corpus, &BTreeMap::new()).unwrap();
    HeadlineCorpus {
        corpus,
        labeled,
        embeddings,
    }
}

/// Two Gaussian feature blobs (`±offset` along every axis, unit noise).
pub fn feature_blobs(n: usize, dim: usize, offset: f64, seed: u64) -> Vec<FeatureExample> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let label = i % 2;
            let c = if label == 1 { offset } else { -offset };
            FeatureExample {
                features: (0..dim).map(|_| c + normal.sample(&mut r)).collect(),
                label,
            }
        })
        .collect()
}

/// An opening-scene example and the position of its signal frame.
pub struct PlantedVideo {
    pub example: OpeningExample,
    pub signal_frame: usize,
}

/// 18 noise frames per video; one frame carries a marker (feature 0 = +4)
/// and the label's sign on feature 1 (±3).
pub fn opening_videos(n: usize, dim: usize, seed: u64) -> Vec<PlantedVideo> {
    assert!(dim >= 2);
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let label = i % 2;
            let mut frames: Vec<Vec<f64>> = (0..OPENING_FRAMES)
                .map(|_| (0..dim).map(|_| normal.sample(&mut r)).collect())
                .collect();
            let signal_frame = r.random_range(0..OPENING_FRAMES);
            frames[signal_frame][0] = 4.0;
            frames[signal_frame][1] = if label == 1 { 3.0 } else { -3.0 };
            PlantedVideo {
                example: OpeningExample { frames, label },
                signal_frame,
            }
        })
        .collect()
}

pub const PATCH: usize = 8;

/// An image example and the top-left corner of its bright patch, if any.
pub struct PatchImage {
    pub example: ImageExample,
    pub patch: Option<(usize, usize)>,
}

/// Grayscale `side × side` noise images in `[-0.2, 0.2]`; positives contain an
/// 8×8 patch of value 1.
pub fn patch_images(n: usize, side: usize, seed: u64) -> Vec<PatchImage> {
    let mut r = rng(seed);
    let mut out: Vec<PatchImage> = (0..n)
        .map(|i| {
            let label = i % 2;
            let mut data: Vec<f64> = (0..side * side).map(|_| r.random_range(-0.2..0.2)).collect();
            let patch = (label == 1).then(|| {
                let y = r.random_range(0..=side - PATCH);
                let x = r.random_range(0..=side - PATCH);
                for dy in 0..PATCH {
                    for dx in 0..PATCH {
                        data[(y + dy) * side + x + dx] = 1.0;
                    }
                }
                (y, x)
            });
            PatchImage {
                example: ImageExample {
                    image: Tensor::from_vec(&[side, side, 1], data).unwrap(),
                    label,
                },
                patch,
            }
        })
        .collect();
    out.shuffle(&mut r);
    out
}

/// Uniform random score vectors of length 1..=64.
pub fn score_vectors(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let len = r.random_range(1..=64);
            // Coarse values so ties occur.
            (0..len).map(|_| f64::from(r.random_range(0..20u8)) / 20.0).collect()
        })
        .collect()
}
