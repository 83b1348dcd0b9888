//! Writes a small synthetic dataset exercising every CLI command.

use std::path::Path;

use clipwise_core::datapipe::{Category, Corpus, Label};
use clipwise_core::nnkern::Tensor;
use clipwise_core::visual::OPENING_FRAMES;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::{write_corpus, write_embeddings};
use crate::error::{AppError, Result};
use crate::formats::fvec::FeatureMatrix;
use crate::formats::pnm::Image;
use crate::synth::{headline_corpus, PATCH};

pub const FEATURE_DIM: usize = 8;
pub const EMBEDDING_DIM: usize = 16;
pub const IMAGE_SIDE: usize = 32;

const TAGS: [&str; 6] = ["cats", "dogs", "cooking", "politics", "sports", "travel"];
const CATEGORIES: [(&str, &str); 3] = [("lifestyle", "pets"), ("lifestyle", "food"), ("news", "general")];

#[derive(Debug, Serialize)]
pub struct DemoSummary {
    pub videos: usize,
    pub popular: usize,
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| AppError::io(p, e))
}

fn noise_image(r: &mut ChaCha8Rng, patch: bool) -> Image {
    let mut data: Vec<f64> = (0..IMAGE_SIDE * IMAGE_SIDE).map(|_| r.random_range(-0.2..0.2)).collect();
    if patch {
        let y = r.random_range(0..=IMAGE_SIDE - PATCH);
        let x = r.random_range(0..=IMAGE_SIDE - PATCH);
        for dy in 0..PATCH {
            data[(y + dy) * IMAGE_SIDE + x..(y + dy) * IMAGE_SIDE + x + PATCH].fill(1.0);
        }
    }
    let t = Tensor::from_vec(&[IMAGE_SIDE, IMAGE_SIDE, 1], data).expect("fixed shape");
    Image::from_tensor(&t).expect("rank 3")
}

/// Layout under `dir`:
/// `corpus.jsonl`, `embeddings.txt`, `thumbnails/<id>.fvec` (one row),
/// `openings/<id>.fvec` (18 rows), `frames/<id>.pgm` and
/// `opening_frames/<id>/frame_%05d.pgm`, plus `opening_tinycnn.toml`
/// training settings for the image-based opening model.
pub fn write_demo(dir: &Path, n: usize, seed: u64) -> Result<DemoSummary> {
    let hc = headline_corpus(n, EMBEDDING_DIM, seed);
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0xd3e0);
    let normal = Normal::new(0.0, 1.0).expect("valid");
    for sub in ["thumbnails", "openings", "frames", "opening_frames"] {
        mkdir(&dir.join(sub))?;
    }
    let mut records = Vec::with_capacity(n);
    let mut popular = 0;
    for ex in &hc.labeled.examples {
        let mut rec = ex.record.clone();
        let is_popular = ex.label == Label::Popular;
        popular += usize::from(is_popular);
        let k = r.random_range(1..=2);
        rec.tags = (0..k).map(|_| TAGS[r.random_range(0..TAGS.len())].to_string()).collect();
        let (t1, t2) = CATEGORIES[r.random_range(0..CATEGORIES.len())];
        rec.category = Category::new(t1, t2);
        rec.shares = rec.views / 10 + r.random_range(0..20);
        rec.comments = rec.views / 50 + r.random_range(0..5);
        let sign = if is_popular { 1.0 } else { -1.0 };

        let thumb: Vec<f64> = (0..FEATURE_DIM).map(|_| 1.5 * sign + normal.sample(&mut r)).collect();
        FeatureMatrix::from_rows(&[thumb])?.write(dir.join("thumbnails").join(format!("{}.fvec", rec.video_id)))?;

        let mut frames: Vec<Vec<f64>> = (0..OPENING_FRAMES)
            .map(|_| (0..FEATURE_DIM).map(|_| normal.sample(&mut r)).collect())
            .collect();
        let signal = r.random_range(0..OPENING_FRAMES);
        frames[signal][0] = 4.0;
        frames[signal][1] = 3.0 * sign;
        FeatureMatrix::from_rows(&frames)?.write(dir.join("openings").join(format!("{}.fvec", rec.video_id)))?;

        noise_image(&mut r, is_popular).write(dir.join("frames").join(format!("{}.pgm", rec.video_id)))?;
        let fdir = dir.join("opening_frames").join(&rec.video_id);
        mkdir(&fdir)?;
        let patch_at = is_popular.then(|| r.random_range(0..OPENING_FRAMES));
        for i in 0..OPENING_FRAMES {
            noise_image(&mut r, patch_at == Some(i)).write(fdir.join(format!("frame_{i:05}.pgm")))?;
        }
        records.push(rec);
    }
    write_corpus(dir.join("corpus.jsonl"), &Corpus::new(records)?)?;
    write_embeddings(dir.join("embeddings.txt"), &hc.embeddings)?;
    // Frozen tiny CNN features are small in scale; the opening model needs a larger step.
    crate::error::write(dir.join("opening_tinycnn.toml"), b"learning_rate = 0.5\nepochs = 60\n")?;
    Ok(DemoSummary { videos: n, popular })
}
