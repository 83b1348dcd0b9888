//! Training pipelines used by the CLI: example assembly from a labeled
//! corpus and 80/10/10 holdout training.

use std::path::{Path, PathBuf};

use clipwise_core::datapipe::{split_dataset, LabeledCorpus, SplitRatios, VideoRecord};
use clipwise_core::nnkern::train::accuracy;
use clipwise_core::nnkern::{train_classifier, Classifier, EpochMetrics, TrainConfig};
use clipwise_core::visual::opening::OpeningExample;
use clipwise_core::visual::{FeatureExample, ImageExample, TinyCnn, OPENING_FRAMES};
use clipwise_core::Error as CoreError;
use serde::Serialize;

use crate::error::{AppError, Result};
use crate::formats::fvec::FeatureMatrix;
use crate::formats::pnm::{read_frame_dir, Image};

#[derive(Debug, Clone)]
pub struct Holdout<M> {
    pub model: M,
    pub history: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub test_accuracy: f64,
    pub sizes: SplitSizes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Seeded 80/10/10 split, training with best-validation checkpointing,
/// then accuracy on the held-out test part.
pub fn train_holdout<M>(model: M, examples: &[M::Example], cfg: &TrainConfig) -> Result<Holdout<M>>
where
    M: Classifier,
    M::Example: Clone,
{
    let split = split_dataset(examples, SplitRatios::STANDARD, cfg.seed)?;
    let val = (!split.val.is_empty()).then_some(split.val.as_slice());
    let trained = train_classifier(model, &split.train, val, cfg)?;
    let test_accuracy = if split.test.is_empty() {
        f64::NAN
    } else {
        accuracy(&trained.model, &split.test)?
    };
    Ok(Holdout {
        model: trained.model,
        history: trained.history,
        best_epoch: trained.best_epoch,
        test_accuracy,
        sizes: SplitSizes {
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
        },
    })
}

/// Where a record's per-video input lives: `<dir>/<video_id><suffix>` when a
/// directory is given, else the record's `features_path` relative to `base`.
#[derive(Debug, Clone)]
pub struct InputSource {
    pub dir: Option<PathBuf>,
    pub suffix: String,
    pub base: PathBuf,
}

impl InputSource {
    /// `None` when the record has no input. A path named by the record
    /// itself must exist.
    pub fn locate(&self, record: &VideoRecord) -> Result<Option<PathBuf>> {
        match &self.dir {
            Some(dir) => {
                let p = dir.join(format!("{}{}", record.video_id, self.suffix));
                Ok(p.exists().then_some(p))
            }
            None => match &record.features_path {
                Some(rel) => {
                    let p = self.base.join(rel);
                    if p.exists() {
                        Ok(Some(p))
                    } else {
                        Err(AppError::io(
                            &p,
                            std::io::Error::new(
                                std::io::ErrorKind::NotFound,
                                format!("features of video {} not found", record.video_id),
                            ),
                        ))
                    }
                }
                None => Ok(None),
            },
        }
    }
}

/// Collects one example per record that has an input; returns the examples
/// and the number of records skipped.
pub fn collect_examples<T>(
    labeled: &LabeledCorpus,
    source: &InputSource,
    mut load: impl FnMut(&Path, usize) -> Result<T>,
) -> Result<(Vec<T>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for ex in &labeled.examples {
        match source.locate(&ex.record)? {
            Some(path) => out.push(load(&path, ex.label.as_class())?),
            None => skipped += 1,
        }
    }
    if out.is_empty() {
        return Err(CoreError::EmptyDataset.into());
    }
    Ok((out, skipped))
}

/// The first FVEC row is the published thumbnail's features.
pub fn thumbnail_example(path: &Path, label: usize) -> Result<FeatureExample> {
    let m = FeatureMatrix::read(path)?;
    if m.count() == 0 {
        return Err(AppError::Format(format!("{} has no feature rows", path.display())));
    }
    Ok(FeatureExample {
        features: m.row(0).iter().map(|&v| f64::from(v)).collect(),
        label,
    })
}

pub fn image_example(path: &Path, label: usize) -> Result<ImageExample> {
    Ok(ImageExample {
        image: Image::read(path)?.to_tensor(),
        label,
    })
}

pub fn opening_example(path: &Path, label: usize) -> Result<OpeningExample> {
    let frames = FeatureMatrix::read(path)?.to_rows();
    check_frames(path, frames.len())?;
    Ok(OpeningExample { frames, label })
}

/// A directory of 18 frame images, reduced to backbone features.
pub fn opening_example_from_frames(path: &Path, label: usize, backbone: &TinyCnn) -> Result<OpeningExample> {
    let images = read_frame_dir(path)?;
    check_frames(path, images.len())?;
    let frames = images
        .iter()
        .map(|img| Ok(backbone.forward(&img.to_tensor())?.features))
        .collect::<Result<Vec<_>>>()?;
    Ok(OpeningExample { frames, label })
}

fn check_frames(path: &Path, n: usize) -> Result<()> {
    if n != OPENING_FRAMES {
        return Err(CoreError::Shape(format!("{}: expected {OPENING_FRAMES} frames, found {n}", path.display())).into());
    }
    Ok(())
}
