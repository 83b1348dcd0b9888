//! Model bundles: an `NNK1` checkpoint (`<stem>.nnk`) plus a JSON sidecar
//! (`<stem>.json`) holding what is needed to rebuild the architecture.

use std::path::{Path, PathBuf};

use clipwise_core::datapipe::EmbeddingTable;
use clipwise_core::headline::{HeadlineConfig, HeadlineModel};
use clipwise_core::nnkern::Parameterized;
use clipwise_core::visual::{FrameClassifier, OpeningModel, ThumbnailHead};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, Result};
use crate::formats::checkpoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sidecar {
    Headline {
        embedding_dim: usize,
        hidden: usize,
        attention: usize,
        /// SHA-256 over the embedding vocabulary the model was trained with.
        vocab_hash: String,
    },
    Thumbnail {
        feature_dim: usize,
    },
    Opening {
        feature_dim: usize,
        projection_dim: usize,
        attention_dim: usize,
    },
    Frame {
        channels: usize,
    },
}

/// A model restored from disk with the SHA-256 of its checkpoint bytes.
#[derive(Debug, Clone)]
pub struct Loaded<M> {
    pub model: M,
    pub sidecar: Sidecar,
    pub checksum: String,
}

pub fn vocab_hash(table: &EmbeddingTable) -> String {
    let mut h = Sha256::new();
    h.update((table.dim() as u64).to_le_bytes());
    for tok in table.tokens() {
        h.update(tok.as_bytes());
        h.update([0]);
    }
    hex::encode(h.finalize())
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("nnk"), stem.with_extension("json"))
}

/// Writes both files and returns the checkpoint checksum.
pub fn save<M: Parameterized>(stem: impl AsRef<Path>, model: &M, sidecar: &Sidecar) -> Result<String> {
    let (nnk, json) = paths(stem.as_ref());
    let bytes = checkpoint::model_bytes(model);
    crate::error::write(&nnk, &bytes)?;
    crate::error::write(&json, &serde_json::to_vec_pretty(sidecar).expect("plain enum"))?;
    Ok(checksum(&bytes))
}

pub fn read_sidecar(stem: impl AsRef<Path>) -> Result<Sidecar> {
    let (_, json) = paths(stem.as_ref());
    serde_json::from_slice(&crate::error::read(&json)?).map_err(|e| AppError::Format(format!("{}: {e}", json.display())))
}

fn read_parts(stem: &Path) -> Result<(Sidecar, Vec<u8>)> {
    let (nnk, _) = paths(stem);
    Ok((read_sidecar(stem)?, crate::error::read(&nnk)?))
}

impl<M: Parameterized> Loaded<M> {
    /// Wraps a model that was never written to disk.
    pub fn in_memory(model: M, sidecar: Sidecar) -> Self {
        let checksum = checksum(&checkpoint::model_bytes(&model));
        Loaded {
            model,
            sidecar,
            checksum,
        }
    }
}

fn restore<M: Parameterized>(mut model: M, sidecar: Sidecar, bytes: &[u8]) -> Result<Loaded<M>> {
    checkpoint::load_into(&mut model, bytes)?;
    Ok(Loaded {
        model,
        sidecar,
        checksum: checksum(bytes),
    })
}

fn wrong_kind(stem: &Path, want: &str) -> AppError {
    AppError::Config(format!("{} is not a {want} bundle", stem.display()))
}

/// Loads a headline model; `embeddings` must match the training vocabulary.
pub fn load_headline(stem: impl AsRef<Path>, embeddings: &EmbeddingTable) -> Result<Loaded<HeadlineModel>> {
    let stem = stem.as_ref();
    let (sidecar, bytes) = read_parts(stem)?;
    let Sidecar::Headline {
        embedding_dim,
        hidden,
        attention,
        ref vocab_hash,
    } = sidecar
    else {
        return Err(wrong_kind(stem, "headline"));
    };
    if embedding_dim != embeddings.dim() {
        return Err(AppError::Config(format!(
            "{} expects {embedding_dim}-d embeddings, got {}",
            stem.display(),
            embeddings.dim()
        )));
    }
    if *vocab_hash != self::vocab_hash(embeddings) {
        return Err(AppError::Config(format!(
            "{} was trained with a different embedding vocabulary",
            stem.display()
        )));
    }
    let config = HeadlineConfig {
        embedding_dim,
        hidden,
        attention,
    };
    restore(HeadlineModel::new(config, 0), sidecar, &bytes)
}

pub fn load_thumbnail(stem: impl AsRef<Path>) -> Result<Loaded<ThumbnailHead>> {
    let stem = stem.as_ref();
    let (sidecar, bytes) = read_parts(stem)?;
    let Sidecar::Thumbnail { feature_dim } = sidecar else {
        return Err(wrong_kind(stem, "thumbnail"));
    };
    restore(ThumbnailHead::new(feature_dim, 0), sidecar, &bytes)
}

pub fn load_opening(stem: impl AsRef<Path>) -> Result<Loaded<OpeningModel>> {
    let stem = stem.as_ref();
    let (sidecar, bytes) = read_parts(stem)?;
    let Sidecar::Opening {
        feature_dim,
        projection_dim,
        attention_dim,
    } = sidecar
    else {
        return Err(wrong_kind(stem, "opening"));
    };
    restore(OpeningModel::new(feature_dim, projection_dim, attention_dim, 0), sidecar, &bytes)
}

pub fn load_frame(stem: impl AsRef<Path>) -> Result<Loaded<FrameClassifier>> {
    let stem = stem.as_ref();
    let (sidecar, bytes) = read_parts(stem)?;
    let Sidecar::Frame { channels } = sidecar else {
        return Err(wrong_kind(stem, "frame"));
    };
    restore(FrameClassifier::new(channels, 0), sidecar, &bytes)
}

pub fn headline_sidecar(model: &HeadlineModel, embeddings: &EmbeddingTable) -> Sidecar {
    Sidecar::Headline {
        embedding_dim: model.config.embedding_dim,
        hidden: model.config.hidden,
        attention: model.config.attention,
        vocab_hash: vocab_hash(embeddings),
    }
}

pub fn opening_sidecar(model: &OpeningModel) -> Sidecar {
    Sidecar::Opening {
        feature_dim: model.feature_dim(),
        projection_dim: model.projection.w.rows(),
        attention_dim: model.attention.w_a.rows(),
    }
}
