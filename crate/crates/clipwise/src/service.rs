//! HTTP + JSON API over the loaded models, with the deployment endpoints
//! (alerting, A/B lift). Every error is a 400 with `{error_code, message}`.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Multipart, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use clipwise_core::archive::Archive;
use clipwise_core::chat::{parse_utterance, respond, Confidence, HeadlineScorer, IntentName, TitleScorer};
use clipwise_core::datapipe::{Corpus, EmbeddingTable};
use clipwise_core::deploy::{ab_lift, category_alert_check, category_medians, AbResult, AlertDecision, DEFAULT_RESAMPLES};
use clipwise_core::headline::{score_headline, HeadlineModel};
use clipwise_core::visual::{
    recommend_thumbnail, sample_frame_indices, score_frames, score_opening, score_opening_frames, FrameClassifier,
    OpeningModel, SaliencyMap, TargetClass, ThumbnailHead, THUMBNAIL_FRAMES,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bundle::{self, Loaded, Sidecar};
use crate::config::Config;
use crate::data;
use crate::error::{AppError, Result};
use crate::formats::fvec::FeatureMatrix;
use crate::formats::pnm::{saliency_image, Image};
use crate::scorelog::ScoreLog;

pub struct HeadlineEntry {
    pub loaded: Loaded<HeadlineModel>,
    pub embeddings: EmbeddingTable,
}

/// Everything the handlers read. Replaced as a whole on reload.
#[derive(Default)]
pub struct Registry {
    pub archive: Option<Archive>,
    pub headline: Option<HeadlineEntry>,
    pub thumbnail: Option<Loaded<ThumbnailHead>>,
    pub opening: Option<Loaded<OpeningModel>>,
    /// Tiny CNN classifier; enables image uploads and saliency.
    pub frame: Option<Loaded<FrameClassifier>>,
}

impl Registry {
    /// Loads the corpus and every bundle present in `models_dir`.
    pub fn load(cfg: &Config) -> Result<Self> {
        let mut reg = Registry::default();
        if let Some(path) = &cfg.corpus {
            reg.archive = Some(Archive::new(data::load_corpus(path)?));
        }
        let Some(dir) = &cfg.models_dir else {
            return Ok(reg);
        };
        if !dir.is_dir() {
            return Err(AppError::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "models directory not found"),
            ));
        }
        let present = |name: &str| {
            let stem = dir.join(name);
            (stem.with_extension("nnk").exists() || stem.with_extension("json").exists()).then_some(stem)
        };
        if let Some(stem) = present("headline") {
            let Sidecar::Headline { embedding_dim, .. } = bundle::read_sidecar(&stem)? else {
                return Err(AppError::Config(format!("{} is not a headline bundle", stem.display())));
            };
            let path = cfg.embeddings.as_ref().ok_or_else(|| {
                AppError::Config(format!("{} needs an embeddings file", stem.display()))
            })?;
            let embeddings = data::load_embeddings(path, embedding_dim)?;
            let loaded = bundle::load_headline(&stem, &embeddings)?;
            reg.headline = Some(HeadlineEntry { loaded, embeddings });
        }
        if let Some(stem) = present("thumbnail") {
            reg.thumbnail = Some(bundle::load_thumbnail(&stem)?);
        }
        if let Some(stem) = present("opening") {
            reg.opening = Some(bundle::load_opening(&stem)?);
        }
        if let Some(stem) = present("frame") {
            reg.frame = Some(bundle::load_frame(&stem)?);
        }
        Ok(reg)
    }
}

struct Shared {
    registry: RwLock<Arc<Registry>>,
    score_log: Option<ScoreLog>,
}

#[derive(Clone)]
pub struct AppState(Arc<Shared>);

impl AppState {
    pub fn new(registry: Registry, score_log: Option<ScoreLog>) -> Self {
        AppState(Arc::new(Shared {
            registry: RwLock::new(Arc::new(registry)),
            score_log,
        }))
    }

    /// The current registry; requests in flight keep the one they started with.
    pub fn registry(&self) -> Arc<Registry> {
        self.0.registry.read().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn swap(&self, registry: Registry) {
        *self.0.registry.write().unwrap_or_else(|p| p.into_inner()) = Arc::new(registry);
    }

    pub fn score_log(&self) -> Option<&ScoreLog> {
        self.0.score_log.as_ref()
    }
}

pub struct ApiError(pub AppError);

impl<E: Into<AppError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(e.into())
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error_code: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (StatusCode::BAD_REQUEST, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| AppError::Format(format!("invalid request body: {e}")))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/headline/score", post(headline_score))
        .route("/thumbnail/recommend", post(thumbnail_recommend))
        .route("/video/score", post(video_score))
        .route("/alert/check", post(alert_check))
        .route("/chat", post(chat))
        .route("/ab/lift", post(ab))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelInfo {
    pub checksum: String,
    #[serde(flatten)]
    pub sidecar: Sidecar,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub corpus_videos: Option<usize>,
    pub models: BTreeMap<String, ModelInfo>,
}

fn info<M>(l: &Loaded<M>) -> ModelInfo {
    ModelInfo {
        checksum: l.checksum.clone(),
        sidecar: l.sidecar.clone(),
    }
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    let reg = state.registry();
    let mut models = BTreeMap::new();
    if let Some(h) = &reg.headline {
        models.insert("headline".to_string(), info(&h.loaded));
    }
    if let Some(m) = &reg.thumbnail {
        models.insert("thumbnail".to_string(), info(m));
    }
    if let Some(m) = &reg.opening {
        models.insert("opening".to_string(), info(m));
    }
    if let Some(m) = &reg.frame {
        models.insert("frame".to_string(), info(m));
    }
    Json(Health {
        status: "ok".into(),
        corpus_videos: reg.archive.as_ref().map(|a| a.corpus().len()),
        models,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HeadlineRequest {
    pub title: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TokenWeight {
    pub token: String,
    pub weight: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct HeadlineResponse {
    pub probability_popular: f64,
    /// One entry per token, in title order.
    pub contributions: Vec<TokenWeight>,
    pub oov_tokens: Vec<String>,
}

pub fn headline_response(reg: &Registry, title: &str) -> Result<HeadlineResponse> {
    let h = reg.headline.as_ref().ok_or(AppError::ModelNotLoaded("headline"))?;
    let s = score_headline(title, &h.loaded.model, &h.embeddings)?;
    Ok(HeadlineResponse {
        probability_popular: s.probability_popular,
        contributions: s
            .contributions
            .into_iter()
            .map(|(token, weight)| TokenWeight { token, weight })
            .collect(),
        oov_tokens: s.oov_tokens,
    })
}

async fn headline_score(State(state): State<AppState>, body: Bytes) -> ApiResult<HeadlineResponse> {
    let req: HeadlineRequest = parse_body(&body)?;
    Ok(Json(headline_response(&state.registry(), &req.title)?))
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ThumbnailResponse {
    /// Positions in the upload that were scored.
    pub frame_indices: Vec<usize>,
    pub scores: Vec<f64>,
    /// Upload position of the best frame.
    pub recommended: usize,
}

pub enum Upload {
    Features(FeatureMatrix),
    Frames(Vec<Image>),
}

async fn read_upload(mut multipart: Multipart) -> Result<Upload> {
    let mut features = None;
    let mut frames = Vec::new();
    let bad = |e: axum::extract::multipart::MultipartError| AppError::Format(format!("multipart: {e}"));
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or("").to_string();
        let bytes = field.bytes().await.map_err(bad)?;
        match name.as_str() {
            "features" if features.is_none() => features = Some(FeatureMatrix::from_bytes(&bytes)?),
            "features" => return Err(AppError::Format("only one features file per request".into())),
            "frames" => frames.push(Image::from_bytes(&bytes)?),
            other => return Err(AppError::Format(format!("unexpected multipart field {other:?}"))),
        }
    }
    match (features, frames.is_empty()) {
        (Some(f), true) => Ok(Upload::Features(f)),
        (None, false) => Ok(Upload::Frames(frames)),
        (Some(_), false) => Err(AppError::Format("send either features or frames, not both".into())),
        (None, true) => Err(AppError::Format("no features or frames uploaded".into())),
    }
}

/// Samples up to [`THUMBNAIL_FRAMES`] uniformly spaced frames and picks the best.
pub fn thumbnail_response(reg: &Registry, upload: &Upload) -> Result<ThumbnailResponse> {
    let count = match upload {
        Upload::Features(m) => m.count(),
        Upload::Frames(f) => f.len(),
    };
    let frame_indices = sample_frame_indices(count, THUMBNAIL_FRAMES)?;
    let scores = match upload {
        Upload::Features(m) => {
            let head = reg.thumbnail.as_ref().ok_or(AppError::ModelNotLoaded("thumbnail"))?;
            let rows: Vec<Vec<f64>> =
                frame_indices.iter().map(|&i| m.row(i).iter().map(|&v| f64::from(v)).collect()).collect();
            score_frames(&rows, &head.model.0)?
        }
        Upload::Frames(images) => {
            let frame = reg.frame.as_ref().ok_or(AppError::ModelNotLoaded("frame"))?;
            frame_indices
                .iter()
                .map(|&i| frame.model.probability(&images[i].to_tensor()))
                .collect::<clipwise_core::Result<Vec<_>>>()?
        }
    };
    let best = recommend_thumbnail(&scores)?;
    Ok(ThumbnailResponse {
        recommended: frame_indices[best],
        frame_indices,
        scores,
    })
}

async fn thumbnail_recommend(State(state): State<AppState>, multipart: Multipart) -> ApiResult<ThumbnailResponse> {
    let upload = read_upload(multipart).await?;
    Ok(Json(thumbnail_response(&state.registry(), &upload)?))
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct VideoRequest {
    /// 18 rows of backbone features.
    #[serde(default)]
    pub features: Option<Vec<Vec<f64>>>,
    /// 18 base64-encoded PPM/PGM frames, scored through the tiny CNN.
    #[serde(default)]
    pub frames: Option<Vec<String>>,
    /// Class to explain with GradCAM; frames only.
    #[serde(default)]
    pub saliency: Option<TargetClass>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct SaliencyOut {
    pub frame_index: usize,
    pub min: f64,
    pub max: f64,
    pub width: usize,
    pub height: usize,
    /// Base64 of a binary PGM.
    pub pgm: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct VideoResponse {
    pub probability_popular: f64,
    pub frame_attention: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub saliency: Vec<SaliencyOut>,
}

pub enum VideoInput {
    Features(Vec<Vec<f64>>),
    Frames(Vec<Image>),
}

/// Opening-scene score plus GradCAM maps when `saliency` is set (frames only).
pub fn video_response(
    reg: &Registry,
    input: &VideoInput,
    saliency: Option<TargetClass>,
) -> Result<(VideoResponse, Vec<SaliencyMap>)> {
    let opening = reg.opening.as_ref().ok_or(AppError::ModelNotLoaded("opening"))?;
    let (score, maps) = match input {
        VideoInput::Features(features) => {
            if saliency.is_some() {
                return Err(AppError::Config("saliency needs image frames, not precomputed features".into()));
            }
            (score_opening(features, &opening.model)?, Vec::new())
        }
        VideoInput::Frames(images) => {
            let frame = reg.frame.as_ref().ok_or(AppError::ModelNotLoaded("frame"))?;
            let tensors: Vec<_> = images.iter().map(Image::to_tensor).collect();
            score_opening_frames(&tensors, &frame.model.backbone, &opening.model, saliency)?
        }
    };
    let out = maps
        .iter()
        .map(|m| SaliencyOut {
            frame_index: m.frame_index,
            min: m.raw_min,
            max: m.raw_max,
            width: m.width,
            height: m.height,
            pgm: BASE64.encode(saliency_image(m).to_bytes()),
        })
        .collect();
    let response = VideoResponse {
        probability_popular: score.probability_popular,
        frame_attention: score.frame_attention,
        saliency: out,
    };
    Ok((response, maps))
}

async fn video_score(State(state): State<AppState>, body: Bytes) -> ApiResult<VideoResponse> {
    let req: VideoRequest = parse_body(&body)?;
    let input = match (req.features, req.frames) {
        (Some(features), None) => VideoInput::Features(features),
        (None, Some(frames)) => VideoInput::Frames(
            frames
                .iter()
                .map(|b64| {
                    let bytes = BASE64
                        .decode(b64)
                        .map_err(|e| AppError::Format(format!("frame is not base64: {e}")))?;
                    Image::from_bytes(&bytes)
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => return Err(AppError::Format("send exactly one of features or frames".into()).into()),
    };
    Ok(Json(video_response(&state.registry(), &input, req.saliency)?.0))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlertRequest {
    pub score: f64,
    pub category: String,
    /// Append the score to the category log after checking.
    #[serde(default)]
    pub record: bool,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AlertResponse {
    pub category: String,
    /// Median of the category's history, used to normalize.
    pub category_median: Option<f64>,
    #[serde(flatten)]
    pub decision: AlertDecision,
}

async fn alert_check(State(state): State<AppState>, body: Bytes) -> ApiResult<AlertResponse> {
    let req: AlertRequest = parse_body(&body)?;
    if !req.score.is_finite() {
        return Err(AppError::Config("score must be finite".into()).into());
    }
    let history = match state.score_log() {
        Some(log) => log.pooled()?,
        None => Vec::new(),
    };
    let decision = category_alert_check(req.score, &req.category, &history);
    let category_median = category_medians(&history).get(&req.category).copied();
    if req.record {
        let log = state
            .score_log()
            .ok_or_else(|| AppError::Config("no score log configured; cannot record".into()))?;
        log.append(&req.category, req.score)?;
    }
    Ok(Json(AlertResponse {
        category: req.category,
        category_median,
        decision,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ChatRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ChatResponse {
    pub intent: IntentName,
    pub slots: BTreeMap<String, String>,
    pub confidence: Confidence,
    pub reply: String,
}

async fn chat(State(state): State<AppState>, body: Bytes) -> ApiResult<ChatResponse> {
    let req: ChatRequest = parse_body(&body)?;
    let reg = state.registry();
    let empty;
    let archive = match &reg.archive {
        Some(a) => a,
        None => {
            empty = Archive::new(Corpus::new(Vec::new())?);
            &empty
        }
    };
    let vocab: Vec<&str> = archive.index().vocabulary().collect();
    let intent = parse_utterance(&req.text, &vocab);
    let scorer = reg.headline.as_ref().map(|h| HeadlineScorer {
        model: &h.loaded.model,
        embeddings: &h.embeddings,
    });
    let reply = respond(&intent, archive, scorer.as_ref().map(|s| s as &dyn TitleScorer));
    Ok(Json(ChatResponse {
        intent: intent.name,
        slots: intent.slots,
        confidence: intent.confidence,
        reply,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AbRequest {
    pub group_a: Vec<f64>,
    pub group_b: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resamples: Option<usize>,
}

async fn ab(body: Bytes) -> ApiResult<AbResult> {
    let req: AbRequest = parse_body(&body)?;
    let resamples = req.resamples.unwrap_or(DEFAULT_RESAMPLES);
    if resamples > 1_000_000 {
        return Err(AppError::Config("at most 1000000 resamples".into()).into());
    }
    Ok(Json(ab_lift(&req.group_a, &req.group_b, req.seed, resamples)?))
}

/// Serves until ctrl-c. On unix, SIGHUP reloads the registry from `cfg`.
pub async fn serve(cfg: Config, bind: &str) -> anyhow::Result<()> {
    let registry = Registry::load(&cfg)?;
    let score_log = cfg.score_log.as_deref().map(ScoreLog::open).transpose()?;
    let state = AppState::new(registry, score_log);
    spawn_reloader(state.clone(), cfg);
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(unix)]
fn spawn_reloader(state: AppState, cfg: Config) {
    use tokio::signal::unix::{signal, SignalKind};
    tokio::spawn(async move {
        let Ok(mut hup) = signal(SignalKind::hangup()) else {
            return;
        };
        while hup.recv().await.is_some() {
            match Registry::load(&cfg) {
                Ok(r) => {
                    state.swap(r);
                    eprintln!("models reloaded");
                }
                Err(e) => eprintln!("reload failed, keeping current models: {e}"),
            }
        }
    });
}

#[cfg(not(unix))]
fn spawn_reloader(_state: AppState, _cfg: Config) {}
