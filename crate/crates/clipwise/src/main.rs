use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use clipwise::bundle::{self, Sidecar};
use clipwise::config::Config;
use clipwise::data::{load_channel_stats, load_corpus, load_embeddings, sniff_embedding_dim};
use clipwise::demo::write_demo;
use clipwise::formats::fvec::FeatureMatrix;
use clipwise::formats::pnm::{read_frame_dir, write_saliency};
use clipwise::pipeline::{
    collect_examples, image_example, opening_example, opening_example_from_frames, thumbnail_example, train_holdout,
    InputSource, SplitSizes,
};
use clipwise::service::{self, headline_response, thumbnail_response, video_response, Registry, Upload, VideoInput};
use clipwise_core::archive::build_tag_index;
use clipwise_core::datapipe::LabeledCorpus;
use clipwise_core::deploy::{ab_lift, DEFAULT_RESAMPLES};
use clipwise_core::headline::{train_headline_model, HeadlineConfig};
use clipwise_core::nnkern::TrainConfig;
use clipwise_core::visual::{FrameClassifier, OpeningModel, TargetClass, ThumbnailHead};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "clipwise", version, about = "Popularity tools for short social videos")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Settings file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Corpus JSON-lines file.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Channel statistics JSON-lines file.
    #[arg(long, global = true)]
    channels: Option<PathBuf>,
    /// Word embedding text file.
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Model bundle directory.
    #[arg(long, global = true)]
    models_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic demo dataset.
    Demo {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        videos: usize,
    },
    /// Train the headline model (bi-LSTM + attention).
    TrainHeadline,
    /// Train the thumbnail scorer on per-video features or images.
    TrainThumbnail(TrainVisual),
    /// Train the opening-scene model on 18 frames per video.
    TrainOpening(TrainVisual),
    /// Score with trained models; prints JSON.
    Score {
        #[command(subcommand)]
        what: ScoreWhat,
    },
    /// Build the tag index and write it as JSON.
    Index {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
        #[arg(long)]
        score_log: Option<PathBuf>,
    },
    /// A/B lift with a bootstrap interval. Inputs hold whitespace-separated numbers.
    Ab {
        #[arg(long)]
        group_a: PathBuf,
        #[arg(long)]
        group_b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backbone {
    /// Precomputed FVEC features.
    External,
    /// Images through the built-in tiny CNN.
    Tinycnn,
}

#[derive(Args)]
struct TrainVisual {
    #[arg(long, value_enum, default_value_t = Backbone::External)]
    backbone: Backbone,
    /// Per-video inputs named after the video id; defaults to each record's `features_path`.
    #[arg(long)]
    inputs: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScoreWhat {
    Headline {
        #[arg(long)]
        title: String,
    },
    Thumbnail {
        /// FVEC file with one row per frame.
        #[arg(long, conflicts_with = "frames")]
        features: Option<PathBuf>,
        /// Directory of `frame_*.ppm`/`frame_*.pgm` images.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
    Video {
        /// FVEC file with 18 rows.
        #[arg(long, conflicts_with = "frames")]
        features: Option<PathBuf>,
        /// Directory of 18 frame images.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Write GradCAM maps for this class (frames only).
        #[arg(long, value_enum, requires = "saliency_out")]
        saliency: Option<SaliencyClass>,
        #[arg(long)]
        saliency_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SaliencyClass {
    Popular,
    Unpopular,
}

impl From<SaliencyClass> for TargetClass {
    fn from(c: SaliencyClass) -> Self {
        match c {
            SaliencyClass::Popular => TargetClass::Popular,
            SaliencyClass::Unpopular => TargetClass::Unpopular,
        }
    }
}

fn merged_config(g: &Global) -> anyhow::Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if g.$f.is_some() { cfg.$f = g.$f.clone(); } )* };
    }
    over!(corpus, channels, embeddings, models_dir, seed);
    Ok(cfg)
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> anyhow::Result<&'a T> {
    v.as_ref().with_context(|| format!("--{flag} (or `{}` in the config file) is required", flag.replace('-', "_")))
}

fn models_dir(cfg: &Config) -> anyhow::Result<&Path> {
    let dir = need(&cfg.models_dir, "models-dir")?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn labeled(cfg: &Config) -> anyhow::Result<(LabeledCorpus, PathBuf)> {
    let path = need(&cfg.corpus, "corpus")?;
    let corpus = load_corpus(path)?;
    let channels = match &cfg.channels {
        Some(p) => load_channel_stats(p)?,
        None => BTreeMap::new(),
    };
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((LabeledCorpus::build(&corpus, &channels)?, base))
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    model: &'static str,
    bundle: PathBuf,
    checksum: String,
    test_accuracy: f64,
    best_epoch: usize,
    split: SplitSizes,
    skipped_videos: usize,
}

fn train_defaults() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.1,
        epochs: 30,
        batch_size: 8,
        seed: 0,
        l2: 0.0,
    }
}

fn train_headline(cfg: &Config) -> anyhow::Result<()> {
    let (labeled, _) = labeled(cfg)?;
    let emb_path = need(&cfg.embeddings, "embeddings")?;
    let embeddings = load_embeddings(emb_path, sniff_embedding_dim(emb_path)?)?;
    let mut hc = HeadlineConfig::new(embeddings.dim());
    hc.hidden = cfg.hidden.unwrap_or(hc.hidden);
    hc.attention = cfg.attention.unwrap_or(hc.attention);
    let tc = cfg.train(train_defaults());
    let trained = train_headline_model(&labeled, &embeddings, hc, &tc)?;
    let stem = models_dir(cfg)?.join("headline");
    let checksum = bundle::save(&stem, &trained.model, &bundle::headline_sidecar(&trained.model, &embeddings))?;
    print_json(&TrainSummary {
        model: "headline",
        bundle: stem,
        checksum,
        test_accuracy: trained.test_accuracy,
        best_epoch: trained.best_epoch,
        split: SplitSizes {
            train: trained.train_size,
            val: trained.val_size,
            test: trained.test_size,
        },
        skipped_videos: 0,
    })
}

fn source(args: &TrainVisual, base: PathBuf, suffix: &str) -> InputSource {
    InputSource {
        dir: args.inputs.clone(),
        suffix: suffix.to_string(),
        base,
    }
}

fn train_thumbnail(cfg: &Config, args: &TrainVisual) -> anyhow::Result<()> {
    let (labeled, base) = labeled(cfg)?;
    let tc = cfg.train(train_defaults());
    let dir = models_dir(cfg)?;
    let (model, stem, checksum, h, skipped) = match args.backbone {
        Backbone::External => {
            let (examples, skipped) = collect_examples(&labeled, &source(args, base, ".fvec"), thumbnail_example)?;
            let dim = examples[0].features.len();
            let h = train_holdout(ThumbnailHead::new(dim, tc.seed), &examples, &tc)?;
            let stem = dir.join("thumbnail");
            let sum = bundle::save(&stem, &h.model, &Sidecar::Thumbnail { feature_dim: dim })?;
            ("thumbnail", stem, sum, (h.test_accuracy, h.best_epoch, h.sizes), skipped)
        }
        Backbone::Tinycnn => {
            let (examples, skipped) = collect_examples(&labeled, &source(args, base, ".pgm"), image_example)?;
            let channels = examples[0].image.shape()[2];
            let h = train_holdout(FrameClassifier::new(channels, tc.seed), &examples, &tc)?;
            let stem = dir.join("frame");
            let sum = bundle::save(&stem, &h.model, &Sidecar::Frame { channels })?;
            ("frame", stem, sum, (h.test_accuracy, h.best_epoch, h.sizes), skipped)
        }
    };
    print_json(&TrainSummary {
        model,
        bundle: stem,
        checksum,
        test_accuracy: h.0,
        best_epoch: h.1,
        split: h.2,
        skipped_videos: skipped,
    })
}

fn train_opening(cfg: &Config, args: &TrainVisual) -> anyhow::Result<()> {
    let (labeled, base) = labeled(cfg)?;
    let tc = cfg.train(train_defaults());
    let dir = models_dir(cfg)?;
    let (examples, skipped) = match args.backbone {
        Backbone::External => collect_examples(&labeled, &source(args, base, ".fvec"), opening_example)?,
        Backbone::Tinycnn => {
            let frame = bundle::load_frame(dir.join("frame"))
                .context("tinycnn opening training needs a frame bundle; run train-thumbnail --backbone tinycnn first")?;
            let backbone = frame.model.backbone;
            collect_examples(&labeled, &source(args, base, ""), |p, l| {
                opening_example_from_frames(p, l, &backbone)
            })?
        }
    };
    let dim = examples[0].frames[0].len();
    let model = OpeningModel::new(dim, cfg.projection.unwrap_or(16), cfg.attention.unwrap_or(16), tc.seed);
    let h = train_holdout(model, &examples, &tc)?;
    let stem = dir.join("opening");
    let checksum = bundle::save(&stem, &h.model, &bundle::opening_sidecar(&h.model))?;
    print_json(&TrainSummary {
        model: "opening",
        bundle: stem,
        checksum,
        test_accuracy: h.test_accuracy,
        best_epoch: h.best_epoch,
        split: h.sizes,
        skipped_videos: skipped,
    })
}

fn score(cfg: &Config, what: &ScoreWhat) -> anyhow::Result<()> {
    let reg = Registry::load(cfg)?;
    match what {
        ScoreWhat::Headline { title } => print_json(&headline_response(&reg, title)?),
        ScoreWhat::Thumbnail { features, frames } => {
            let upload = match (features, frames) {
                (Some(f), _) => Upload::Features(FeatureMatrix::read(f)?),
                (None, Some(d)) => Upload::Frames(read_frame_dir(d)?),
                (None, None) => bail!("give --features or --frames"),
            };
            print_json(&thumbnail_response(&reg, &upload)?)
        }
        ScoreWhat::Video {
            features,
            frames,
            saliency,
            saliency_out,
        } => {
            let input = match (features, frames) {
                (Some(f), _) => VideoInput::Features(FeatureMatrix::read(f)?.to_rows()),
                (None, Some(d)) => VideoInput::Frames(read_frame_dir(d)?),
                (None, None) => bail!("give --features or --frames"),
            };
            let (mut resp, maps) = video_response(&reg, &input, saliency.map(Into::into))?;
            if let Some(out) = saliency_out {
                std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
                for m in &maps {
                    write_saliency(out, m)?;
                }
                // The maps are on disk; keep stdout readable.
                for s in &mut resp.saliency {
                    s.pgm = format!("saliency_{:05}.pgm", s.frame_index);
                }
            }
            print_json(&resp)
        }
    }
}

fn read_numbers(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("{}: {t:?} is not a number", path.display())))
        .collect()
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let cfg = merged_config(&cli.global)?;
    match &cli.command {
        Command::Demo { out, videos } => {
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            print_json(&write_demo(out, *videos, cfg.seed.unwrap_or(0))?)
        }
        Command::TrainHeadline => train_headline(&cfg),
        Command::TrainThumbnail(a) => train_thumbnail(&cfg, a),
        Command::TrainOpening(a) => train_opening(&cfg, a),
        Command::Score { what } => score(&cfg, what),
        Command::Index { out } => {
            let corpus = load_corpus(need(&cfg.corpus, "corpus")?)?;
            let json = serde_json::to_string_pretty(&build_tag_index(&corpus))?;
            match out {
                Some(p) => std::fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display())),
                None => {
                    println!("{json}");
                    Ok(())
                }
            }
        }
        Command::Serve { bind, score_log } => {
            let mut cfg = cfg.clone();
            if score_log.is_some() {
                cfg.score_log = score_log.clone();
            }
            let bind = bind.clone().or_else(|| cfg.bind.clone()).unwrap_or_else(|| "127.0.0.1:8080".into());
            tokio::runtime::Runtime::new()?.block_on(service::serve(cfg, &bind))
        }
        Command::Ab {
            group_a,
            group_b,
            resamples,
        } => {
            let a = read_numbers(group_a)?;
            let b = read_numbers(group_b)?;
            print_json(&ab_lift(&a, &b, cfg.seed.unwrap_or(0), *resamples)?)
        }
    }
}
