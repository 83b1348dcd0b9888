use clipwise::synth::{headline_corpus, PLANTED_KEYWORDS};
use clipwise_core::archive::Archive;
use clipwise_core::chat::{parse_utterance, respond, HeadlineScorer};
use clipwise_core::datapipe::Label;
use clipwise_core::headline::{score_headline, train_headline_model, HeadlineConfig};
use clipwise_core::nnkern::TrainConfig;

const DIM: usize = 16;

fn cfg(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig { learning_rate: 0.1, epochs, batch_size: 8, seed, l2: 0.0 }
}

#[test]
fn planted_keyword_dominates_contributions() {
    let data = headline_corpus(400, DIM, 1);
    let trained = train_headline_model(&data.labeled, &data.embeddings, HeadlineConfig::new(DIM), &cfg(1, 30)).unwrap();
    assert!(trained.test_accuracy >= 0.95, "accuracy {}", trained.test_accuracy);
    let s = score_headline("amazing cat video", &trained.model, &data.embeddings).unwrap();
    assert_eq!(s.top_tokens(1)[0].0, "amazing");
    assert_eq!(s.oov_tokens, ["cat", "video"]);
    assert!(s.probability_popular > 0.5);

    let scorer = HeadlineScorer { model: &trained.model, embeddings: &data.embeddings };
    let intent = parse_utterance("rate my title: amazing cat video", &[] as &[&str]);
    let reply = respond(&intent, &Archive::default(), Some(&scorer));
    let top_words = reply.split("Top words:").nth(1).unwrap();
    assert!(top_words.contains("amazing"), "{reply}");
}

/// Scaling the keyword embedding up must not lower its attention weight.
#[test]
fn keyword_attention_grows_with_embedding_norm() {
    let mut monotone = 0;
    for seed in 0..10u64 {
        let mut data = headline_corpus(200, DIM, 100 + seed);
        let trained =
            train_headline_model(&data.labeled, &data.embeddings, HeadlineConfig::new(DIM), &cfg(seed, 20)).unwrap();
        let title = data
            .labeled
            .examples
            .iter()
            .find(|e| e.label == Label::Popular && e.record.title.contains(PLANTED_KEYWORDS[0]))
            .map(|e| e.record.title.clone())
            .unwrap();
        let base = data.embeddings.lookup(PLANTED_KEYWORDS[0]).0;
        let weights: Vec<f64> = [1.0, 1.5, 2.0, 3.0]
            .iter()
            .map(|&k| {
                data.embeddings.insert(PLANTED_KEYWORDS[0], base.iter().map(|v| v * k).collect()).unwrap();
                let s = score_headline(&title, &trained.model, &data.embeddings).unwrap();
                s.contributions.iter().find(|(t, _)| t == PLANTED_KEYWORDS[0]).unwrap().1
            })
            .collect();
        if weights.windows(2).all(|w| w[1] >= w[0]) {
            monotone += 1;
        } else {
            eprintln!("seed {seed}: {weights:?}");
        }
    }
    assert!(monotone >= 9, "{monotone}/10 seeds monotone");
}
