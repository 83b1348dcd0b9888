//! Minimal deterministic neural kernels with analytic backward passes.

pub mod attention;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod lstm;
pub mod ops;
pub mod params;
pub mod tensor;
pub mod train;

pub use attention::{attention_pool, Attention};
pub use conv::Conv2d;
pub use dense::Dense;
pub use gradcheck::{gradient_check, GradCheckReport};
pub use lstm::{bilstm_encode, lstm_step, BiLstm, GateParams, LstmParams};
pub use ops::{sigmoid, softmax};
pub use params::{assign_params, Classifier, Differentiable, Init, KinkProbe, Parameterized};
pub use tensor::Tensor;
pub use train::{train_classifier, EpochMetrics, TrainConfig, Trained};

/// Tag for the kind of a parameter block, as recorded in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Dense,
    Lstm,
    Attention,
    Conv,
    EmbeddingProjection,
}
