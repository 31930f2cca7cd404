//! Learned parent matching: features, two-role encoders, contrastive
//! margin loss, training, and cosine-argmax inference.

pub mod features;
pub mod infer;
pub mod loss;
pub mod model;
pub mod train;

pub use features::{build_feature_vector, ExternalEmbeddings, FeatureBuilder, FeatureConfig};
pub use infer::{predict_parent, score_candidates, DocScorer};
pub use loss::{clip_loss, margin_loss_backward, margin_loss_forward, LossGrads, MatchBatch};
pub use model::{encode, Dims, EncoderParams, MatchModel};
pub use train::{train, TrainLog, TrainOptions};
