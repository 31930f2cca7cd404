//! Document hierarchy parsing: deterministic structural rules plus a
//! learned parent matcher, with a synthetic corpus generator and an
//! evaluation harness.

pub mod assign;
pub mod category;
pub mod corpus;
pub mod doc;
pub mod error;
pub mod eval;
pub mod matcher;
pub mod pipeline;
pub mod rules;
pub mod synth;

pub use assign::{Assignment, Decision, PredictionRecord, Provenance};
pub use category::{Category, KnownCategory};
pub use corpus::{CorpusSplit, Manifest, SplitIds};
pub use doc::{parse_document, serialize_document, validate_document, BBox, Document, Entity, ParentRef};
pub use error::{Error, Result};
pub use eval::{accuracy, compare_methods, AccuracyReport, ComparisonReport};
pub use matcher::{
    train, DocScorer, FeatureBuilder, FeatureConfig, MatchModel, TrainLog, TrainOptions,
};
pub use pipeline::{check_forest, parse_hierarchy, ForestReport, ParseOptions};
pub use rules::{apply_all_rules, RuleConfig};
pub use synth::{generate_corpus, GenConfig};
