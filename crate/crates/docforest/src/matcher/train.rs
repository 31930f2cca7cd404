//! Training: per-document batches, margin loss, adaptive first-order
//! updates.
//!
//! One document is one batch: its trainable children (rule-residual
//! entities whose gold label names another entity) score against parent
//! rows for every entity of the document in reading order. The child's
//! own parent-role row stays in the matrix as an ordinary negative; the
//! two encoders are separate, so it never scores as a trivial match.
//! Each batch triggers one optimizer step. Document order is reshuffled
//! every epoch from a seed-derived stream, so training is a pure function
//! of (corpus, init, options).

use crate::doc::{Document, ParentRef};
use crate::error::{Error, Result};
use crate::matcher::features::{ExternalEmbeddings, FeatureBuilder};
use crate::matcher::loss::{margin_loss_backward, MatchBatch};
use crate::matcher::model::{
    encode_backward, encode_trace, EncoderGrads, EncoderParams, MatchModel,
};
use crate::rules::{apply_all_rules, RuleConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 30,
            learning_rate: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Mean per-document loss of each epoch.
    pub epoch_mean_loss: Vec<f64>,
    /// Documents that contributed at least one trainable child.
    pub trainable_docs: usize,
    /// Trainable children across those documents.
    pub trainable_children: usize,
}

/// Feature matrices and label structure of one document, fixed for the
/// whole run.
struct DocBatch {
    /// Features of trainable children, in reading order.
    child_x: Vec<Vec<f64>>,
    /// Features of all entities, in reading order.
    parent_x: Vec<Vec<f64>>,
    /// Index into `parent_x` of each child's gold parent.
    labels: Vec<usize>,
}

/// Children are the rule-residual entities whose gold parent is another
/// entity; parents are all entities. Returns None when nothing in the
/// document is trainable.
fn build_doc_batch(
    doc: &Document,
    model: &MatchModel,
    rule_cfg: &RuleConfig,
    external: Option<&ExternalEmbeddings>,
) -> Result<Option<DocBatch>> {
    let (_, residual) = apply_all_rules(doc, rule_cfg)?;
    let order = doc.reading_order();
    let pos_of_id: std::collections::HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| (doc.entities[i].id.as_str(), pos))
        .collect();

    let mut child_x = Vec::new();
    let mut labels = Vec::new();
    let builder = FeatureBuilder::with_external(doc, &model.feature_config, external);
    for &i in &order {
        let e = &doc.entities[i];
        if !residual.contains(&e.id) {
            continue;
        }
        let Some(ParentRef::Entity(pid)) = &e.gold_parent else {
            continue;
        };
        child_x.push(builder.features(e)?);
        labels.push(pos_of_id[pid.as_str()]);
    }
    if child_x.is_empty() {
        return Ok(None);
    }
    let parent_x = order
        .iter()
        .map(|&i| builder.features(&doc.entities[i]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(DocBatch {
        child_x,
        parent_x,
        labels,
    }))
}

/// Per-parameter first and second moment estimates with bias correction
/// (decay 0.9 / 0.999, epsilon 1e-8).
struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, t: u64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        let c1 = 1.0 - B1.powi(t as i32);
        let c2 = 1.0 - B2.powi(t as i32);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grads[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grads[i] * grads[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
    }
}

struct EncoderAdam {
    w1: AdamState,
    b1: AdamState,
    w2: AdamState,
    b2: AdamState,
}

impl EncoderAdam {
    fn new(p: &EncoderParams) -> Self {
        EncoderAdam {
            w1: AdamState::new(p.w1.len()),
            b1: AdamState::new(p.b1.len()),
            w2: AdamState::new(p.w2.len()),
            b2: AdamState::new(p.b2.len()),
        }
    }

    fn step(&mut self, p: &mut EncoderParams, g: &EncoderGrads, lr: f64, t: u64) {
        self.w1.step(&mut p.w1, &g.w1, lr, t);
        self.b1.step(&mut p.b1, &g.b1, lr, t);
        self.w2.step(&mut p.w2, &g.w2, lr, t);
        self.b2.step(&mut p.b2, &g.b2, lr, t);
    }
}

/// Loss of one document batch under the current parameters, with
/// parameter gradients for both encoders.
fn batch_step(
    model: &MatchModel,
    batch: &DocBatch,
    child_grads: &mut EncoderGrads,
    parent_grads: &mut EncoderGrads,
) -> Result<f64> {
    let dims = model.dims;
    let child_traces: Vec<_> = batch
        .child_x
        .iter()
        .map(|x| encode_trace(&model.child_encoder, dims, x))
        .collect();
    let parent_traces: Vec<_> = batch
        .parent_x
        .iter()
        .map(|x| encode_trace(&model.parent_encoder, dims, x))
        .collect();
    let embs = MatchBatch::new(
        child_traces.iter().map(|t| t.out.clone()).collect(),
        parent_traces.iter().map(|t| t.out.clone()).collect(),
        batch.labels.clone(),
    )?;
    let grads = margin_loss_backward(&embs, model.s, model.m)?;
    for (i, trace) in child_traces.iter().enumerate() {
        encode_backward(
            &model.child_encoder,
            dims,
            &batch.child_x[i],
            trace,
            &grads.d_children[i],
            child_grads,
        );
    }
    for (j, trace) in parent_traces.iter().enumerate() {
        encode_backward(
            &model.parent_encoder,
            dims,
            &batch.parent_x[j],
            trace,
            &grads.d_parents[j],
            parent_grads,
        );
    }
    Ok(grads.loss)
}

const SHUFFLE_STREAM_SALT: u64 = 0x5348_5546_464c_4531;

/// Train on the given documents. Zero epochs return the init unchanged
/// (with an empty log); zero trainable children anywhere is an error.
pub fn train(
    docs: &[Document],
    model_init: &MatchModel,
    opts: &TrainOptions,
    external: Option<&ExternalEmbeddings>,
) -> Result<(MatchModel, TrainLog)> {
    model_init.validate()?;
    let rule_cfg = RuleConfig::standard();
    let batches: Vec<DocBatch> = docs
        .iter()
        .map(|d| build_doc_batch(d, model_init, &rule_cfg, external))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let trainable_children: usize = batches.iter().map(|b| b.child_x.len()).sum();
    if batches.is_empty() {
        return Err(Error::Validation(
            "no trainable children: no rule-residual entity in any training document \
             has a gold parent naming another entity"
                .into(),
        ));
    }
    let mut log = TrainLog {
        epoch_mean_loss: Vec::with_capacity(opts.epochs),
        trainable_docs: batches.len(),
        trainable_children,
    };

    let mut model = model_init.clone();
    let mut child_adam = EncoderAdam::new(&model.child_encoder);
    let mut parent_adam = EncoderAdam::new(&model.parent_encoder);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(opts.seed ^ SHUFFLE_STREAM_SALT);
    let mut t: u64 = 0;

    for _ in 0..opts.epochs {
        let mut order: Vec<usize> = (0..batches.len()).collect();
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for &bi in &order {
            let dims = model.dims;
            let mut child_grads = EncoderGrads::zeros(dims);
            let mut parent_grads = EncoderGrads::zeros(dims);
            epoch_loss += batch_step(&model, &batches[bi], &mut child_grads, &mut parent_grads)?;
            t += 1;
            child_adam.step(&mut model.child_encoder, &child_grads, opts.learning_rate, t);
            parent_adam.step(&mut model.parent_encoder, &parent_grads, opts.learning_rate, t);
        }
        log.epoch_mean_loss.push(epoch_loss / batches.len() as f64);
    }
    Ok((model, log))
}
