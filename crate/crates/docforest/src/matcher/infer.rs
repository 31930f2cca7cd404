//! Candidate scoring and greedy parent prediction.
//!
//! Scores are plain cosines of the child-role and parent-role embeddings.
//! The training margin m is not applied here: it shifts only the true
//! pair's logit, which is unknown at inference, so it cannot change any
//! argmax and exists purely to shape the learned geometry.

use crate::doc::{Document, Entity};
use crate::error::{Error, Result};
use crate::matcher::features::{ExternalEmbeddings, FeatureBuilder};
use crate::matcher::model::{encode, MatchModel};

/// Per-document scoring context: entity embeddings are computed once and
/// reused across children.
pub struct DocScorer<'a> {
    doc: &'a Document,
    model: &'a MatchModel,
    builder: FeatureBuilder<'a>,
    /// Parent-role embedding per entity index, built lazily.
    parent_emb: Vec<Option<Vec<f64>>>,
    ranks: Vec<usize>,
}

impl<'a> DocScorer<'a> {
    pub fn new(
        doc: &'a Document,
        model: &'a MatchModel,
        external: Option<&'a ExternalEmbeddings>,
    ) -> Result<Self> {
        model.validate()?;
        Ok(DocScorer {
            doc,
            model,
            builder: FeatureBuilder::with_external(doc, &model.feature_config, external),
            parent_emb: vec![None; doc.entities.len()],
            ranks: doc.reading_ranks(),
        })
    }

    fn parent_embedding(&mut self, idx: usize) -> Result<&[f64]> {
        if self.parent_emb[idx].is_none() {
            let x = self.builder.features(&self.doc.entities[idx])?;
            self.parent_emb[idx] = Some(encode(&self.model.parent_encoder, self.model.dims, &x));
        }
        Ok(self.parent_emb[idx].as_ref().unwrap())
    }

    /// Cosine score of `child` against each candidate entity index, in
    /// candidate order.
    pub fn scores(&mut self, child: usize, candidates: &[usize]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Err(Error::Internal("score_candidates needs candidates".into()));
        }
        if candidates.contains(&child) {
            return Err(Error::Internal("an entity cannot be its own candidate".into()));
        }
        let x = self.builder.features(&self.doc.entities[child])?;
        let child_emb = encode(&self.model.child_encoder, self.model.dims, &x);
        let mut out = Vec::with_capacity(candidates.len());
        for &j in candidates {
            let fp = self.parent_embedding(j)?;
            out.push(child_emb.iter().zip(fp).map(|(a, b)| a * b).sum());
        }
        Ok(out)
    }

    /// Index of the best-scoring candidate; ties break by reading order,
    /// then id.
    pub fn best(&mut self, child: usize, candidates: &[usize]) -> Result<usize> {
        let scores = self.scores(child, candidates)?;
        let mut best = 0;
        for i in 1..candidates.len() {
            if better(
                self.doc,
                &self.ranks,
                (scores[i], candidates[i]),
                (scores[best], candidates[best]),
            ) {
                best = i;
            }
        }
        Ok(candidates[best])
    }
}

/// Whether candidate a = (score, idx) beats candidate b.
fn better(doc: &Document, ranks: &[usize], a: (f64, usize), b: (f64, usize)) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => (ranks[a.1], &doc.entities[a.1].id)
            .cmp(&(ranks[b.1], &doc.entities[b.1].id))
            .is_lt(),
    }
}

fn entity_index(doc: &Document, e: &Entity) -> Result<usize> {
    doc.entities
        .iter()
        .position(|x| x.id == e.id)
        .ok_or_else(|| Error::Internal(format!("entity {} is not in document {}", e.id, doc.doc_id)))
}

/// Cosine scores of one child against explicit candidates.
pub fn score_candidates(
    model: &MatchModel,
    child: &Entity,
    candidates: &[&Entity],
    doc: &Document,
) -> Result<Vec<f64>> {
    let mut scorer = DocScorer::new(doc, model, None)?;
    let child_idx = entity_index(doc, child)?;
    let idxs = candidates
        .iter()
        .map(|c| entity_index(doc, c))
        .collect::<Result<Vec<_>>>()?;
    scorer.scores(child_idx, &idxs)
}

/// Id of the best-scoring candidate.
pub fn predict_parent(
    model: &MatchModel,
    child: &Entity,
    candidates: &[&Entity],
    doc: &Document,
) -> Result<String> {
    let mut scorer = DocScorer::new(doc, model, None)?;
    let child_idx = entity_index(doc, child)?;
    let idxs = candidates
        .iter()
        .map(|c| entity_index(doc, c))
        .collect::<Result<Vec<_>>>()?;
    let best = scorer.best(child_idx, &idxs)?;
    Ok(doc.entities[best].id.clone())
}
