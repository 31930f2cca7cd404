//! Accuracy metric and the two-configuration method comparison.

use crate::assign::PredictionRecord;
use crate::corpus::CorpusSplit;
use crate::doc::{Document, ParentRef};
use crate::error::{Error, Result};
use crate::matcher::model::MatchModel;
use crate::pipeline::{parse_hierarchy, ParseOptions};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

/// Restrict scoring to these category labels; `None` scores every
/// labeled entity.
pub type ScoredCategories = Option<BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub correct: usize,
    pub total: usize,
}

impl AccuracyReport {
    pub fn value(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Fraction of labeled entities whose predicted parent equals the gold
/// label. ROOT predictions match only explicit null labels; unlabeled
/// entities are excluded entirely. Every labeled (and scored) entity must
/// have a prediction.
pub fn accuracy(
    predictions: &[PredictionRecord],
    gold: &[Document],
    scored: &ScoredCategories,
) -> Result<AccuracyReport> {
    let mut by_key: HashMap<(&str, &str), &ParentRef> = HashMap::new();
    for rec in predictions {
        by_key.insert((rec.doc_id.as_str(), rec.entity_id.as_str()), &rec.parent_id);
    }

    let mut correct = 0;
    let mut total = 0;
    let mut missing: Vec<String> = Vec::new();
    for doc in gold {
        for e in &doc.entities {
            let Some(gold_parent) = &e.gold_parent else {
                continue;
            };
            if let Some(scored) = scored {
                if !scored.contains(e.category.label()) {
                    continue;
                }
            }
            match by_key.get(&(doc.doc_id.as_str(), e.id.as_str())) {
                None => missing.push(format!("{}/{}", doc.doc_id, e.id)),
                Some(pred) => {
                    total += 1;
                    if *pred == gold_parent {
                        correct += 1;
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::Validation(format!(
            "labeled entities without predictions: {}",
            missing.join(", ")
        )));
    }
    if total == 0 {
        return Err(Error::Validation(
            "no labeled entities to score (accuracy denominator is zero)".into(),
        ));
    }
    Ok(AccuracyReport { correct, total })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitAccuracies {
    pub val: f64,
    pub test: f64,
}

/// Val/test accuracy of the matcher-only configuration against the full
/// rules-plus-matcher pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub loss_only: SplitAccuracies,
    pub loss_greedy: SplitAccuracies,
}

impl ComparisonReport {
    /// Two-row fixed-width table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<14}{:>12}{:>12}", "Method", "Validation", "Test").unwrap();
        writeln!(
            out,
            "{:<14}{:>12.5}{:>12.5}",
            "loss only", self.loss_only.val, self.loss_only.test
        )
        .unwrap();
        writeln!(
            out,
            "{:<14}{:>12.5}{:>12.5}",
            "loss+greedy", self.loss_greedy.val, self.loss_greedy.test
        )
        .unwrap();
        out
    }
}

/// Predict one split end to end and score it.
fn split_accuracy(docs: &[Document], model: &MatchModel, rules_enabled: bool) -> Result<f64> {
    let opts = ParseOptions { rules_enabled };
    let mut predictions = Vec::new();
    for doc in docs {
        let assignment = parse_hierarchy(doc, model, &opts, None)?;
        predictions.extend(PredictionRecord::from_assignment(&doc.doc_id, &assignment));
    }
    Ok(accuracy(&predictions, docs, &None)?.value())
}

/// Run both configurations over the val and test splits.
pub fn compare_methods(corpus: &CorpusSplit, model: &MatchModel) -> Result<ComparisonReport> {
    Ok(ComparisonReport {
        loss_only: SplitAccuracies {
            val: split_accuracy(&corpus.val, model, false)?,
            test: split_accuracy(&corpus.test, model, false)?,
        },
        loss_greedy: SplitAccuracies {
            val: split_accuracy(&corpus.val, model, true)?,
            test: split_accuracy(&corpus.test, model, true)?,
        },
    })
}
