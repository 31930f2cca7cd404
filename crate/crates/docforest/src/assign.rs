//! Parent assignments and the prediction output format.
//!
//! An [`Assignment`] is a partial map from entity id to a parent decision,
//! each tagged with the stage that produced it. Stages (deterministic rules,
//! then the learned matcher) each claim a disjoint set of entities; merging
//! overlapping assignments is a hard internal error, never a silent
//! overwrite.

use crate::doc::ParentRef;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// Which stage decided an entity's parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Category-level no-parent rule.
    Rule1,
    /// Heading/paragraph chain rule.
    Rule2,
    /// Category-pair attachment rule (captions, forms, lists).
    Rule3,
    /// Learned similarity matcher (includes its empty-candidate fallback).
    Matcher,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Rule1 => "rule1",
            Provenance::Rule2 => "rule2",
            Provenance::Rule3 => "rule3",
            Provenance::Matcher => "matcher",
        }
    }
}

/// One resolved parent with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub parent: ParentRef,
    pub provenance: Provenance,
}

/// Partial parent map for one document. Keys iterate in a fixed (sorted)
/// order so downstream output is deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    decisions: BTreeMap<String, Decision>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn contains(&self, entity_id: &str) -> bool {
        self.decisions.contains_key(entity_id)
    }

    pub fn get(&self, entity_id: &str) -> Option<&Decision> {
        self.decisions.get(entity_id)
    }

    /// Record a decision. Deciding the same entity twice within one stage is
    /// an internal error: each entity has exactly one decider.
    pub fn insert(
        &mut self,
        entity_id: impl Into<String>,
        parent: ParentRef,
        provenance: Provenance,
    ) -> Result<()> {
        let entity_id = entity_id.into();
        match self.decisions.entry(entity_id) {
            Entry::Vacant(v) => {
                v.insert(Decision { parent, provenance });
                Ok(())
            }
            Entry::Occupied(o) => Err(Error::Internal(format!(
                "entity {} already assigned by {}",
                o.key(),
                o.get().provenance.label()
            ))),
        }
    }

    /// Combine two disjoint stage outputs. Any shared entity id is an
    /// internal error.
    pub fn merge(mut self, other: Assignment) -> Result<Assignment> {
        for (id, dec) in other.decisions {
            match self.decisions.entry(id) {
                Entry::Vacant(v) => {
                    v.insert(dec);
                }
                Entry::Occupied(o) => {
                    return Err(Error::Internal(format!(
                        "entity {} assigned by both {} and {}",
                        o.key(),
                        o.get().provenance.label(),
                        dec.provenance.label()
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Iterate decisions sorted by entity id.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Decision)> {
        self.decisions.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Entity ids decided so far, sorted.
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.decisions.keys().map(String::as_str)
    }
}

/// serde adapter distinguishing JSON null (ROOT) from a parent id string.
mod parent_ref_null {
    use super::ParentRef;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &ParentRef, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            ParentRef::Root => s.serialize_none(),
            ParentRef::Entity(id) => id.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<ParentRef, D::Error> {
        Ok(match Option::<String>::deserialize(d)? {
            None => ParentRef::Root,
            Some(id) => ParentRef::Entity(id),
        })
    }
}

/// One line of prediction JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub doc_id: String,
    pub entity_id: String,
    /// `null` encodes ROOT.
    #[serde(with = "parent_ref_null")]
    pub parent_id: ParentRef,
    pub provenance: Provenance,
}

impl PredictionRecord {
    /// Expand a full-document assignment into output records, one per
    /// entity, sorted by entity id.
    pub fn from_assignment(doc_id: &str, assignment: &Assignment) -> Vec<PredictionRecord> {
        assignment
            .iter()
            .map(|(id, dec)| PredictionRecord {
                doc_id: doc_id.to_string(),
                entity_id: id.to_string(),
                parent_id: dec.parent.clone(),
                provenance: dec.provenance,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_serializes_lowercase() {
        for (p, want) in [
            (Provenance::Rule1, "\"rule1\""),
            (Provenance::Rule2, "\"rule2\""),
            (Provenance::Rule3, "\"rule3\""),
            (Provenance::Matcher, "\"matcher\""),
        ] {
            assert_eq!(serde_json::to_string(&p).unwrap(), want);
            assert_eq!(serde_json::from_str::<Provenance>(want).unwrap(), p);
        }
    }

    #[test]
    fn double_insert_is_an_internal_error() {
        let mut a = Assignment::new();
        a.insert("e1", ParentRef::Root, Provenance::Rule1).unwrap();
        let err = a
            .insert("e1", ParentRef::Entity("e0".into()), Provenance::Rule3)
            .unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
        assert!(err.to_string().contains("rule1"));
    }

    #[test]
    fn merge_rejects_overlap_and_keeps_disjoint_union() {
        let mut a = Assignment::new();
        a.insert("e1", ParentRef::Root, Provenance::Rule1).unwrap();
        let mut b = Assignment::new();
        b.insert("e2", ParentRef::Entity("e1".into()), Provenance::Matcher)
            .unwrap();
        let merged = a.clone().merge(b).unwrap();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.get("e2").unwrap().provenance, Provenance::Matcher);

        let mut c = Assignment::new();
        c.insert("e1", ParentRef::Root, Provenance::Rule2).unwrap();
        let err = a.merge(c).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
    }

    #[test]
    fn prediction_record_round_trips_root_as_null() {
        let rec = PredictionRecord {
            doc_id: "d".into(),
            entity_id: "e".into(),
            parent_id: ParentRef::Root,
            provenance: Provenance::Rule1,
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.contains("\"parent_id\":null"), "{line}");
        assert_eq!(serde_json::from_str::<PredictionRecord>(&line).unwrap(), rec);

        let rec = PredictionRecord {
            parent_id: ParentRef::Entity("p".into()),
            ..rec
        };
        let line = serde_json::to_string(&rec).unwrap();
        assert!(line.contains("\"parent_id\":\"p\""), "{line}");
        assert_eq!(serde_json::from_str::<PredictionRecord>(&line).unwrap(), rec);
    }

    #[test]
    fn records_come_out_sorted_by_entity_id() {
        let mut a = Assignment::new();
        a.insert("z", ParentRef::Root, Provenance::Rule1).unwrap();
        a.insert("a", ParentRef::Root, Provenance::Rule1).unwrap();
        a.insert("m", ParentRef::Entity("a".into()), Provenance::Matcher)
            .unwrap();
        let recs = PredictionRecord::from_assignment("d", &a);
        let ids: Vec<&str> = recs.iter().map(|r| r.entity_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "m", "z"]);
    }
}
