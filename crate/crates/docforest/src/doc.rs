//! Document and entity data model, JSONL ingestion, and reading order.
//!
//! The corpus format is UTF-8 JSONL, one document per line:
//!
//! ```json
//! {"doc_id": "d0", "entities": [{"id": "e0", "category": "section",
//!  "page": 0, "bbox": [80.0, 40.0, 920.0, 80.0], "text": "1 Intro",
//!  "parent_id": null}]}
//! ```
//!
//! `parent_id` carries the gold label: `null` means ROOT (no parent), a
//! string names another entity in the same document, and an absent key
//! means unlabeled. Documents are immutable after parsing.

use crate::category::Category;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Axis-aligned box in source-annotation coordinates (pixels).
/// Coordinates are kept in source units; normalization happens only in the
/// feature builder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite())
            && self.x0 <= self.x1
            && self.y0 <= self.y1
    }
}

impl Serialize for BBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x0, self.y0, self.x1, self.y1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [x0, y0, x1, y1] = <[f64; 4]>::deserialize(d)?;
        Ok(BBox { x0, y0, x1, y1 })
    }
}

/// A parent decision: another entity in the same document, or no parent.
///
/// ROOT is an explicit sentinel rather than an absent field so that "no
/// parent" is distinguishable from "not yet decided".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ParentRef {
    Root,
    Entity(String),
}

impl ParentRef {
    pub fn entity_id(&self) -> Option<&str> {
        match self {
            ParentRef::Root => None,
            ParentRef::Entity(id) => Some(id),
        }
    }
}

impl fmt::Display for ParentRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParentRef::Root => f.write_str("ROOT"),
            ParentRef::Entity(id) => f.write_str(id),
        }
    }
}

/// serde adapter for the optional `parent_id` field: absent key stays
/// `None`, `null` becomes `Some(Root)`, and a string names the parent.
mod parent_field {
    use super::ParentRef;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<ParentRef>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match v {
            // skip_serializing_if handles None; this arm is unreachable in practice
            None => s.serialize_none(),
            Some(ParentRef::Root) => s.serialize_none(),
            Some(ParentRef::Entity(id)) => id.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<ParentRef>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        Ok(Some(match raw {
            None => ParentRef::Root,
            Some(id) => ParentRef::Entity(id),
        }))
    }
}

/// One detected document object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub category: Category,
    pub page: u32,
    pub bbox: BBox,
    #[serde(default)]
    pub text: Option<String>,
    /// Gold parent label; `None` when the entity is unlabeled.
    #[serde(
        default,
        rename = "parent_id",
        with = "parent_field",
        skip_serializing_if = "Option::is_none"
    )]
    pub gold_parent: Option<ParentRef>,
}

/// An ordered collection of entities with a stable identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub entities: Vec<Entity>,
}

/// A broken invariant found by [`validate_document`]. Violations are data,
/// not errors: validation itself never fails.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// The offending entity id, or the doc id for document-level breaches.
    pub entity_id: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity_id, self.rule)
    }
}

/// Parse one corpus JSONL record into a validated [`Document`].
///
/// Unknown categories are admitted and flagged, never rejected. Any other
/// invariant breach (duplicate id, dangling or self gold parent, bad bbox,
/// empty document) is a validation error.
pub fn parse_document(record: &str) -> Result<Document> {
    let doc: Document = serde_json::from_str(record)
        .map_err(|e| Error::Parse(format!("bad document record: {e}")))?;
    let violations = validate_document(&doc);
    if violations.is_empty() {
        Ok(doc)
    } else {
        Err(Error::Validation(format!(
            "document {}: {}",
            doc.doc_id,
            violations
                .iter()
                .map(Violation::to_string)
                .collect::<Vec<_>>()
                .join("; ")
        )))
    }
}

/// Serialize a document to one corpus JSONL line (no trailing newline).
pub fn serialize_document(doc: &Document) -> String {
    serde_json::to_string(doc).expect("document serializes")
}

/// Check every data-model invariant and report each breach.
pub fn validate_document(doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();
    if doc.entities.is_empty() {
        out.push(Violation {
            entity_id: doc.doc_id.clone(),
            rule: "document has no entities".into(),
        });
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let ids: HashSet<&str> = doc.entities.iter().map(|e| e.id.as_str()).collect();
    for e in &doc.entities {
        if !seen.insert(&e.id) {
            out.push(Violation {
                entity_id: e.id.clone(),
                rule: "duplicate entity id".into(),
            });
        }
        if !e.bbox.is_valid() {
            out.push(Violation {
                entity_id: e.id.clone(),
                rule: format!(
                    "bbox [{}, {}, {}, {}] must be finite with x0 <= x1 and y0 <= y1",
                    e.bbox.x0, e.bbox.y0, e.bbox.x1, e.bbox.y1
                ),
            });
        }
        match &e.gold_parent {
            Some(ParentRef::Entity(pid)) if pid == &e.id => out.push(Violation {
                entity_id: e.id.clone(),
                rule: "entity is its own gold parent".into(),
            }),
            Some(ParentRef::Entity(pid)) if !ids.contains(pid.as_str()) => out.push(Violation {
                entity_id: e.id.clone(),
                rule: format!("gold parent {pid} does not exist in document"),
            }),
            _ => {}
        }
    }
    out
}

impl Document {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Index of each entity id in `entities`.
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.entities
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect()
    }

    /// Reading order as indices into `entities`: sorted by (page, y0, x0, id).
    ///
    /// This top-to-bottom, left-to-right scan order is the single shared
    /// definition of "preceding" used by every rule and tie-break.
    pub fn reading_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.entities.len()).collect();
        idx.sort_by(|&a, &b| {
            let ea = &self.entities[a];
            let eb = &self.entities[b];
            ea.page
                .cmp(&eb.page)
                .then(ea.bbox.y0.total_cmp(&eb.bbox.y0))
                .then(ea.bbox.x0.total_cmp(&eb.bbox.x0))
                .then(ea.id.cmp(&eb.id))
        });
        idx
    }

    /// Reading order as entity ids.
    pub fn reading_order_ids(&self) -> Vec<&str> {
        self.reading_order()
            .into_iter()
            .map(|i| self.entities[i].id.as_str())
            .collect()
    }

    /// Reading-order rank of each entity, keyed by entity index.
    pub fn reading_ranks(&self) -> Vec<usize> {
        let order = self.reading_order();
        let mut rank = vec![0usize; self.entities.len()];
        for (r, i) in order.into_iter().enumerate() {
            rank[i] = r;
        }
        rank
    }
}
