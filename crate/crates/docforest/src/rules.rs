//! Deterministic parent rules.
//!
//! Three rule groups assign parents before any learned scoring runs:
//!
//! 1. fifteen categories never take a parent (ROOT);
//! 2. the section chain (section > subsection > subsubsection >
//!    subsubsubsection > paragraph) attaches each level to the nearest
//!    preceding strictly higher level;
//! 3. five categories have fixed allowed-parent sets (captions attach to
//!    their table/figure, forms and lists to their governing heading).
//!
//! The three groups cover disjoint category sets, so their outputs can
//! never overlap; [`apply_all_rules`] still checks and treats an overlap
//! as an internal error. Entities left unassigned (unknown categories,
//! group-3 entities with no allowed parent present) form the residual for
//! the matcher.

use crate::assign::{Assignment, Provenance};
use crate::category::{KnownCategory, CHAIN, NO_PARENT};
use crate::doc::{Document, ParentRef};
use crate::error::Result;
use serde_json::{json, Value};
use std::collections::BTreeSet;

/// The compiled-in rule tables. One instance describes all three groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleConfig {
    /// Section chain ordered level 1..=5.
    pub chain_levels: [KnownCategory; 5],
    /// Child category paired with its allowed parent categories.
    pub fixed_deps: [(KnownCategory, &'static [KnownCategory]); 5],
    /// Categories that always map to ROOT.
    pub no_parent_set: [KnownCategory; 15],
}

const FORM_PARENTS: &[KnownCategory] = &[
    KnownCategory::Summary,
    KnownCategory::Abstract,
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
];

const LIST_PARENTS: &[KnownCategory] = &[
    KnownCategory::Paragraph,
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
];

const FORM_BODY_PARENTS: &[KnownCategory] = &[
    KnownCategory::FormTitle,
    KnownCategory::Summary,
    KnownCategory::Abstract,
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
];

impl RuleConfig {
    /// The fixed rule tables used everywhere. There is exactly one valid
    /// configuration; this constructor exists so tests and the CLI dump
    /// share it.
    pub fn standard() -> Self {
        RuleConfig {
            chain_levels: CHAIN,
            fixed_deps: [
                (KnownCategory::TableCaption, &[KnownCategory::Table]),
                (KnownCategory::FigureCaption, &[KnownCategory::Figure]),
                (KnownCategory::Form, FORM_PARENTS),
                (KnownCategory::List, LIST_PARENTS),
                (KnownCategory::FormBody, FORM_BODY_PARENTS),
            ],
            no_parent_set: NO_PARENT,
        }
    }

    /// Allowed parent categories for a group-3 child category.
    pub fn allowed_parents(&self, cat: KnownCategory) -> Option<&'static [KnownCategory]> {
        self.fixed_deps
            .iter()
            .find(|(child, _)| *child == cat)
            .map(|(_, parents)| *parents)
    }

    /// Whether the category uses geometric (same-page nearest-center)
    /// attachment rather than reading-order attachment.
    fn is_caption(cat: KnownCategory) -> bool {
        matches!(
            cat,
            KnownCategory::TableCaption | KnownCategory::FigureCaption
        )
    }

    /// JSON view of the tables for `docforest rules --dump`.
    pub fn dump_json(&self) -> Value {
        let chain: Vec<Value> = self
            .chain_levels
            .iter()
            .enumerate()
            .map(|(i, c)| json!({"category": c.label(), "level": i + 1}))
            .collect();
        let mut deps = serde_json::Map::new();
        for (child, parents) in &self.fixed_deps {
            deps.insert(
                child.label().to_string(),
                Value::Array(
                    parents
                        .iter()
                        .map(|p| Value::String(p.label().to_string()))
                        .collect(),
                ),
            );
        }
        json!({
            "no_parent": self.no_parent_set.iter().map(|c| c.label()).collect::<Vec<_>>(),
            "section_chain": chain,
            "fixed_dependencies": Value::Object(deps),
        })
    }
}

/// Group 1: categories that never take a parent map to ROOT.
pub fn apply_root_rule(doc: &Document, cfg: &RuleConfig) -> Result<Assignment> {
    let mut out = Assignment::new();
    for e in &doc.entities {
        if let Some(k) = e.category.known() {
            if cfg.no_parent_set.contains(&k) {
                out.insert(&e.id, ParentRef::Root, Provenance::Rule1)?;
            }
        }
    }
    Ok(out)
}

/// Group 2: chain levels 2..=5 attach to the nearest preceding entity of
/// strictly smaller chain level; with no such entity, ROOT.
pub fn apply_section_chain_rule(doc: &Document, cfg: &RuleConfig) -> Result<Assignment> {
    let mut out = Assignment::new();
    let order = doc.reading_order();
    // last_at[l] = entity index of the most recent level-(l+1) entity seen
    let mut last_at: [Option<usize>; 5] = [None; 5];
    let mut last_rank: [usize; 5] = [0; 5];
    for (rank, &i) in order.iter().enumerate() {
        let e = &doc.entities[i];
        let level = e
            .category
            .known()
            .filter(|k| cfg.chain_levels.contains(k))
            .and_then(KnownCategory::chain_level);
        if let Some(level) = level {
            if level >= 2 {
                let parent = (0..level as usize - 1)
                    .filter_map(|l| last_at[l].map(|idx| (last_rank[l], idx)))
                    .max_by_key(|&(r, _)| r)
                    .map(|(_, idx)| idx);
                let target = match parent {
                    Some(idx) => ParentRef::Entity(doc.entities[idx].id.clone()),
                    None => ParentRef::Root,
                };
                out.insert(&e.id, target, Provenance::Rule2)?;
            }
            last_at[level as usize - 1] = Some(i);
            last_rank[level as usize - 1] = rank;
        }
    }
    Ok(out)
}

/// Group 3: fixed category dependencies.
///
/// Captions pick the nearest same-page table/figure by bbox-center
/// distance, then the nearest preceding one in reading order, then the
/// nearest following one; only a document with no table/figure at all
/// yields ROOT. Forms, lists, and form bodies pick the nearest preceding
/// allowed-category entity, then the nearest following one; when the
/// document has no allowed parent they stay unassigned so the matcher can
/// decide under the same category restriction.
pub fn apply_fixed_dependency_rule(
    doc: &Document,
    residual: &BTreeSet<String>,
    cfg: &RuleConfig,
) -> Result<Assignment> {
    let mut out = Assignment::new();
    let ranks = doc.reading_ranks();
    for (i, e) in doc.entities.iter().enumerate() {
        if !residual.contains(&e.id) {
            continue;
        }
        let Some(k) = e.category.known() else { continue };
        let Some(allowed) = cfg.allowed_parents(k) else { continue };

        let candidates: Vec<usize> = doc
            .entities
            .iter()
            .enumerate()
            .filter(|(j, p)| *j != i && p.category.known().is_some_and(|pk| allowed.contains(&pk)))
            .map(|(j, _)| j)
            .collect();

        if RuleConfig::is_caption(k) {
            let parent = caption_parent(doc, i, &candidates, &ranks);
            out.insert(&e.id, parent, Provenance::Rule3)?;
        } else if let Some(j) = flow_parent(i, &candidates, &ranks) {
            out.insert(
                &e.id,
                ParentRef::Entity(doc.entities[j].id.clone()),
                Provenance::Rule3,
            )?;
        }
        // no allowed parent in the document: left for the matcher
    }
    Ok(out)
}

/// Nearest same-page candidate by center distance, else nearest preceding,
/// else nearest following, else ROOT.
fn caption_parent(
    doc: &Document,
    child: usize,
    candidates: &[usize],
    ranks: &[usize],
) -> ParentRef {
    if candidates.is_empty() {
        return ParentRef::Root;
    }
    let ce = &doc.entities[child];
    let (cx, cy) = ce.bbox.center();
    let same_page = candidates
        .iter()
        .copied()
        .filter(|&j| doc.entities[j].page == ce.page)
        .min_by(|&a, &b| {
            let da = center_dist(doc, a, cx, cy);
            let db = center_dist(doc, b, cx, cy);
            da.total_cmp(&db)
                .then(ranks[a].cmp(&ranks[b]))
                .then(doc.entities[a].id.cmp(&doc.entities[b].id))
        });
    if let Some(j) = same_page {
        return ParentRef::Entity(doc.entities[j].id.clone());
    }
    let j = flow_parent(child, candidates, ranks).expect("candidates nonempty");
    ParentRef::Entity(doc.entities[j].id.clone())
}

fn center_dist(doc: &Document, j: usize, cx: f64, cy: f64) -> f64 {
    let (px, py) = doc.entities[j].bbox.center();
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Nearest preceding candidate in reading order, else nearest following.
fn flow_parent(child: usize, candidates: &[usize], ranks: &[usize]) -> Option<usize> {
    let r = ranks[child];
    candidates
        .iter()
        .copied()
        .filter(|&j| ranks[j] < r)
        .max_by_key(|&j| ranks[j])
        .or_else(|| {
            candidates
                .iter()
                .copied()
                .filter(|&j| ranks[j] > r)
                .min_by_key(|&j| ranks[j])
        })
}

/// Run all three groups and return the combined assignment plus the
/// residual entity ids (everything the rules did not decide).
pub fn apply_all_rules(doc: &Document, cfg: &RuleConfig) -> Result<(Assignment, BTreeSet<String>)> {
    let assignment = apply_root_rule(doc, cfg)?.merge(apply_section_chain_rule(doc, cfg)?)?;
    let residual: BTreeSet<String> = doc
        .entities
        .iter()
        .filter(|e| !assignment.contains(&e.id))
        .map(|e| e.id.clone())
        .collect();
    let assignment = assignment.merge(apply_fixed_dependency_rule(doc, &residual, cfg)?)?;
    let residual: BTreeSet<String> = residual
        .into_iter()
        .filter(|id| !assignment.contains(id))
        .collect();
    Ok((assignment, residual))
}
