#![allow(dead_code)]

//! Shared test support: a deliberately naive, literal interpreter of the
//! documented rule tables (no code shared with the library
//! implementation), and a generator of small adversarial documents.

use docforest::{BBox, Category, Document, Entity, ParentRef};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub const NO_PARENT_LABELS: [&str; 15] = [
    "abstract",
    "appendix_list",
    "cross",
    "figure",
    "form_title",
    "list_of_figures",
    "list_of_tables",
    "other",
    "references",
    "report_title",
    "section",
    "summary",
    "table",
    "table_of_contents",
    "title",
];

pub const CHAIN_LABELS: [&str; 5] = [
    "section",
    "subsection",
    "subsubsection",
    "subsubsubsection",
    "paragraph",
];

pub fn fixed_parent_labels(label: &str) -> Option<&'static [&'static str]> {
    match label {
        "table_caption" => Some(&["table"]),
        "figure_caption" => Some(&["figure"]),
        "form" => Some(&[
            "summary",
            "abstract",
            "section",
            "subsection",
            "subsubsection",
            "subsubsubsection",
        ]),
        "list" => Some(&[
            "paragraph",
            "section",
            "subsection",
            "subsubsection",
            "subsubsubsection",
        ]),
        "form_body" => Some(&[
            "form_title",
            "summary",
            "abstract",
            "section",
            "subsection",
            "subsubsection",
            "subsubsubsection",
        ]),
        _ => None,
    }
}

/// Every decided entity maps to (parent, rule tag); undecided entity ids
/// form the second set.
pub type OracleResult = (BTreeMap<String, (ParentRef, &'static str)>, BTreeSet<String>);

/// Plain transcription of the three rule groups, one entity at a time,
/// with naive linear scans.
pub fn oracle_rules(doc: &Document) -> OracleResult {
    let n = doc.entities.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&doc.entities[a], &doc.entities[b]);
        ea.page
            .cmp(&eb.page)
            .then(ea.bbox.y0.total_cmp(&eb.bbox.y0))
            .then(ea.bbox.x0.total_cmp(&eb.bbox.x0))
            .then(ea.id.cmp(&eb.id))
    });
    let mut rank = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        rank[i] = pos;
    }
    let center = |i: usize| {
        let b = &doc.entities[i].bbox;
        ((b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0)
    };

    let mut decided = BTreeMap::new();
    let mut residual = BTreeSet::new();
    for (i, e) in doc.entities.iter().enumerate() {
        let label = e.category.label().to_string();
        if NO_PARENT_LABELS.contains(&label.as_str()) {
            decided.insert(e.id.clone(), (ParentRef::Root, "rule1"));
            continue;
        }
        if let Some(level) = CHAIN_LABELS.iter().position(|&c| c == label) {
            // level is 0-based here; group 2 covers chain levels 2..=5
            let mut best: Option<usize> = None;
            for &j in &order {
                if rank[j] >= rank[i] {
                    break;
                }
                let other = doc.entities[j].category.label();
                if let Some(l2) = CHAIN_LABELS.iter().position(|&c| c == other) {
                    if l2 < level && best.map_or(true, |b| rank[j] > rank[b]) {
                        best = Some(j);
                    }
                }
            }
            let parent = best
                .map(|j| ParentRef::Entity(doc.entities[j].id.clone()))
                .unwrap_or(ParentRef::Root);
            decided.insert(e.id.clone(), (parent, "rule2"));
            continue;
        }
        if let Some(allowed) = fixed_parent_labels(&label) {
            let cands: Vec<usize> = (0..n)
                .filter(|&j| j != i && allowed.contains(&doc.entities[j].category.label()))
                .collect();
            let caption = label == "table_caption" || label == "figure_caption";
            if caption {
                let same_page: Vec<usize> = cands
                    .iter()
                    .copied()
                    .filter(|&j| doc.entities[j].page == e.page)
                    .collect();
                let parent = if !same_page.is_empty() {
                    let (cx, cy) = center(i);
                    let best = same_page
                        .into_iter()
                        .min_by(|&a, &b| {
                            let da = {
                                let (x, y) = center(a);
                                ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
                            };
                            let db = {
                                let (x, y) = center(b);
                                ((x - cx).powi(2) + (y - cy).powi(2)).sqrt()
                            };
                            da.total_cmp(&db)
                                .then(rank[a].cmp(&rank[b]))
                                .then(doc.entities[a].id.cmp(&doc.entities[b].id))
                        })
                        .unwrap();
                    ParentRef::Entity(doc.entities[best].id.clone())
                } else if let Some(best) = cands
                    .iter()
                    .copied()
                    .filter(|&j| rank[j] < rank[i])
                    .max_by_key(|&j| rank[j])
                {
                    ParentRef::Entity(doc.entities[best].id.clone())
                } else if let Some(best) = cands
                    .iter()
                    .copied()
                    .filter(|&j| rank[j] > rank[i])
                    .min_by_key(|&j| rank[j])
                {
                    ParentRef::Entity(doc.entities[best].id.clone())
                } else {
                    ParentRef::Root
                };
                decided.insert(e.id.clone(), (parent, "rule3"));
            } else {
                // forms and lists never fall back to ROOT: with no allowed
                // candidate they stay unassigned
                let preceding = cands
                    .iter()
                    .copied()
                    .filter(|&j| rank[j] < rank[i])
                    .max_by_key(|&j| rank[j]);
                let following = cands
                    .iter()
                    .copied()
                    .filter(|&j| rank[j] > rank[i])
                    .min_by_key(|&j| rank[j]);
                match preceding.or(following) {
                    Some(best) => {
                        decided.insert(
                            e.id.clone(),
                            (ParentRef::Entity(doc.entities[best].id.clone()), "rule3"),
                        );
                    }
                    None => {
                        residual.insert(e.id.clone());
                    }
                }
            }
            continue;
        }
        residual.insert(e.id.clone());
    }
    (decided, residual)
}

pub const EXTRA_LABELS: [&str; 3] = ["note", "sidebar", "stamp"];

/// Small random document over the full vocabulary plus a few unknown
/// categories. Storage order, id order and reading order are shuffled
/// independently; coordinates come from a coarse grid so exact position
/// ties occur.
pub fn random_doc(rng: &mut ChaCha8Rng, doc_id: &str, max_n: usize) -> Document {
    let known: Vec<&str> = docforest::category::VOCAB.iter().map(|c| c.label()).collect();
    let n = rng.gen_range(1..=max_n);
    let mut ids: Vec<String> = (0..n).map(|k| format!("t{k:02}")).collect();
    ids.shuffle(rng);

    let mut positions: Vec<(u32, f64, f64)> = Vec::new();
    let mut entities = Vec::new();
    for id in ids {
        let (page, y0, x0) = if !positions.is_empty() && rng.gen_bool(0.15) {
            positions[rng.gen_range(0..positions.len())]
        } else {
            (
                rng.gen_range(0..3u32),
                f64::from(rng.gen_range(0..10)) * 40.0,
                f64::from(rng.gen_range(0..10)) * 50.0,
            )
        };
        positions.push((page, y0, x0));
        let label = if rng.gen_bool(0.12) {
            EXTRA_LABELS[rng.gen_range(0..EXTRA_LABELS.len())]
        } else {
            known[rng.gen_range(0..known.len())]
        };
        let w = rng.gen_range(10.0..120.0);
        let h = rng.gen_range(10.0..60.0);
        entities.push(Entity {
            id,
            category: Category::from_label(label),
            page,
            bbox: BBox::new(x0, y0, x0 + w, y0 + h),
            text: rng.gen_bool(0.7).then(|| format!("text {label}")),
            gold_parent: None,
        });
    }
    Document {
        doc_id: doc_id.to_string(),
        entities,
    }
}
