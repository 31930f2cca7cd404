//! Full per-document hierarchy parsing: rules first, matcher on the
//! residual; plus structural sanity checks on the result.

use crate::assign::{Assignment, Provenance};
use crate::doc::{Document, ParentRef};
use crate::error::{Error, Result};
use crate::matcher::features::ExternalEmbeddings;
use crate::matcher::infer::DocScorer;
use crate::matcher::model::MatchModel;
use crate::rules::{apply_all_rules, RuleConfig};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Off reproduces the matcher-only configuration: every entity is
    /// scored, no rule runs.
    pub rules_enabled: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            rules_enabled: true,
        }
    }
}

/// Assign a parent decision to every entity of the document.
///
/// With rules enabled, the three rule groups decide their categories
/// first and the matcher scores only the residual; a residual entity
/// whose category carries a fixed allowed-parent set keeps that
/// restriction as a candidate filter. With rules disabled every entity
/// goes to the matcher against all other entities. An empty candidate
/// set (single-entity document, or an empty restriction) falls back to
/// ROOT with matcher provenance.
pub fn parse_hierarchy(
    doc: &Document,
    model: &MatchModel,
    opts: &ParseOptions,
    external: Option<&ExternalEmbeddings>,
) -> Result<Assignment> {
    model.validate()?;
    let rule_cfg = RuleConfig::standard();
    let (mut assignment, residual) = if opts.rules_enabled {
        apply_all_rules(doc, &rule_cfg)?
    } else {
        let all: BTreeSet<String> = doc.entities.iter().map(|e| e.id.clone()).collect();
        (Assignment::new(), all)
    };
    if residual.is_empty() {
        return Ok(assignment);
    }

    let mut scorer = DocScorer::new(doc, model, external)?;
    // children resolve in reading order for a deterministic walk
    for &i in &doc.reading_order() {
        let e = &doc.entities[i];
        if !residual.contains(&e.id) {
            continue;
        }
        let restriction = if opts.rules_enabled {
            e.category.known().and_then(|k| rule_cfg.allowed_parents(k))
        } else {
            None
        };
        let candidates: Vec<usize> = doc
            .entities
            .iter()
            .enumerate()
            .filter(|(j, p)| {
                *j != i
                    && restriction.map_or(true, |allowed| {
                        p.category.known().is_some_and(|pk| allowed.contains(&pk))
                    })
            })
            .map(|(j, _)| j)
            .collect();
        let parent = if candidates.is_empty() {
            ParentRef::Root
        } else {
            let best = scorer.best(i, &candidates)?;
            ParentRef::Entity(doc.entities[best].id.clone())
        };
        assignment.insert(&e.id, parent, Provenance::Matcher)?;
    }

    debug_assert!(doc.entities.iter().all(|e| assignment.contains(&e.id)));
    Ok(assignment)
}

/// Structural summary of a complete assignment.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ForestReport {
    /// Directed cycles in the parent graph, each rotated to start at its
    /// smallest entity id; cycles sorted by that id.
    pub cycles: Vec<Vec<String>>,
    /// Entities assigned ROOT.
    pub orphans: usize,
}

/// Detect parent-pointer cycles and count roots. Greedy per-child argmax
/// can produce cycles; they are reported, never repaired, because the
/// per-entity accuracy metric needs no tree.
pub fn check_forest(doc: &Document, assignment: &Assignment) -> Result<ForestReport> {
    let missing: Vec<&str> = doc
        .entities
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| !assignment.contains(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Internal(format!(
            "assignment incomplete for document {}: missing {}",
            doc.doc_id,
            missing.join(", ")
        )));
    }

    let mut parent: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    let mut orphans = 0;
    for (id, dec) in assignment.iter() {
        match &dec.parent {
            ParentRef::Root => {
                orphans += 1;
                parent.insert(id, None);
            }
            ParentRef::Entity(pid) => {
                parent.insert(id, Some(pid));
            }
        }
    }

    // walk parent chains; 0 = unvisited, 1 = on current path, 2 = done
    let mut state: BTreeMap<&str, u8> = parent.keys().map(|&k| (k, 0u8)).collect();
    let mut cycles = Vec::new();
    for &start in parent.keys() {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                1 => {
                    // new cycle: everything from cur's position in path
                    let pos = path.iter().position(|&p| p == cur).expect("on path");
                    let mut cycle: Vec<String> =
                        path[pos..].iter().map(|s: &&str| s.to_string()).collect();
                    let min = cycle
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, id)| id.as_str())
                        .map(|(i, _)| i)
                        .unwrap();
                    cycle.rotate_left(min);
                    cycles.push(cycle);
                    break;
                }
                2 => break,
                _ => {
                    state.insert(cur, 1);
                    path.push(cur);
                    match parent.get(cur) {
                        Some(Some(next)) if state.contains_key(next) => cur = next,
                        _ => break,
                    }
                }
            }
        }
        for p in path {
            state.insert(p, 2);
        }
    }
    cycles.sort();
    Ok(ForestReport { cycles, orphans })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::doc::{BBox, Entity};
    use crate::matcher::features::FeatureConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ent(id: &str, cat: &str, y0: f64) -> Entity {
        Entity {
            id: id.into(),
            category: Category::from_label(cat),
            page: 0,
            bbox: BBox::new(100.0, y0, 500.0, y0 + 20.0),
            text: Some(id.to_string()),
            gold_parent: None,
        }
    }

    fn model(seed: u64) -> MatchModel {
        let cfg = FeatureConfig {
            text_hash_dim: 8,
            ..FeatureConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MatchModel::new_random(cfg, 12, 6, 16.0, 0.2, &mut rng).unwrap()
    }

    fn composite_doc() -> Document {
        Document {
            doc_id: "d".into(),
            entities: vec![
                ent("s", "section", 10.0),
                ent("ss", "subsection", 40.0),
                ent("t", "table", 70.0),
                ent("tc", "table_caption", 240.0),
            ],
        }
    }

    #[test]
    fn rules_enabled_reproduces_the_rule_assignment() {
        let doc = composite_doc();
        let a = parse_hierarchy(&doc, &model(1), &ParseOptions::default(), None).unwrap();
        let (rules_only, residual) = apply_all_rules(&doc, &RuleConfig::standard()).unwrap();
        assert!(residual.is_empty());
        assert_eq!(a, rules_only);
    }

    #[test]
    fn every_entity_gets_exactly_one_decision() {
        let mut doc = composite_doc();
        doc.entities.push(ent("n", "note", 500.0));
        for rules_enabled in [true, false] {
            let a = parse_hierarchy(
                &doc,
                &model(2),
                &ParseOptions { rules_enabled },
                None,
            )
            .unwrap();
            assert_eq!(a.len(), doc.entities.len());
        }
    }

    #[test]
    fn rules_disabled_gives_matcher_provenance_everywhere() {
        let doc = composite_doc();
        let a = parse_hierarchy(
            &doc,
            &model(3),
            &ParseOptions {
                rules_enabled: false,
            },
            None,
        )
        .unwrap();
        assert!(a.iter().all(|(_, d)| d.provenance == Provenance::Matcher));
        // no self-parenting even without rules
        for (id, d) in a.iter() {
            if let ParentRef::Entity(pid) = &d.parent {
                assert_ne!(pid, id);
            }
        }
    }

    #[test]
    fn single_entity_document_maps_to_root() {
        let doc = Document {
            doc_id: "d".into(),
            entities: vec![ent("n", "note", 10.0)],
        };
        for rules_enabled in [true, false] {
            let a = parse_hierarchy(&doc, &model(4), &ParseOptions { rules_enabled }, None).unwrap();
            let d = a.get("n").unwrap();
            assert_eq!(d.parent, ParentRef::Root);
            assert_eq!(d.provenance, Provenance::Matcher);
        }
    }

    #[test]
    fn restricted_residual_with_no_allowed_parent_goes_to_root() {
        // a form with no allowed category anywhere stays residual, and its
        // restricted candidate set is empty
        let doc = Document {
            doc_id: "d".into(),
            entities: vec![ent("f", "form", 10.0), ent("t", "table", 40.0)],
        };
        let a = parse_hierarchy(&doc, &model(5), &ParseOptions::default(), None).unwrap();
        let d = a.get("f").unwrap();
        assert_eq!(d.parent, ParentRef::Root);
        assert_eq!(d.provenance, Provenance::Matcher);
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let mut m = model(6);
        m.dims.d += 1;
        m.child_encoder.w1.extend(vec![0.0; m.dims.h]);
        m.parent_encoder.w1.extend(vec![0.0; m.dims.h]);
        let err = parse_hierarchy(&composite_doc(), &m, &ParseOptions::default(), None).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    fn manual_assignment(pairs: &[(&str, Option<&str>)]) -> Assignment {
        let mut a = Assignment::new();
        for (id, parent) in pairs {
            let p = match parent {
                None => ParentRef::Root,
                Some(pid) => ParentRef::Entity(pid.to_string()),
            };
            a.insert(*id, p, Provenance::Matcher).unwrap();
        }
        a
    }

    #[test]
    fn check_forest_counts_roots_and_finds_no_cycles_in_chains() {
        let doc = composite_doc();
        let a = manual_assignment(&[
            ("s", None),
            ("ss", Some("s")),
            ("t", None),
            ("tc", Some("t")),
        ]);
        let report = check_forest(&doc, &a).unwrap();
        assert_eq!(report.cycles.len(), 0);
        assert_eq!(report.orphans, 2);
    }

    #[test]
    fn check_forest_reports_each_cycle_once() {
        let doc = Document {
            doc_id: "d".into(),
            entities: vec![
                ent("a", "note", 10.0),
                ent("b", "note", 40.0),
                ent("c", "note", 70.0),
                ent("d", "note", 100.0),
            ],
        };
        let a = manual_assignment(&[
            ("a", Some("b")),
            ("b", Some("a")),
            ("c", Some("a")),
            ("d", None),
        ]);
        let report = check_forest(&doc, &a).unwrap();
        assert_eq!(report.cycles, vec![vec!["a".to_string(), "b".to_string()]]);
        assert_eq!(report.orphans, 1);
    }

    #[test]
    fn check_forest_on_all_root_assignment() {
        let doc = composite_doc();
        let a = manual_assignment(&[("s", None), ("ss", None), ("t", None), ("tc", None)]);
        let report = check_forest(&doc, &a).unwrap();
        assert!(report.cycles.is_empty());
        assert_eq!(report.orphans, 4);
    }

    #[test]
    fn check_forest_rejects_incomplete_assignments() {
        let doc = composite_doc();
        let a = manual_assignment(&[("s", None)]);
        let err = check_forest(&doc, &a).unwrap_err();
        assert!(matches!(err, Error::Internal(_)));
        assert!(err.to_string().contains("ss"));
    }

    #[test]
    fn rules_only_assignments_never_cycle() {
        let doc = composite_doc();
        let a = parse_hierarchy(&doc, &model(7), &ParseOptions::default(), None).unwrap();
        let report = check_forest(&doc, &a).unwrap();
        assert!(report.cycles.is_empty());
    }
}
