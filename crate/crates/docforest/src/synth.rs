//! Synthetic labeled corpus generator.
//!
//! Documents imitate the flow layout of scanned technical reports on a
//! nominal 1000 x 1400 page: a title, an optional abstract, then sections
//! holding paragraphs, sub-headings, tables and figures with captions,
//! and occasional forms and lists. Gold parents for every rule-covered
//! entity are literally the rule engine's own output, so the rules score
//! 1.0 on their territory by construction.
//!
//! A configurable fraction of entities are margin "note" blocks with an
//! out-of-vocabulary category. Rules cannot see them; their gold parent
//! is the geometrically nearest preceding heading (centers compared in
//! page-unrolled coordinates). That label is a pure function of geometry
//! and category, so a learned matcher has real signal while the
//! rules-only path has none.
//!
//! Generation is deterministic: every document derives its own generator
//! seed from (seed, doc index), so documents are independent of each
//! other and of the split layout.

use crate::category::{Category, KnownCategory};
use crate::corpus::{CorpusSplit, Manifest, SplitIds};
use crate::doc::{BBox, Document, Entity, ParentRef};
use crate::error::{Error, Result};
use crate::rules::{apply_all_rules, RuleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const PAGE_W: f64 = 1000.0;
pub const PAGE_H: f64 = 1400.0;

/// Heading categories a note can attach to.
const HEADER_CATS: [KnownCategory; 4] = [
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
];

/// The out-of-vocabulary category of matcher-only blocks.
pub const NOTE_CATEGORY: &str = "note";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub num_docs: usize,
    /// Inclusive [min, max] total entities per document.
    #[serde(default = "default_entities")]
    pub entities_per_doc: [usize; 2],
    /// Inclusive [min, max] cap on pages; the flow paginates naturally and
    /// never exceeds a per-document draw from this range.
    #[serde(default = "default_pages")]
    pub pages_per_doc: [u32; 2],
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Share of entities that are matcher-only note blocks.
    #[serde(default = "default_matcher_fraction")]
    pub matcher_fraction: f64,
    /// Bbox jitter amplitude as a fraction of the page height.
    #[serde(default = "default_layout_noise")]
    pub layout_noise: f64,
}

fn default_entities() -> [usize; 2] {
    [20, 60]
}

fn default_pages() -> [u32; 2] {
    [1, 10]
}

fn default_seed() -> u64 {
    42
}

fn default_matcher_fraction() -> f64 {
    0.3
}

fn default_layout_noise() -> f64 {
    0.02
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_docs == 0 {
            return Err(Error::Config("num_docs must be positive".into()));
        }
        let [emin, emax] = self.entities_per_doc;
        if emin == 0 || emin > emax {
            return Err(Error::Config(format!(
                "entities_per_doc [{emin}, {emax}] must be a nonempty positive range"
            )));
        }
        let [pmin, pmax] = self.pages_per_doc;
        if pmin == 0 || pmin > pmax {
            return Err(Error::Config(format!(
                "pages_per_doc [{pmin}, {pmax}] must be a nonempty positive range"
            )));
        }
        if !(0.0..1.0).contains(&self.matcher_fraction) {
            return Err(Error::Config(format!(
                "matcher_fraction {} must lie in [0, 1): every document needs \
                 structural entities to host the note blocks",
                self.matcher_fraction
            )));
        }
        if !(self.layout_noise >= 0.0 && self.layout_noise.is_finite()) {
            return Err(Error::Config(format!(
                "layout_noise {} must be a finite non-negative real",
                self.layout_noise
            )));
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: GenConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// splitmix64 finalizer; spreads (seed, index) into independent document
/// seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn doc_seed(seed: u64, doc_idx: usize) -> u64 {
    mix(seed ^ mix(doc_idx as u64))
}

/// Flow-layout cursor with a hard page cap.
struct Flow {
    page: u32,
    y: f64,
    max_page: u32,
}

impl Flow {
    fn new(max_page: u32) -> Self {
        Flow {
            page: 0,
            y: 40.0,
            max_page,
        }
    }

    fn advance(&mut self, h: f64, gap: f64) {
        self.y += h + gap;
        if self.y > PAGE_H - 120.0 && self.page < self.max_page {
            self.page += 1;
            self.y = 40.0;
        }
    }
}

struct DocGen<'a> {
    rng: &'a mut ChaCha8Rng,
    noise: f64,
    entities: Vec<Entity>,
}

impl DocGen<'_> {
    /// Place one block at the flow cursor, with jitter, and return its
    /// index.
    fn add(&mut self, cat: &str, page: u32, x0: f64, y0: f64, w: f64, h: f64, text: Option<&str>) -> usize {
        let j = self.noise * PAGE_H;
        let (dx, dy) = if j > 0.0 {
            (self.rng.gen_range(-j..j), self.rng.gen_range(-j..j))
        } else {
            (0.0, 0.0)
        };
        let x0 = (x0 + dx).max(0.0);
        let y0 = (y0 + dy).max(0.0);
        self.entities.push(Entity {
            id: format!("e{:04}", self.entities.len()),
            category: Category::from_label(cat),
            page,
            bbox: BBox::new(x0, y0, x0 + w, y0 + h),
            text: text.map(String::from),
            gold_parent: None,
        });
        self.entities.len() - 1
    }
}

fn generate_document(cfg: &GenConfig, doc_idx: usize) -> Result<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(doc_seed(cfg.seed, doc_idx));
    let n_target = rng.gen_range(cfg.entities_per_doc[0]..=cfg.entities_per_doc[1]);
    let page_cap = rng.gen_range(cfg.pages_per_doc[0]..=cfg.pages_per_doc[1]) - 1;

    let mut gen = DocGen {
        rng: &mut rng,
        noise: cfg.layout_noise,
        entities: Vec::new(),
    };
    let mut flow = Flow::new(page_cap);

    gen.add(
        "report_title",
        flow.page,
        150.0,
        flow.y,
        700.0,
        60.0,
        Some("Annual report on regional geology"),
    );
    flow.advance(60.0, 30.0);
    if gen.rng.gen_bool(0.5) {
        gen.add(
            "abstract",
            flow.page,
            100.0,
            flow.y,
            800.0,
            100.0,
            Some("Summary of field work, sampling and assay results."),
        );
        flow.advance(100.0, 30.0);
    }

    let mf = cfg.matcher_fraction;
    let n_structural_target = ((n_target as f64) * (1.0 - mf)).round().max(8.0) as usize;
    let mut sec_i = 0;
    while gen.entities.len() < n_structural_target {
        sec_i += 1;
        gen.add(
            "section",
            flow.page,
            80.0,
            flow.y,
            840.0,
            40.0,
            Some(&format!("{sec_i} Section heading {sec_i}")),
        );
        flow.advance(40.0, 18.0);
        let blocks = gen.rng.gen_range(1..=3);
        for _ in 0..blocks {
            let r: f64 = gen.rng.gen();
            if r < 0.55 {
                let h = gen.rng.gen_range(70.0..160.0);
                gen.add(
                    "paragraph",
                    flow.page,
                    100.0,
                    flow.y,
                    800.0,
                    h,
                    Some("Body text describing the deposit and drill results."),
                );
                flow.advance(h, 16.0);
            } else if r < 0.70 {
                gen.add(
                    "subsection",
                    flow.page,
                    90.0,
                    flow.y,
                    820.0,
                    34.0,
                    Some(&format!("{sec_i}.1 Subsection heading")),
                );
                flow.advance(34.0, 14.0);
                let h = gen.rng.gen_range(70.0..140.0);
                gen.add(
                    "paragraph",
                    flow.page,
                    100.0,
                    flow.y,
                    800.0,
                    h,
                    Some("Body text under the subsection."),
                );
                flow.advance(h, 16.0);
                if gen.rng.gen_bool(0.3) {
                    gen.add(
                        "subsubsection",
                        flow.page,
                        95.0,
                        flow.y,
                        810.0,
                        30.0,
                        Some(&format!("{sec_i}.1.1 Finer heading")),
                    );
                    flow.advance(30.0, 12.0);
                    let h = gen.rng.gen_range(60.0..120.0);
                    gen.add(
                        "paragraph",
                        flow.page,
                        100.0,
                        flow.y,
                        800.0,
                        h,
                        Some("Detail text under the finer heading."),
                    );
                    flow.advance(h, 16.0);
                }
            } else if r < 0.80 {
                gen.add("table", flow.page, 100.0, flow.y, 780.0, 150.0, None);
                flow.advance(150.0, 8.0);
                gen.add(
                    "table_caption",
                    flow.page,
                    100.0,
                    flow.y,
                    600.0,
                    24.0,
                    Some("Table: sample measurements"),
                );
                flow.advance(24.0, 16.0);
            } else if r < 0.90 {
                gen.add("figure", flow.page, 100.0, flow.y, 780.0, 150.0, None);
                flow.advance(150.0, 8.0);
                gen.add(
                    "figure_caption",
                    flow.page,
                    100.0,
                    flow.y,
                    600.0,
                    24.0,
                    Some("Figure: location map"),
                );
                flow.advance(24.0, 16.0);
            } else {
                let cat = ["form", "list", "form_body"][gen.rng.gen_range(0..3)];
                let h = gen.rng.gen_range(40.0..80.0);
                gen.add(
                    cat,
                    flow.page,
                    110.0,
                    flow.y,
                    760.0,
                    h,
                    Some("itemized entries"),
                );
                flow.advance(h, 14.0);
            }
        }
    }

    // margin notes attach beside a randomly chosen heading
    let headers: Vec<usize> = gen
        .entities
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category.known().is_some_and(|k| HEADER_CATS.contains(&k)))
        .map(|(i, _)| i)
        .collect();
    let n_struct = gen.entities.len();
    let n_notes = if mf == 0.0 {
        0
    } else {
        (((n_struct as f64) * mf / (1.0 - mf)).round() as usize).max(1)
    };
    let mut entities = gen.entities;
    for k in 0..n_notes {
        let h = &entities[headers[rng.gen_range(0..headers.len())]];
        let ny = h.bbox.y0 + rng.gen_range(5.0..14.0);
        let nx = 860.0 + rng.gen_range(0.0..30.0);
        entities.push(Entity {
            id: format!("n{k:04}"),
            category: Category::from_label(NOTE_CATEGORY),
            page: h.page,
            bbox: BBox::new(nx, ny, 980.0, ny + 26.0),
            text: Some(format!("note {k}")),
            gold_parent: None,
        });
    }

    let mut doc = Document {
        doc_id: format!("d{doc_idx:04}"),
        entities,
    };
    assign_gold(&mut doc)?;
    Ok(doc)
}

/// Gold labels: rule-assigned entities copy the rule output; notes get
/// the geometrically nearest preceding heading (unrolled page
/// coordinates, ties by reading order); any other residual entity gets
/// ROOT, matching the restricted-matcher fallback.
fn assign_gold(doc: &mut Document) -> Result<()> {
    let (assignment, residual) = apply_all_rules(doc, &RuleConfig::standard())?;
    let ranks = doc.reading_ranks();
    let headers: Vec<usize> = doc
        .entities
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category.known().is_some_and(|k| HEADER_CATS.contains(&k)))
        .map(|(i, _)| i)
        .collect();

    let unrolled_center = |e: &Entity| {
        let (cx, cy) = e.bbox.center();
        (cx, cy + f64::from(e.page) * PAGE_H)
    };

    let mut gold: Vec<Option<ParentRef>> = vec![None; doc.entities.len()];
    for (i, e) in doc.entities.iter().enumerate() {
        if let Some(dec) = assignment.get(&e.id) {
            gold[i] = Some(dec.parent.clone());
            continue;
        }
        debug_assert!(residual.contains(&e.id));
        if e.category.label() != NOTE_CATEGORY {
            gold[i] = Some(ParentRef::Root);
            continue;
        }
        let (cx, cy) = unrolled_center(e);
        let best = headers
            .iter()
            .copied()
            .filter(|&hdr| ranks[hdr] < ranks[i])
            .min_by(|&a, &b| {
                let da = {
                    let (hx, hy) = unrolled_center(&doc.entities[a]);
                    ((hx - cx).powi(2) + (hy - cy).powi(2)).sqrt()
                };
                let db = {
                    let (hx, hy) = unrolled_center(&doc.entities[b]);
                    ((hx - cx).powi(2) + (hy - cy).powi(2)).sqrt()
                };
                da.total_cmp(&db).then(ranks[a].cmp(&ranks[b]))
            });
        gold[i] = Some(match best {
            Some(hdr) => ParentRef::Entity(doc.entities[hdr].id.clone()),
            None => ParentRef::Root,
        });
    }
    for (e, g) in doc.entities.iter_mut().zip(gold) {
        e.gold_parent = g;
    }
    Ok(())
}

/// Generate the full corpus and its manifest. The split is 70/15/15 by
/// document index (floored, remainder to test).
pub fn generate_corpus(cfg: &GenConfig) -> Result<(CorpusSplit, Manifest)> {
    cfg.validate()?;
    let docs: Vec<Document> = (0..cfg.num_docs)
        .map(|i| generate_document(cfg, i))
        .collect::<Result<_>>()?;
    for doc in &docs {
        let violations = crate::doc::validate_document(doc);
        if !violations.is_empty() {
            return Err(Error::Internal(format!(
                "generated document {} violates its own invariants: {}",
                doc.doc_id,
                violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
    }
    let n = docs.len();
    let n_train = n * 70 / 100;
    let n_val = n * 15 / 100;
    let mut docs = docs;
    let test = docs.split_off(n_train + n_val);
    let val = docs.split_off(n_train);
    let corpus = CorpusSplit {
        train: docs,
        val,
        test,
    };
    let manifest = Manifest {
        seed: cfg.seed,
        config: serde_json::to_value(cfg).expect("config serializes"),
        split: SplitIds::of(&corpus),
    };
    Ok((corpus, manifest))
}
