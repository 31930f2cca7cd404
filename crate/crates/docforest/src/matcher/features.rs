//! Entity feature vectors.
//!
//! Each entity becomes a fixed-dimension vector of three concatenated
//! blocks, in this order:
//!
//! 1. geometry (10): page_norm, x0, y0, x1, y1 (normalized to the page
//!    extent), width, height, center-x, center-y, text-length norm;
//! 2. category one-hot (25): the 24 known categories in vocabulary order
//!    plus one unknown bucket;
//! 3. text hash (`text_hash_dim`): counts of character n-grams hashed into
//!    buckets, L2-normalized; all zeros for missing or empty text.
//!
//! An external-embedding file can replace block 3 per entity, letting a
//! pretrained text/vision encoder plug in without changing the model
//! format.

use crate::doc::{Document, Entity};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

pub const GEOMETRY_DIM: usize = 10;
pub const ONEHOT_DIM: usize = crate::category::VOCAB.len() + 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "default_hash_dim")]
    pub text_hash_dim: usize,
    #[serde(default = "default_ngram_sizes")]
    pub ngram_sizes: Vec<usize>,
    #[serde(default = "default_true")]
    pub include_geometry: bool,
    #[serde(default = "default_true")]
    pub category_onehot: bool,
}

fn default_hash_dim() -> usize {
    64
}

fn default_ngram_sizes() -> Vec<usize> {
    vec![2, 3]
}

fn default_true() -> bool {
    true
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            text_hash_dim: default_hash_dim(),
            ngram_sizes: default_ngram_sizes(),
            include_geometry: true,
            category_onehot: true,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        let mut d = self.text_hash_dim;
        if self.include_geometry {
            d += GEOMETRY_DIM;
        }
        if self.category_onehot {
            d += ONEHOT_DIM;
        }
        d
    }

    pub fn validate(&self) -> Result<()> {
        if self.text_hash_dim == 0 {
            return Err(Error::Config("text_hash_dim must be at least 1".into()));
        }
        if self.ngram_sizes.is_empty() || self.ngram_sizes.iter().any(|&n| n == 0) {
            return Err(Error::Config(
                "ngram_sizes must be a nonempty list of positive sizes".into(),
            ));
        }
        Ok(())
    }
}

/// Per-entity vectors that replace the text-hash block, keyed by
/// (doc_id, entity_id). Loaded from JSONL lines
/// `{"doc_id": …, "entity_id": …, "embedding": [ … ]}`.
#[derive(Debug, Clone, Default)]
pub struct ExternalEmbeddings {
    map: HashMap<(String, String), Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingRecord {
    doc_id: String,
    entity_id: String,
    embedding: Vec<f64>,
}

impl ExternalEmbeddings {
    pub fn load(path: &Path, expected_dim: usize) -> Result<Self> {
        let raw = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut map = HashMap::new();
        for (lineno, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: EmbeddingRecord = serde_json::from_str(line).map_err(|e| {
                Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            if rec.embedding.len() != expected_dim {
                return Err(Error::Config(format!(
                    "{}:{}: embedding for {}/{} has dimension {}, config expects {}",
                    path.display(),
                    lineno + 1,
                    rec.doc_id,
                    rec.entity_id,
                    rec.embedding.len(),
                    expected_dim
                )));
            }
            map.insert((rec.doc_id, rec.entity_id), rec.embedding);
        }
        Ok(ExternalEmbeddings { map })
    }

    pub fn get(&self, doc_id: &str, entity_id: &str) -> Option<&[f64]> {
        self.map
            .get(&(doc_id.to_string(), entity_id.to_string()))
            .map(Vec::as_slice)
    }
}

/// Precomputed per-document context for feature building: page extents and
/// the page-number normalizer.
pub struct FeatureBuilder<'a> {
    cfg: &'a FeatureConfig,
    doc_id: &'a str,
    max_page: u32,
    /// page -> (max x1, max y1) over that page's entities
    extents: HashMap<u32, (f64, f64)>,
    external: Option<&'a ExternalEmbeddings>,
}

impl<'a> FeatureBuilder<'a> {
    pub fn new(doc: &'a Document, cfg: &'a FeatureConfig) -> Self {
        Self::with_external(doc, cfg, None)
    }

    pub fn with_external(
        doc: &'a Document,
        cfg: &'a FeatureConfig,
        external: Option<&'a ExternalEmbeddings>,
    ) -> Self {
        let max_page = doc.entities.iter().map(|e| e.page).max().unwrap_or(0);
        let mut extents: HashMap<u32, (f64, f64)> = HashMap::new();
        for e in &doc.entities {
            let ext = extents.entry(e.page).or_insert((0.0, 0.0));
            ext.0 = ext.0.max(e.bbox.x1);
            ext.1 = ext.1.max(e.bbox.y1);
        }
        FeatureBuilder {
            cfg,
            doc_id: &doc.doc_id,
            max_page,
            extents,
            external,
        }
    }

    /// Feature vector for one entity of the builder's document.
    pub fn features(&self, e: &Entity) -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(self.cfg.dim());
        if self.cfg.include_geometry {
            let (ex, ey) = self.extents.get(&e.page).copied().unwrap_or((0.0, 0.0));
            // extent 0 would divide by zero; those components become 0
            let nx = |x: f64| if ex > 0.0 { x / ex } else { 0.0 };
            let ny = |y: f64| if ey > 0.0 { y / ey } else { 0.0 };
            let (cx, cy) = e.bbox.center();
            let text_len = e.text.as_deref().map_or(0, |t| t.chars().count());
            v.push(f64::from(e.page) / f64::from(self.max_page.max(1)));
            v.push(nx(e.bbox.x0));
            v.push(ny(e.bbox.y0));
            v.push(nx(e.bbox.x1));
            v.push(ny(e.bbox.y1));
            v.push(nx(e.bbox.width()));
            v.push(ny(e.bbox.height()));
            v.push(nx(cx));
            v.push(ny(cy));
            v.push(text_len as f64 / (text_len as f64 + 100.0));
        }
        if self.cfg.category_onehot {
            let mut onehot = vec![0.0; ONEHOT_DIM];
            onehot[e.category.onehot_index()] = 1.0;
            v.extend(onehot);
        }
        match self.external {
            Some(ext) => match ext.get(self.doc_id, &e.id) {
                Some(emb) => v.extend_from_slice(emb),
                None => {
                    return Err(Error::Validation(format!(
                        "no external embedding for entity {} in document {}",
                        e.id, self.doc_id
                    )))
                }
            },
            None => v.extend(text_hash_block(
                e.text.as_deref(),
                self.cfg.text_hash_dim,
                &self.cfg.ngram_sizes,
            )),
        }
        debug_assert_eq!(v.len(), self.cfg.dim());
        Ok(v)
    }
}

/// One-shot convenience over [`FeatureBuilder`].
pub fn build_feature_vector(e: &Entity, doc: &Document, cfg: &FeatureConfig) -> Vec<f64> {
    FeatureBuilder::new(doc, cfg)
        .features(e)
        .expect("no external embeddings involved")
}

/// L2-normalized bucket counts of character n-grams. Missing or too-short
/// text yields all zeros.
fn text_hash_block(text: Option<&str>, dim: usize, ngram_sizes: &[usize]) -> Vec<f64> {
    let mut block = vec![0.0; dim];
    let Some(text) = text else { return block };
    let chars: Vec<char> = text.chars().collect();
    for &n in ngram_sizes {
        if n == 0 || chars.len() < n {
            continue;
        }
        for window in chars.windows(n) {
            let mut hash = FNV_OFFSET;
            let mut buf = [0u8; 4];
            for &c in window {
                for &b in c.encode_utf8(&mut buf).as_bytes() {
                    hash = (hash ^ u64::from(b)).wrapping_mul(FNV_PRIME);
                }
            }
            block[(hash % dim as u64) as usize] += 1.0;
        }
    }
    let norm = block.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut block {
            *v /= norm;
        }
    }
    block
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
