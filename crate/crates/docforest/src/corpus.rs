//! Corpus directory layout: three JSONL files plus a manifest.
//!
//! ```text
//! corpus/
//!   train.jsonl     one document per line
//!   val.jsonl
//!   test.jsonl
//!   manifest.json   {"seed": …, "config": {…}, "split": {"train": [ids…], …}}
//! ```

use crate::doc::{parse_document, serialize_document, Document};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs;
use std::path::Path;

pub const SPLIT_NAMES: [&str; 3] = ["train", "val", "test"];

/// A labeled corpus partitioned into train/val/test.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub val: Vec<Document>,
    pub test: Vec<Document>,
}

impl CorpusSplit {
    pub fn split(&self, name: &str) -> Option<&[Document]> {
        match name {
            "train" => Some(&self.train),
            "val" => Some(&self.val),
            "test" => Some(&self.test),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &Document> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

/// Sidecar metadata written next to the split files. `config` is kept as
/// raw JSON so the corpus format does not depend on any generator type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: Value,
    pub split: SplitIds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitIds {
    pub fn of(corpus: &CorpusSplit) -> Self {
        let ids = |docs: &[Document]| docs.iter().map(|d| d.doc_id.clone()).collect();
        SplitIds {
            train: ids(&corpus.train),
            val: ids(&corpus.val),
            test: ids(&corpus.test),
        }
    }
}

/// Read and validate one split file. Line numbers are 1-based in errors.
pub fn load_jsonl(path: &Path) -> Result<Vec<Document>> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut docs = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document(line).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}:{}: {m}", path.display(), lineno + 1)),
            Error::Validation(m) => {
                Error::Validation(format!("{}:{}: {m}", path.display(), lineno + 1))
            }
            other => other,
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn save_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serialize_document(doc));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a full corpus directory, checking the manifest's id lists against
/// the split files.
pub fn load_corpus_dir(dir: &Path) -> Result<(CorpusSplit, Manifest)> {
    let manifest_path = dir.join("manifest.json");
    let manifest_raw = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", manifest_path.display())))?;
    let manifest: Manifest = serde_json::from_str(&manifest_raw)
        .map_err(|e| Error::Parse(format!("{}: {e}", manifest_path.display())))?;

    let corpus = CorpusSplit {
        train: load_jsonl(&dir.join("train.jsonl"))?,
        val: load_jsonl(&dir.join("val.jsonl"))?,
        test: load_jsonl(&dir.join("test.jsonl"))?,
    };

    let actual = SplitIds::of(&corpus);
    if actual != manifest.split {
        return Err(Error::Validation(format!(
            "{}: split doc_id lists disagree with the JSONL files",
            manifest_path.display()
        )));
    }
    Ok((corpus, manifest))
}

/// Write a corpus directory (creating it if needed).
pub fn save_corpus_dir(dir: &Path, corpus: &CorpusSplit, manifest: &Manifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_jsonl(&dir.join("train.jsonl"), &corpus.train)?;
    save_jsonl(&dir.join("val.jsonl"), &corpus.val)?;
    save_jsonl(&dir.join("test.jsonl"), &corpus.test)?;
    let mut manifest_json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    manifest_json.push('\n');
    fs::write(dir.join("manifest.json"), manifest_json)?;
    Ok(())
}
