//! Entity category vocabulary.
//!
//! The known vocabulary is the 24 categories that appear in mining-report
//! annotations: 15 categories that never take a parent, the five-level
//! section chain, and five categories with fixed parent dependencies.
//! Category strings outside the vocabulary are preserved verbatim and
//! flagged unknown; they are never silently remapped.

use serde::{Deserialize, Serialize};
use std::fmt;

/// One of the 24 known entity categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KnownCategory {
    Abstract,
    AppendixList,
    Cross,
    Figure,
    FormTitle,
    ListOfFigures,
    ListOfTables,
    Other,
    References,
    ReportTitle,
    Section,
    Summary,
    Table,
    TableOfContents,
    Title,
    Subsection,
    Subsubsection,
    Subsubsubsection,
    Paragraph,
    TableCaption,
    FigureCaption,
    Form,
    List,
    FormBody,
}

/// Canonical vocabulary order. One-hot feature layout and the rule dump
/// both follow this order, so it is part of the on-disk contract.
pub const VOCAB: [KnownCategory; 24] = [
    KnownCategory::Abstract,
    KnownCategory::AppendixList,
    KnownCategory::Cross,
    KnownCategory::Figure,
    KnownCategory::FigureCaption,
    KnownCategory::Form,
    KnownCategory::FormBody,
    KnownCategory::FormTitle,
    KnownCategory::List,
    KnownCategory::ListOfFigures,
    KnownCategory::ListOfTables,
    KnownCategory::Other,
    KnownCategory::Paragraph,
    KnownCategory::References,
    KnownCategory::ReportTitle,
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
    KnownCategory::Summary,
    KnownCategory::Table,
    KnownCategory::TableCaption,
    KnownCategory::TableOfContents,
    KnownCategory::Title,
];

/// The 15 categories that never receive a parent.
pub const NO_PARENT: [KnownCategory; 15] = [
    KnownCategory::Abstract,
    KnownCategory::AppendixList,
    KnownCategory::Cross,
    KnownCategory::Figure,
    KnownCategory::FormTitle,
    KnownCategory::ListOfFigures,
    KnownCategory::ListOfTables,
    KnownCategory::Other,
    KnownCategory::References,
    KnownCategory::ReportTitle,
    KnownCategory::Section,
    KnownCategory::Summary,
    KnownCategory::Table,
    KnownCategory::TableOfContents,
    KnownCategory::Title,
];

/// The section chain, level 1 (section) through level 5 (paragraph).
pub const CHAIN: [KnownCategory; 5] = [
    KnownCategory::Section,
    KnownCategory::Subsection,
    KnownCategory::Subsubsection,
    KnownCategory::Subsubsubsection,
    KnownCategory::Paragraph,
];

impl KnownCategory {
    pub fn label(self) -> &'static str {
        match self {
            KnownCategory::Abstract => "abstract",
            KnownCategory::AppendixList => "appendix_list",
            KnownCategory::Cross => "cross",
            KnownCategory::Figure => "figure",
            KnownCategory::FormTitle => "form_title",
            KnownCategory::ListOfFigures => "list_of_figures",
            KnownCategory::ListOfTables => "list_of_tables",
            KnownCategory::Other => "other",
            KnownCategory::References => "references",
            KnownCategory::ReportTitle => "report_title",
            KnownCategory::Section => "section",
            KnownCategory::Summary => "summary",
            KnownCategory::Table => "table",
            KnownCategory::TableOfContents => "table_of_contents",
            KnownCategory::Title => "title",
            KnownCategory::Subsection => "subsection",
            KnownCategory::Subsubsection => "subsubsection",
            KnownCategory::Subsubsubsection => "subsubsubsection",
            KnownCategory::Paragraph => "paragraph",
            KnownCategory::TableCaption => "table_caption",
            KnownCategory::FigureCaption => "figure_caption",
            KnownCategory::Form => "form",
            KnownCategory::List => "list",
            KnownCategory::FormBody => "form_body",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        VOCAB.iter().copied().find(|c| c.label() == label)
    }

    /// Position in [`VOCAB`]; used for the one-hot feature block.
    pub fn vocab_index(self) -> usize {
        VOCAB.iter().position(|&c| c == self).expect("category in VOCAB")
    }

    /// True for the 15 categories of the no-parent rule.
    pub fn is_no_parent(self) -> bool {
        NO_PARENT.contains(&self)
    }

    /// Chain level 1..=5 for section-chain categories, `None` otherwise.
    pub fn chain_level(self) -> Option<u8> {
        CHAIN
            .iter()
            .position(|&c| c == self)
            .map(|i| (i + 1) as u8)
    }
}

/// An entity category: a known vocabulary member or a preserved unknown label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Known(KnownCategory),
    Unknown(String),
}

impl Category {
    pub fn from_label(label: &str) -> Self {
        match KnownCategory::from_label(label) {
            Some(k) => Category::Known(k),
            None => Category::Unknown(label.to_string()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            Category::Known(k) => k.label(),
            Category::Unknown(s) => s,
        }
    }

    pub fn is_known(&self) -> bool {
        matches!(self, Category::Known(_))
    }

    pub fn known(&self) -> Option<KnownCategory> {
        match self {
            Category::Known(k) => Some(*k),
            Category::Unknown(_) => None,
        }
    }

    pub fn chain_level(&self) -> Option<u8> {
        self.known().and_then(KnownCategory::chain_level)
    }

    /// One-hot slot: vocabulary position for known categories, the extra
    /// trailing bucket for unknown ones.
    pub fn onehot_index(&self) -> usize {
        match self {
            Category::Known(k) => k.vocab_index(),
            Category::Unknown(_) => VOCAB.len(),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        Ok(Category::from_label(&label))
    }
}
