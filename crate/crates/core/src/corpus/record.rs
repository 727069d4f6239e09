use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocType {
    #[serde(rename = "journal-article", alias = "journal")]
    JournalArticle,
    #[serde(rename = "book")]
    Book,
    #[serde(rename = "conference")]
    Conference,
    #[serde(rename = "other")]
    Other,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::JournalArticle => "journal-article",
            DocType::Book => "book",
            DocType::Conference => "conference",
            DocType::Other => "other",
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            DocType::JournalArticle => 0,
            DocType::Book => 1,
            DocType::Conference => 2,
            DocType::Other => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => DocType::JournalArticle,
            1 => DocType::Book,
            2 => DocType::Conference,
            3 => DocType::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "journal-article" | "journal" => Ok(DocType::JournalArticle),
            "book" => Ok(DocType::Book),
            "conference" => Ok(DocType::Conference),
            "other" => Ok(DocType::Other),
            _ => Err(format!("unknown doc_type `{s}`")),
        }
    }
}

/// One paper's metadata, as read from `papers.jsonl`.
///
/// `fields` holds distinct field-label ids in ascending order. `authors`
/// is optional; without it the self-citation variant degrades to the
/// base index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub year: i32,
    pub doc_type: DocType,
    #[serde(default)]
    pub fields: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<Vec<String>>,
}

impl PaperRecord {
    pub fn new(id: impl Into<String>, year: i32, doc_type: DocType) -> Self {
        PaperRecord {
            id: id.into(),
            year,
            doc_type,
            fields: Vec::new(),
            authors: None,
        }
    }

    pub fn with_fields(mut self, fields: impl IntoIterator<Item = u32>) -> Self {
        self.fields = fields.into_iter().collect();
        self.normalize_fields();
        self
    }

    pub fn with_authors<S: Into<String>>(mut self, authors: impl IntoIterator<Item = S>) -> Self {
        self.authors = Some(authors.into_iter().map(Into::into).collect());
        self
    }

    pub(crate) fn normalize_fields(&mut self) {
        self.fields.sort_unstable();
        self.fields.dedup();
    }

    /// True when both papers list at least one identical author string.
    pub fn shares_author_with(&self, other: &PaperRecord) -> bool {
        match (&self.authors, &other.authors) {
            (Some(a), Some(b)) => a.iter().any(|x| b.contains(x)),
            _ => false,
        }
    }

    pub fn has_authors(&self) -> bool {
        self.authors.as_ref().is_some_and(|a| !a.is_empty())
    }
}
