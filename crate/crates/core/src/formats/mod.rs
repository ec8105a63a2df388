//! Line-delimited JSON and CSV files exchanged with external tools.

mod dataset;
mod records;

pub use dataset::{parse_dataset, write_dataset, DatasetRecord};
pub use records::{
    parse_embeddings, parse_history, parse_trace, read_csv, write_csv, write_embeddings, write_history, write_trace,
    EmbeddingRow,
};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::archspace::ArchError;
use crate::search::SearchError;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Parses one JSON value per non-blank line, reporting 1-based line numbers.
pub fn read_ndjson<T: DeserializeOwned>(text: &str) -> Result<Vec<(usize, T)>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| FormatError::Json { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn write_ndjson<'a, T: Serialize + 'a>(items: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serialisable record"));
        out.push('\n');
    }
    out
}
