use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{read_ndjson, write_ndjson, FormatError};
use crate::search::{EmbeddingTable, TraceEvent};
use crate::vgae::EpochRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRow {
    pub id: u64,
    pub embedding: Vec<f64>,
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable, FormatError> {
    let rows = read_ndjson::<EmbeddingRow>(text)?;
    if let Some((line, _)) = rows.iter().find(|(_, r)| r.embedding.iter().any(|v| !v.is_finite())) {
        return Err(FormatError::Record { line: *line, message: "non-finite embedding value".into() });
    }
    let (ids, embeddings) = rows.into_iter().map(|(_, r)| (r.id, r.embedding)).unzip();
    Ok(EmbeddingTable::new(ids, embeddings)?)
}

pub fn write_embeddings(table: &EmbeddingTable) -> String {
    let rows: Vec<EmbeddingRow> =
        table.ids.iter().zip(&table.embeddings).map(|(&id, e)| EmbeddingRow { id, embedding: e.clone() }).collect();
    write_ndjson(&rows)
}

pub fn parse_history(text: &str) -> Result<Vec<EpochRecord>, FormatError> {
    Ok(read_ndjson(text)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_history(history: &[EpochRecord]) -> String {
    write_ndjson(history)
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, FormatError> {
    Ok(read_ndjson(text)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_trace(events: &[TraceEvent]) -> String {
    write_ndjson(events)
}

/// Header plus one row per record.
pub fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| FormatError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FormatError::Csv(e.to_string()))
}

pub fn read_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, FormatError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| FormatError::Csv(e.to_string())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_round_trip_bitwise() {
        let t = EmbeddingTable::new(vec![4, 9], vec![vec![0.1, -1e-300], vec![1.0 / 3.0, 2.5e10]]).unwrap();
        assert_eq!(parse_embeddings(&write_embeddings(&t)).unwrap(), t);
        assert!(parse_embeddings("{\"id\":1,\"embedding\":[1]}\n{\"id\":1,\"embedding\":[2]}").is_err());
        assert!(parse_embeddings("{\"id\":1,\"embedding\":[1],\"x\":0}").is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![(1usize, 0.5f64), (2, 1.25)];
        let text = write_csv(rows.iter()).unwrap();
        assert_eq!(read_csv::<(usize, f64)>(&format!("edit_distance,l2\n{}", text)).unwrap(), rows);
    }

    #[test]
    fn trace_round_trip() {
        let e = TraceEvent {
            step: 0,
            id: 3,
            reward: 0.91,
            test_accuracy: 0.9,
            elapsed_seconds: 600.0,
            incumbent: 0.91,
            incumbent_test: 0.9,
        };
        assert_eq!(parse_trace(&write_trace(&[e, e])).unwrap(), vec![e, e]);
    }
}
