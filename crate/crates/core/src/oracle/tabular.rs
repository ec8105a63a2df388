use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AccuracyOracle, OracleError, OracleRecord};
use crate::archspace::{canonical_hash, CanonicalKey, CellGraph, SearchSpaceSpec};

/// One line of a tabular oracle file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularRow {
    pub canonical_key: CanonicalKey,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    pub training_seconds: f64,
}

/// Precomputed records keyed by canonical key.
#[derive(Debug, Clone)]
pub struct TabularOracle {
    pub spec: SearchSpaceSpec,
    records: BTreeMap<CanonicalKey, OracleRecord>,
}

fn field(
    obj: &serde_json::Map<String, serde_json::Value>,
    name: &'static str,
    line: usize,
) -> Result<f64, OracleError> {
    let v = obj.get(name).ok_or(OracleError::MissingField { line, field: name })?;
    v.as_f64().ok_or_else(|| OracleError::Parse { line, message: format!("{name} must be a number") })
}

impl TabularOracle {
    pub fn new(spec: &SearchSpaceSpec) -> Self {
        Self { spec: spec.clone(), records: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: CanonicalKey, record: OracleRecord) -> Result<(), OracleError> {
        record.check()?;
        if self.records.contains_key(&key) {
            return Err(OracleError::DuplicateKey(key.to_hex()));
        }
        self.records.insert(key, record);
        Ok(())
    }

    /// Records every cell through another oracle (e.g. the synthetic one).
    pub fn tabulate<'a>(
        spec: &SearchSpaceSpec,
        cells: impl IntoIterator<Item = &'a CellGraph>,
        source: &dyn AccuracyOracle,
    ) -> Result<Self, OracleError> {
        let mut t = Self::new(spec);
        for c in cells {
            let key = source.key(c)?;
            let rec = source.lookup_key(&key, c)?;
            t.insert(key, rec)?;
        }
        Ok(t)
    }

    /// Parses newline-delimited JSON rows; blank lines are skipped.
    pub fn parse(spec: &SearchSpaceSpec, text: &str) -> Result<Self, OracleError> {
        let mut t = Self::new(spec);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(raw).map_err(|e| OracleError::Parse { line, message: e.to_string() })?;
            let obj =
                value.as_object().ok_or_else(|| OracleError::Parse { line, message: "expected an object".into() })?;
            let key_str = obj
                .get("canonical_key")
                .ok_or(OracleError::MissingField { line, field: "canonical_key" })?
                .as_str()
                .ok_or_else(|| OracleError::Parse { line, message: "canonical_key must be a string".into() })?;
            let key: CanonicalKey = key_str.parse().map_err(|m| OracleError::Parse { line, message: m })?;
            let record = OracleRecord {
                validation_accuracy: field(obj, "validation_accuracy", line)?,
                test_accuracy: field(obj, "test_accuracy", line)?,
                training_seconds: field(obj, "training_seconds", line)?,
            };
            record.check().map_err(|e| OracleError::Parse { line, message: e.to_string() })?;
            t.insert(key, record)?;
        }
        Ok(t)
    }

    pub fn load(spec: &SearchSpaceSpec, path: &Path) -> Result<Self, OracleError> {
        Self::parse(spec, &std::fs::read_to_string(path)?)
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for (k, r) in &self.records {
            let row = TabularRow {
                canonical_key: *k,
                validation_accuracy: r.validation_accuracy,
                test_accuracy: r.test_accuracy,
                training_seconds: r.training_seconds,
            };
            out.push_str(&serde_json::to_string(&row).expect("serialisable"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), OracleError> {
        Ok(std::fs::write(path, self.to_ndjson())?)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &CanonicalKey) -> Option<&OracleRecord> {
        self.records.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanonicalKey, &OracleRecord)> {
        self.records.iter()
    }

    /// Highest test accuracy (lowest key on ties).
    pub fn best_in_space(&self) -> Result<(CanonicalKey, OracleRecord), OracleError> {
        let mut best: Option<(&CanonicalKey, &OracleRecord)> = None;
        for (k, r) in &self.records {
            if best.is_none_or(|(_, b)| r.test_accuracy > b.test_accuracy) {
                best = Some((k, r));
            }
        }
        best.map(|(k, r)| (*k, *r)).ok_or(OracleError::EmptyOracle)
    }
}

impl AccuracyOracle for TabularOracle {
    fn key(&self, cell: &CellGraph) -> Result<CanonicalKey, OracleError> {
        Ok(canonical_hash(cell, &self.spec)?)
    }

    fn lookup_key(&self, key: &CanonicalKey, _cell: &CellGraph) -> Result<OracleRecord, OracleError> {
        self.records.get(key).copied().ok_or_else(|| OracleError::UnknownArchitecture(key.to_hex()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archspace::enumerate;
    use crate::oracle::SyntheticOracle;

    fn spec() -> SearchSpaceSpec {
        SearchSpaceSpec::synthetic()
    }

    #[test]
    fn empty_file_gives_empty_oracle() {
        let t = TabularOracle::parse(&spec(), "").unwrap();
        assert!(t.is_empty());
        let c = CellGraph::new(vec![0, 4], &[(0, 1)]).unwrap();
        assert!(matches!(t.lookup(&c), Err(OracleError::UnknownArchitecture(_))));
        assert!(matches!(t.best_in_space(), Err(OracleError::EmptyOracle)));
    }

    #[test]
    fn single_record_lookup_and_regret() {
        let c = CellGraph::new(vec![0, 1, 4], &[(0, 1), (1, 2)]).unwrap();
        let key = canonical_hash(&c, &spec()).unwrap();
        let line = format!(
            "{{\"canonical_key\":\"{key}\",\"validation_accuracy\":0.9,\"test_accuracy\":0.89,\"training_seconds\":12.5}}\n"
        );
        let t = TabularOracle::parse(&spec(), &line).unwrap();
        let r = t.lookup(&c).unwrap();
        assert_eq!(r.test_accuracy, 0.89);
        let (bk, best) = t.best_in_space().unwrap();
        assert_eq!(bk, key);
        assert_eq!(best.regret(&best), 0.0);
    }

    #[test]
    fn parse_errors() {
        let s = spec();
        let key = "00".repeat(32);
        assert!(matches!(TabularOracle::parse(&s, "{"), Err(OracleError::Parse { line: 1, .. })));
        let missing = format!("{{\"canonical_key\":\"{key}\",\"validation_accuracy\":0.9,\"training_seconds\":1}}");
        assert!(matches!(
            TabularOracle::parse(&s, &missing),
            Err(OracleError::MissingField { line: 1, field: "test_accuracy" })
        ));
        let row = format!(
            "{{\"canonical_key\":\"{key}\",\"validation_accuracy\":0.9,\"test_accuracy\":0.8,\"training_seconds\":1}}"
        );
        let dup = format!("{row}\n\n{row}\n");
        assert!(matches!(TabularOracle::parse(&s, &dup), Err(OracleError::DuplicateKey(_))));
        let bad_range = row.replace("0.9", "1.9");
        assert!(matches!(TabularOracle::parse(&s, &bad_range), Err(OracleError::Parse { .. })));
        assert!(matches!(TabularOracle::parse(&s, "{\"canonical_key\":\"zz\"}"), Err(OracleError::Parse { .. })));
    }

    #[test]
    fn write_load_round_trip_is_exact() {
        let s = spec();
        let cells: Vec<CellGraph> = enumerate(&s).unwrap().collect();
        let t = TabularOracle::tabulate(&s, &cells, &SyntheticOracle::new(&s)).unwrap();
        assert_eq!(t.len(), cells.len());
        let back = TabularOracle::parse(&s, &t.to_ndjson()).unwrap();
        assert_eq!(back.len(), t.len());
        for ((ka, ra), (kb, rb)) in t.iter().zip(back.iter()) {
            assert_eq!(ka, kb);
            assert_eq!(ra.validation_accuracy.to_bits(), rb.validation_accuracy.to_bits());
            assert_eq!(ra.test_accuracy.to_bits(), rb.test_accuracy.to_bits());
            assert_eq!(ra.training_seconds.to_bits(), rb.training_seconds.to_bits());
        }
        let (_, best) = t.best_in_space().unwrap();
        let scan = t.iter().map(|(_, r)| r.test_accuracy).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.test_accuracy, scan);
    }
}
