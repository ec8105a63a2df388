use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::{ArchError, CellGraph, SearchSpaceSpec};

/// Largest node count handled by exhaustive permutation minimisation.
pub const MAX_EXACT_NODES: usize = 8;

/// Isomorphism-invariant identifier of a cell (SHA-256 of its canonical form).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub [u8; 32]);

impl CanonicalKey {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// First eight digest bytes mapped uniformly onto `[-1, 1]`.
    pub fn unit_interval_hash(&self) -> f64 {
        let mut b = [0u8; 8];
        b.copy_from_slice(&self.0[..8]);
        let v = u64::from_be_bytes(b);
        (v as f64 / u64::MAX as f64) * 2.0 - 1.0
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for CanonicalKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s).map_err(|e| e.to_string())?;
        let arr: [u8; 32] = bytes.try_into().map_err(|_| "canonical key must be 32 bytes".to_string())?;
        Ok(Self(arr))
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn serialize_cell(cell: &CellGraph) -> Vec<u8> {
    let n = cell.num_nodes();
    let mut out = Vec::with_capacity(1 + n + n * n / 8 + 1);
    out.push(n as u8);
    out.extend(cell.ops().iter().map(|&o| o as u8));
    let mut acc = 0u8;
    let mut bits = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc = (acc << 1) | u8::from(cell.has_edge(i, j));
            bits += 1;
            if bits == 8 {
                out.push(acc);
                acc = 0;
                bits = 0;
            }
        }
    }
    if bits > 0 {
        out.push(acc << (8 - bits));
    }
    out
}

fn pinned_prefix(spec: &SearchSpaceSpec) -> usize {
    spec.num_inputs()
}

/// The representative of the cell's isomorphism class: the relabelling of
/// intermediate nodes (inputs and output pinned) with the smallest
/// serialised form among those that keep the adjacency upper-triangular.
pub fn canonicalize(cell: &CellGraph, spec: &SearchSpaceSpec) -> Result<CellGraph, ArchError> {
    if spec.max_nodes > MAX_EXACT_NODES {
        return Err(ArchError::TooLargeForExact { nodes: spec.max_nodes, max: MAX_EXACT_NODES });
    }
    let n = cell.num_nodes();
    let lo = pinned_prefix(spec).min(n);
    if n < lo + 2 {
        return Ok(cell.clone());
    }
    let hi = n - 1;
    let mut best: Option<(Vec<u8>, CellGraph)> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    for p in (lo..hi).permutations(hi - lo) {
        perm[lo..hi].copy_from_slice(&p);
        if let Some(c) = cell.permuted(&perm) {
            let bytes = serialize_cell(&c);
            if best.as_ref().is_none_or(|(b, _)| bytes < *b) {
                best = Some((bytes, c));
            }
        }
    }
    Ok(best.map(|(_, c)| c).expect("identity permutation is always admissible"))
}

pub fn canonical_hash(cell: &CellGraph, spec: &SearchSpaceSpec) -> Result<CanonicalKey, ArchError> {
    let c = canonicalize(cell, spec)?;
    let mut h = Sha256::new();
    h.update(b"latentnas-cell-v1");
    h.update(serialize_cell(&c));
    let digest = h.finalize();
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    Ok(CanonicalKey(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isomorphs_share_keys() {
        let spec = SearchSpaceSpec::synthetic();
        let a = CellGraph::new(vec![0, 1, 2, 3, 4], &[(0, 1), (0, 2), (1, 3), (2, 4), (3, 4)]).unwrap();
        // swap nodes 1 and 2 -> still upper triangular
        let b = a.permuted(&[0, 2, 1, 3, 4]).unwrap();
        assert_ne!(a, b);
        assert_eq!(canonical_hash(&a, &spec).unwrap(), canonical_hash(&b, &spec).unwrap());
    }

    #[test]
    fn labels_matter() {
        let spec = SearchSpaceSpec::synthetic();
        let a = CellGraph::new(vec![0, 1, 2, 4], &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut b = a.clone();
        b.set_op(2, 3);
        assert_ne!(canonical_hash(&a, &spec).unwrap(), canonical_hash(&b, &spec).unwrap());
    }

    #[test]
    fn large_spaces_refuse() {
        let spec = SearchSpaceSpec::darts();
        let cell = CellGraph::new(vec![0, 1, 10], &[]).unwrap();
        assert!(matches!(canonical_hash(&cell, &spec), Err(ArchError::TooLargeForExact { .. })));
    }

    #[test]
    fn key_hex_round_trip() {
        let spec = SearchSpaceSpec::synthetic();
        let a = CellGraph::new(vec![0, 4], &[(0, 1)]).unwrap();
        let k = canonical_hash(&a, &spec).unwrap();
        assert_eq!(k.to_hex().parse::<CanonicalKey>().unwrap(), k);
        let h = k.unit_interval_hash();
        assert!((-1.0..=1.0).contains(&h));
    }
}
