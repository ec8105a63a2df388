use serde::{Deserialize, Serialize};

use super::ArchError;

/// How a space places operations and which validity rules apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    /// Operations on nodes, one input and one output node (NAS-Bench-101 style).
    NodeOp,
    /// Operations on the six edges of a fixed 4-node DAG, stored after the
    /// edge-to-node transformation (NAS-Bench-201 style).
    EdgeOp,
    /// Two input nodes, eight edge-operation nodes and one output node.
    DartsCell,
    /// Small enumerable node-op space.
    Synthetic,
}

/// A cell-based search space.
///
/// `op_vocab` always lists the input label(s) first and the output label
/// last. Padding rows in the operation matrix are all-zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpaceSpec {
    pub name: String,
    pub max_nodes: usize,
    pub op_vocab: Vec<String>,
    #[serde(default)]
    pub max_edges: Option<usize>,
    pub kind: SpaceKind,
    #[serde(default = "default_padding")]
    pub padding: bool,
}

fn default_padding() -> bool {
    true
}

impl SearchSpaceSpec {
    pub fn nasbench101() -> Self {
        Self {
            name: "nasbench101".into(),
            max_nodes: 7,
            op_vocab: vec![
                "input".into(),
                "conv1x1-bn-relu".into(),
                "conv3x3-bn-relu".into(),
                "maxpool3x3".into(),
                "output".into(),
            ],
            max_edges: Some(9),
            kind: SpaceKind::NodeOp,
            padding: true,
        }
    }

    /// The NAS-Bench-201 space in its transformed node-op form: input, six
    /// edge-operation nodes, output.
    pub fn nasbench201() -> Self {
        Self {
            name: "nasbench201".into(),
            max_nodes: 8,
            op_vocab: vec![
                "input".into(),
                "none".into(),
                "skip_connect".into(),
                "nor_conv_1x1".into(),
                "nor_conv_3x3".into(),
                "avg_pool_3x3".into(),
                "output".into(),
            ],
            max_edges: Some(10),
            kind: SpaceKind::EdgeOp,
            padding: false,
        }
    }

    pub fn darts() -> Self {
        Self {
            name: "darts".into(),
            max_nodes: 11,
            op_vocab: vec![
                "c_k-2".into(),
                "c_k-1".into(),
                "zero".into(),
                "max_pool_3x3".into(),
                "avg_pool_3x3".into(),
                "identity".into(),
                "sep_conv_3x3".into(),
                "sep_conv_5x5".into(),
                "dil_conv_3x3".into(),
                "dil_conv_5x5".into(),
                "c_k".into(),
            ],
            max_edges: None,
            kind: SpaceKind::DartsCell,
            padding: false,
        }
    }

    /// Default enumerable space: up to 5 nodes, 3 compute operations,
    /// at most 6 edges.
    pub fn synthetic() -> Self {
        Self::synthetic_with(5, 3, 6)
    }

    pub fn synthetic_with(max_nodes: usize, compute_ops: usize, max_edges: usize) -> Self {
        let names = ["conv1x1", "conv3x3", "maxpool3x3", "avgpool3x3", "sepconv3x3"];
        let mut op_vocab = vec!["input".to_string()];
        for i in 0..compute_ops {
            op_vocab.push(names.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("op{i}")));
        }
        op_vocab.push("output".into());
        Self {
            name: format!("synthetic-{max_nodes}n-{compute_ops}op-{max_edges}e"),
            max_nodes,
            op_vocab,
            max_edges: Some(max_edges),
            kind: SpaceKind::Synthetic,
            padding: true,
        }
    }

    /// Looks up one of the built-in spaces by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "nasbench101" | "nb101" => Some(Self::nasbench101()),
            "nasbench201" | "nb201" => Some(Self::nasbench201()),
            "darts" => Some(Self::darts()),
            "synthetic" => Some(Self::synthetic()),
            _ => None,
        }
    }

    pub fn num_ops(&self) -> usize {
        self.op_vocab.len()
    }

    /// Number of leading input labels (two for DARTS cells).
    pub fn num_inputs(&self) -> usize {
        match self.kind {
            SpaceKind::DartsCell => 2,
            _ => 1,
        }
    }

    pub fn output_op(&self) -> usize {
        self.op_vocab.len() - 1
    }

    pub fn is_input_op(&self, op: usize) -> bool {
        op < self.num_inputs()
    }

    pub fn is_compute_op(&self, op: usize) -> bool {
        op >= self.num_inputs() && op < self.output_op()
    }

    pub fn compute_ops(&self) -> std::ops::Range<usize> {
        self.num_inputs()..self.output_op()
    }

    pub fn check(&self) -> Result<(), ArchError> {
        let bad = |m: &str| Err(ArchError::InvalidSpec(format!("{}: {m}", self.name)));
        if self.max_nodes < 2 {
            return bad("max_nodes must be at least 2");
        }
        if self.op_vocab.len() < 3 {
            return bad("op_vocab needs at least 3 labels");
        }
        if self.op_vocab.len() <= self.num_inputs() + 1 {
            return bad("op_vocab has no compute operations");
        }
        if let Some(e) = self.max_edges {
            if e + 1 < self.max_nodes {
                return bad("max_edges must be at least max_nodes - 1");
            }
        }
        if self.kind == SpaceKind::DartsCell && self.max_nodes != 11 {
            return bad("darts cells have exactly 11 nodes");
        }
        if self.kind == SpaceKind::EdgeOp && self.max_nodes != 8 {
            return bad("edge-op cells have 8 nodes after transformation");
        }
        Ok(())
    }

    /// Parses a TOML spec document and checks its invariants.
    pub fn from_toml(text: &str) -> Result<Self, ArchError> {
        let spec: Self = toml::from_str(text).map_err(|e| ArchError::InvalidSpec(e.to_string()))?;
        spec.check()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_pass_checks() {
        for s in [
            SearchSpaceSpec::nasbench101(),
            SearchSpaceSpec::nasbench201(),
            SearchSpaceSpec::darts(),
            SearchSpaceSpec::synthetic(),
        ] {
            s.check().unwrap();
        }
        assert_eq!(SearchSpaceSpec::nasbench101().num_ops(), 5);
        assert_eq!(SearchSpaceSpec::darts().num_ops(), 11);
    }

    #[test]
    fn toml_round_trip() {
        let s = SearchSpaceSpec::synthetic();
        let back = SearchSpaceSpec::from_toml(&s.to_toml()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SearchSpaceSpec::synthetic();
        s.max_nodes = 1;
        assert!(s.check().is_err());
        let mut s = SearchSpaceSpec::synthetic();
        s.op_vocab.truncate(2);
        assert!(s.check().is_err());
        let mut s = SearchSpaceSpec::synthetic();
        s.max_edges = Some(2);
        assert!(s.check().is_err());
        assert!(SearchSpaceSpec::from_toml("name = 3").is_err());
    }
}
