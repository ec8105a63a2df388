use std::collections::BTreeMap;

use super::{EncoderConfig, Variant, Vgae, VgaeError};
use crate::archspace::SearchSpaceSpec;
use crate::tensor::{BatchNormState, Checkpoint, ParamStore, Tensor};

const FORMAT: &str = "vgae";

fn bad(msg: impl Into<String>) -> VgaeError {
    VgaeError::Checkpoint(msg.into())
}

impl Vgae {
    /// Parameters plus batch-norm running statistics; `extra` metadata is
    /// merged in (model keys win).
    pub fn to_checkpoint(&self, extra: &BTreeMap<String, String>) -> Checkpoint {
        let mut metadata = extra.clone();
        metadata.insert("format".into(), FORMAT.into());
        metadata.insert("variant".into(), serde_json::to_string(&self.variant).expect("serialisable"));
        metadata.insert("encoder".into(), serde_json::to_string(&self.encoder).expect("serialisable"));
        metadata.insert("spec".into(), self.spec.to_toml());
        let mut tensors: Vec<(String, Tensor)> = self.params.iter().map(|(k, t)| (k.to_string(), t.clone())).collect();
        for (k, st) in self.bn.iter().enumerate() {
            tensors.push((format!("bn_state.{k}.mean"), Tensor::vector(st.running_mean.clone())));
            tensors.push((format!("bn_state.{k}.var"), Tensor::vector(st.running_var.clone())));
        }
        Checkpoint { metadata, tensors }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, VgaeError> {
        if ck.metadata.get("format").map(String::as_str) != Some(FORMAT) {
            return Err(bad("missing format=vgae"));
        }
        let meta = |k: &str| ck.metadata.get(k).ok_or_else(|| bad(format!("missing metadata {k}")));
        let variant: Variant = serde_json::from_str(meta("variant")?).map_err(|e| bad(e.to_string()))?;
        let encoder: EncoderConfig = serde_json::from_str(meta("encoder")?).map_err(|e| bad(e.to_string()))?;
        let spec = SearchSpaceSpec::from_toml(meta("spec")?)?;
        let mut model = Vgae::new(&spec, &encoder, variant, 0)?;
        let mut params = ParamStore::new();
        for (name, template) in model.params.iter() {
            let t = ck.tensor(name).ok_or_else(|| bad(format!("missing tensor {name}")))?;
            if t.shape() != template.shape() {
                return Err(bad(format!("tensor {name} has shape {:?}, expected {:?}", t.shape(), template.shape())));
            }
            params.insert(name, t.clone())?;
        }
        model.params = params;
        for (k, st) in model.bn.iter_mut().enumerate() {
            let width = st.running_mean.len();
            let get = |what: &str| -> Result<Vec<f64>, VgaeError> {
                let t = ck
                    .tensor(&format!("bn_state.{k}.{what}"))
                    .ok_or_else(|| bad(format!("missing bn_state.{k}.{what}")))?;
                if t.len() != width {
                    return Err(bad(format!("bn_state.{k}.{what} has {} entries, expected {width}", t.len())));
                }
                Ok(t.data().to_vec())
            };
            *st = BatchNormState { running_mean: get("mean")?, running_var: get("var")? };
        }
        Ok(model)
    }
}
