use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NetworkParams, NetworkSpec};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::uncertainty::PrecisionLink;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

/// A network together with what is needed to interpret its predictions.
///
/// Serialised as one JSON object with `spec`, `weights` (nested arrays,
/// `K_i × K_{i-1}`), `biases`, the optional `precision` link and the number
/// of optimizer steps taken so far. Floats are written in shortest
/// round-trip form, so a reload reproduces every parameter bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub schema_version: u32,
    pub spec: NetworkSpec,
    #[serde(flatten)]
    pub params: NetworkParams,
    #[serde(default)]
    pub precision: Option<PrecisionLink>,
    #[serde(default)]
    pub training_steps: u64,
}

impl Network {
    pub fn new(spec: NetworkSpec, params: NetworkParams) -> Result<Self> {
        params.check(&spec)?;
        Ok(Network {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            spec,
            params,
            precision: None,
            training_steps: 0,
        })
    }

    pub fn init(spec: NetworkSpec, rng: &mut RngStream) -> Self {
        let params = NetworkParams::init(&spec, rng);
        Network::new(spec, params).expect("init produces consistent shapes")
    }

    pub fn is_trained(&self) -> bool {
        self.training_steps > 0
    }

    /// Model precision from the stored link, if any.
    pub fn tau(&self) -> Option<f64> {
        self.precision.as_ref().map(|p| p.tau)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let net: Network = serde_json::from_str(text)?;
        if net.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "checkpoint schema version {} is not supported",
                net.schema_version
            )));
        }
        net.params.check(&net.spec)?;
        if !net.params.is_finite() {
            return Err(Error::Format("checkpoint holds non-finite parameters".into()));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LossKind};

    #[test]
    fn json_round_trip_is_exact() {
        let spec = NetworkSpec::uniform(vec![3, 8, 2], Activation::Tanh, 0.9, LossKind::Euclidean, 1e-4).unwrap();
        let mut net = Network::init(spec, &mut RngStream::new(77, 0));
        net.precision = Some(PrecisionLink::from_weight_decay(0.9, 1e-2, 100, 1e-4).unwrap());
        net.training_steps = 12;
        let text = net.to_json().unwrap();
        let back = Network::from_json(&text).unwrap();
        assert_eq!(back, net);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("spec").is_some() && v.get("weights").is_some() && v.get("biases").is_some());
    }

    #[test]
    fn inconsistent_checkpoint_is_rejected() {
        let spec = NetworkSpec::uniform(vec![3, 2], Activation::Relu, 1.0, LossKind::Euclidean, 0.0).unwrap();
        let net = Network::init(spec, &mut RngStream::new(1, 0));
        let mut v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        v["biases"] = serde_json::json!([[0.0]]);
        assert!(Network::from_json(&v.to_string()).is_err());
    }
}
