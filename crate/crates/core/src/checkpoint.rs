//! Versioned JSON checkpoints: a list of named tensors with their shapes.
//!
//! Values are stored as `f64` regardless of the in-memory scalar type; JSON
//! numbers round-trip `f64` exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{ParamGroup, Tensor};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub label: String,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION,
            label: label.into(),
            tensors: Vec::new(),
        }
    }

    pub fn push<T: Scalar>(&mut self, name: impl Into<String>, t: &Tensor<T>) {
        self.tensors.push(NamedTensor {
            name: name.into(),
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|v| v.as_f64()).collect(),
        });
    }

    pub fn push_vec<T: Scalar>(&mut self, name: impl Into<String>, v: &[T]) {
        self.tensors.push(NamedTensor {
            name: name.into(),
            shape: vec![v.len()],
            data: v.iter().map(|v| v.as_f64()).collect(),
        });
    }

    /// Stores every tensor of `group` as `prefix.<index>`.
    pub fn push_group<T: Scalar, P: ParamGroup<T>>(&mut self, prefix: &str, group: &P) {
        for (i, t) in group.tensors().into_iter().enumerate() {
            self.push(format!("{prefix}.{i}"), t);
        }
    }

    pub fn get(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))
    }

    pub fn get_vec<T: Scalar>(&self, name: &str) -> Result<Vec<T>> {
        Ok(self.get(name)?.data.iter().map(|&v| T::of(v)).collect())
    }

    pub fn get_tensor<T: Scalar>(&self, name: &str) -> Result<Tensor<T>> {
        let t = self.get(name)?;
        Tensor::new(t.shape.clone(), t.data.iter().map(|&v| T::of(v)).collect())
    }

    /// Overwrites the tensors of an already shaped `group`; every shape must
    /// match the stored manifest.
    pub fn load_group<T: Scalar, P: ParamGroup<T>>(&self, prefix: &str, group: &mut P) -> Result<()> {
        for (i, t) in group.tensors_mut().into_iter().enumerate() {
            let name = format!("{prefix}.{i}");
            let stored = self.get(&name)?;
            if stored.shape != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "`{name}` has shape {:?}, model expects {:?}",
                    stored.shape,
                    t.shape()
                )));
            }
            for (d, &s) in t.data_mut().iter_mut().zip(&stored.data) {
                *d = T::of(s);
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {} not supported (expected {FORMAT_VERSION})",
                c.version
            )));
        }
        for t in &c.tensors {
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(Error::Checkpoint(format!("`{}`: shape does not match data length", t.name)));
            }
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::visual_cortex::{self, VisualConfig};

    #[test]
    fn group_round_trip_is_exact() {
        let w: visual_cortex::VisualWeights<f64> = visual_cortex::init(&VisualConfig::default()).unwrap();
        let mut ck = Checkpoint::new("visual");
        ck.push_group("visual", &w);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        let mut w2 = visual_cortex::init(&VisualConfig {
            seed: 99,
            ..VisualConfig::default()
        })
        .unwrap();
        back.load_group("visual", &mut w2).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn rejects_bad_version_and_shape() {
        let mut ck = Checkpoint::new("x");
        ck.push_vec("v", &[1.0f64, 2.0]);
        let mut text = ck.to_json().unwrap();
        text = text.replace("\"version\":1", "\"version\":9");
        assert!(matches!(Checkpoint::from_json(&text), Err(Error::Checkpoint(_))));

        let w: visual_cortex::VisualWeights<f64> = visual_cortex::init(&VisualConfig::default()).unwrap();
        let mut ck = Checkpoint::new("visual");
        ck.push_group("visual", &w);
        let mut small = visual_cortex::init::<f64>(&VisualConfig {
            output_dim: 4,
            ..VisualConfig::default()
        })
        .unwrap();
        assert!(ck.load_group("visual", &mut small).is_err());
        assert!(ck.get("nope").is_err());
    }
}
