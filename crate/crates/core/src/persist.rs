//! Versioned JSON model files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classifiers::Model;
use crate::density::WeightedEnsembleModel;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "firealarm-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub trait Persist: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

impl Persist for Model {
    const KIND: &'static str = "baseline";
}

impl Persist for WeightedEnsembleModel {
    const KIND: &'static str = "weighted_ensemble";
}

#[derive(Serialize)]
struct EnvelopeRef<'a, T> {
    format: &'a str,
    version: u32,
    kind: &'a str,
    model: &'a T,
}

#[derive(Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    kind: String,
    model: T,
}

pub fn to_json<T: Persist>(model: &T) -> Result<String> {
    serde_json::to_string(&EnvelopeRef {
        format: MODEL_FORMAT,
        version: MODEL_FORMAT_VERSION,
        kind: T::KIND,
        model,
    })
    .map_err(|e| Error::Serialization(e.to_string()))
}

pub fn from_json<T: Persist>(text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
    if env.format != MODEL_FORMAT {
        return Err(Error::Serialization(format!("unknown format `{}`", env.format)));
    }
    if env.version != MODEL_FORMAT_VERSION {
        return Err(Error::Serialization(format!("unsupported version {}", env.version)));
    }
    if env.kind != T::KIND {
        return Err(Error::Serialization(format!("expected a {} model, found {}", T::KIND, env.kind)));
    }
    Ok(env.model)
}

pub fn save<T: Persist>(path: impl AsRef<Path>, model: &T) -> Result<()> {
    std::fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load<T: Persist>(path: impl AsRef<Path>) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}
