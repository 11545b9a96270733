use thiserror::Error;

use super::{validate, Instance, ValidationReport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed instance document at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("instance violates invariants:\n{0}")]
    Invalid(ValidationReport),
}

/// Parses and validates an instance document.
pub fn load_instance(document: &[u8]) -> Result<Instance, ModelError> {
    let de = &mut serde_json::Deserializer::from_slice(document);
    let instance: Instance = serde_path_to_error::deserialize(de).map_err(|e| ModelError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let report = validate(&instance);
    if report.is_empty() {
        Ok(instance)
    } else {
        Err(ModelError::Invalid(report))
    }
}

pub fn save_instance(instance: &Instance) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(instance).expect("instance serialization is infallible");
    out.push(b'\n');
    out
}
