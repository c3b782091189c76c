//! JSON serialization of reduced models.

use std::path::Path;

use crate::error::Result;
use crate::reduction::coefficients::ReducedModel;

pub fn reduced_to_string(model: &ReducedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

pub fn reduced_from_str(text: &str) -> Result<ReducedModel> {
    let model: ReducedModel = serde_json::from_str(text)?;
    if let Some(p) = &model.pairings {
        p.validate()?;
    }
    if model.b.len() != 2 * model.truncation + 1 || model.b_prime.len() != model.b.len() {
        return Err(crate::error::Error::Format(
            "coefficient list length does not match the truncation".into(),
        ));
    }
    Ok(model)
}

pub fn write_reduced(path: impl AsRef<Path>, model: &ReducedModel) -> Result<()> {
    std::fs::write(path, reduced_to_string(model)?)?;
    Ok(())
}

pub fn read_reduced(path: impl AsRef<Path>) -> Result<ReducedModel> {
    reduced_from_str(&std::fs::read_to_string(path)?)
}
