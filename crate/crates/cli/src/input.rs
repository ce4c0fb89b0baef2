//! Reading files and flag values.

use std::fs;
use std::path::Path;

use dikernel::game::KernelInput;
use dikernel::kernel::analytic::catalog;
use dikernel::transform::discretize_analytic;
use dikernel::{IntervalPartition, Kernel, WeightedDeGrootModel};
use serde::de::DeserializeOwned;
use serde::Deserialize;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("malformed JSON in {}: {e}", path.display()))
}

/// `uniform:<n>` or comma-separated breakpoints such as `0,0.25,0.75,1`.
pub fn parse_partition(text: &str) -> Result<IntervalPartition, String> {
    if let Some(n) = text.strip_prefix("uniform:") {
        let n: usize = n.trim().parse().map_err(|_| format!("bad cell count in '{text}'"))?;
        return IntervalPartition::uniform(n).map_err(|e| e.to_string());
    }
    IntervalPartition::new(parse_list(text)?).map_err(|e| e.to_string())
}

/// Comma-separated numbers, optionally in brackets.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("bad number '{}'", s.trim())))
        .collect()
}

/// Kernel JSON, or `{"catalog": name}` block-averaged onto `uniform(resolution)`.
pub fn read_kernel(path: &Path, resolution: usize) -> Result<Kernel, String> {
    match read_json::<KernelInput>(path)? {
        KernelInput::Explicit(k) => Ok(k),
        KernelInput::Catalog { catalog: name } => {
            let analytic = catalog(&name).map_err(|e| e.to_string())?;
            let grid = IntervalPartition::uniform(resolution).map_err(|e| e.to_string())?;
            Ok(discretize_analytic(analytic.as_ref(), &grid).into())
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelInput {
    Model(WeightedDeGrootModel),
    Matrix(Vec<Vec<f64>>),
}

/// A weighted model object, or a bare matrix taking `weights` (uniform when absent).
pub fn read_model(path: &Path, weights: Option<Vec<f64>>) -> Result<WeightedDeGrootModel, String> {
    match read_json::<ModelInput>(path)? {
        ModelInput::Model(m) => m.validate().map(|_| m).map_err(|e| e.to_string()),
        ModelInput::Matrix(m) => match weights {
            Some(w) => WeightedDeGrootModel::new(m, w, None),
            None => WeightedDeGrootModel::uniform(m, None),
        }
        .map_err(|e| e.to_string()),
    }
}
