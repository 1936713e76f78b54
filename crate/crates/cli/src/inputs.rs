//! Channel URIs and state-set files.

use std::path::Path;

use serde::Deserialize;
use supaq_core::channels::{self, load_channel, KrausChannel};
use supaq_core::linalg::{c, CMatrix};
use supaq_core::qstate::{bloch_to_density, BlochVector, DensityMatrix};
use supaq_core::{Error, Result};

/// A malformed URI is a usage problem; everything else is a domain error.
#[derive(Debug)]
pub enum InputError {
    Usage(String),
    Domain(Error),
}

impl From<Error> for InputError {
    fn from(e: Error) -> Self {
        Self::Domain(e)
    }
}

/// `builtin:identity:d`, `builtin:depolarizing:p[:d]`,
/// `builtin:erasure:eps[:d]` or `file:<path>`.
pub fn parse_channel_uri(uri: &str) -> std::result::Result<KrausChannel, InputError> {
    if let Some(path) = uri.strip_prefix("file:") {
        return Ok(load_channel(path)?);
    }
    let parts: Vec<&str> = uri.split(':').collect();
    let bad = || InputError::Usage(format!("unrecognised channel URI '{uri}'"));
    if parts.len() < 3 || parts.len() > 4 || parts[0] != "builtin" {
        return Err(bad());
    }
    let dim = |s: Option<&&str>| -> std::result::Result<usize, InputError> {
        match s {
            None => Ok(2),
            Some(s) => s.parse().ok().filter(|d: &usize| *d >= 1).ok_or_else(bad),
        }
    };
    let num = |s: &str| -> std::result::Result<f64, InputError> { s.parse().map_err(|_| bad()) };
    match parts[1] {
        "identity" if parts.len() == 3 => Ok(channels::identity(dim(parts.get(2))?)),
        "depolarizing" => Ok(channels::depolarizing(num(parts[2])?, dim(parts.get(3))?)?),
        "erasure" => Ok(channels::erasure(num(parts[2])?, dim(parts.get(3))?)?),
        _ => Err(bad()),
    }
}

/// ```json
/// {"bloch": [[0, 0, 0.5], [0.3, 0, 0]]}
/// {"dim": 2, "states": [[[0.5,0],[0,0],[0,0],[0.5,0]]], "weights": [1]}
/// ```
/// Matrices are row-major lists of `[re, im]`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSetFile {
    dim: Option<usize>,
    states: Option<Vec<Vec<[f64; 2]>>>,
    bloch: Option<Vec<[f64; 3]>>,
    weights: Option<Vec<f64>>,
}

pub struct StateSet {
    pub states: Vec<DensityMatrix>,
    pub weights: Option<Vec<f64>>,
}

pub fn load_states(path: &Path) -> Result<StateSet> {
    let text = std::fs::read_to_string(path)?;
    parse_states(&text)
}

pub fn parse_states(text: &str) -> Result<StateSet> {
    let file: StateSetFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let states = match (file.states, file.bloch) {
        (Some(mats), None) => {
            let d = file
                .dim
                .ok_or_else(|| Error::Parse("'states' needs 'dim'".into()))?;
            mats.into_iter()
                .map(|m| {
                    if m.len() != d * d {
                        return Err(Error::Parse(format!("state has {} entries, expected {}", m.len(), d * d)));
                    }
                    DensityMatrix::new(CMatrix::from_row_iterator(d, d, m.iter().map(|[re, im]| c(*re, *im))))
                })
                .collect::<Result<Vec<_>>>()?
        }
        (None, Some(vs)) => vs
            .into_iter()
            .map(|v| bloch_to_density(BlochVector::from_array(v)))
            .collect::<Result<Vec<_>>>()?,
        _ => return Err(Error::Parse("give exactly one of 'states' or 'bloch'".into())),
    };
    if states.is_empty() {
        return Err(Error::Empty("state set"));
    }
    if let Some(w) = &file.weights {
        if w.len() != states.len() {
            return Err(Error::Parse(format!("{} weights for {} states", w.len(), states.len())));
        }
    }
    Ok(StateSet {
        states,
        weights: file.weights,
    })
}
