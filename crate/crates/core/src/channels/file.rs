//! JSON channel-definition files.
//!
//! ```json
//! {
//!   "name": "identity",
//!   "dim_in": 2,
//!   "dim_out": 2,
//!   "kraus": [[[1, 0], [0, 0], [0, 0], [1, 0]]]
//! }
//! ```
//!
//! Each Kraus matrix is a row-major list of `[re, im]` pairs with
//! `dim_out · dim_in` entries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub name: String,
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

impl ChannelSpecFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_channel(name: impl Into<String>, ch: &KrausChannel) -> Self {
        Self {
            name: name.into(),
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus: ch
                .kraus()
                .iter()
                .map(|k| {
                    (0..k.nrows())
                        .flat_map(|r| (0..k.ncols()).map(move |col| (r, col)))
                        .map(|(r, col)| [k[(r, col)].re, k[(r, col)].im])
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("channel spec serialises")
    }

    /// Builds the channel, enforcing the completeness relation.
    pub fn to_channel(&self) -> Result<KrausChannel> {
        let want = self.dim_in * self.dim_out;
        let ops = self
            .kraus
            .iter()
            .enumerate()
            .map(|(k, entries)| {
                if entries.len() != want {
                    return Err(Error::MalformedChannel(format!(
                        "Kraus matrix {k} has {} entries, expected {want}",
                        entries.len()
                    )));
                }
                if entries.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::MalformedChannel(format!(
                        "Kraus matrix {k} has a non-finite entry"
                    )));
                }
                Ok(CMatrix::from_row_iterator(
                    self.dim_out,
                    self.dim_in,
                    entries.iter().map(|[re, im]| c(*re, *im)),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(self.dim_in, self.dim_out, ops)
    }
}

/// Reads and validates a channel-definition file.
pub fn load_channel(path: impl AsRef<Path>) -> Result<KrausChannel> {
    let text = std::fs::read_to_string(path)?;
    ChannelSpecFile::parse(&text)?.to_channel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::depolarizing;
    use crate::qstate::DensityMatrix;
    use crate::random;

    #[test]
    fn identity_file() {
        let text = r#"{"name":"id","dim_in":2,"dim_out":2,"kraus":[[[1,0],[0,0],[0,0],[1.0e0,0]]]}"#;
        let ch = ChannelSpecFile::parse(text).unwrap().to_channel().unwrap();
        let rho = random::mixed_state(&mut random::stream(1, 1), 2);
        assert!(ch.apply(&rho).unwrap().distance_max(&rho) < 1e-15);
    }

    #[test]
    fn incomplete_file_reports_residual() {
        let text = r#"{"name":"bad","dim_in":2,"dim_out":2,"kraus":[[[0.5,0],[0,0],[0,0],[1,0]]]}"#;
        match ChannelSpecFile::parse(text).unwrap().to_channel() {
            Err(Error::InvalidChannel { residual, .. }) => assert!((residual - 0.75).abs() < 1e-12),
            other => panic!("expected invalid channel, got {other:?}"),
        }
    }

    #[test]
    fn depolarizing_file_matches_builtin() {
        let builtin = depolarizing(0.25, 2).unwrap();
        let spec = ChannelSpecFile::from_channel("depol", &builtin);
        assert_eq!(spec.kraus.len(), 4);
        let loaded = ChannelSpecFile::parse(&spec.to_json()).unwrap().to_channel().unwrap();
        let mut rng = random::stream(1, 2);
        for _ in 0..10 {
            let rho = random::mixed_state(&mut rng, 2);
            let a = builtin.apply(&rho).unwrap();
            let b = loaded.apply(&rho).unwrap();
            assert!(a.distance_max(&b) < 1e-15);
        }
        let _ = DensityMatrix::maximally_mixed(2);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(ChannelSpecFile::parse("{"), Err(Error::Parse(_))));
        let short = r#"{"name":"x","dim_in":2,"dim_out":2,"kraus":[[[1,0]]]}"#;
        assert!(matches!(
            ChannelSpecFile::parse(short).unwrap().to_channel(),
            Err(Error::MalformedChannel(_))
        ));
        let extra = r#"{"name":"x","dim_in":1,"dim_out":1,"kraus":[[[1,0]]],"q":1}"#;
        assert!(ChannelSpecFile::parse(extra).is_err());
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("id.chan");
        std::fs::write(&path, ChannelSpecFile::from_channel("id", &crate::channels::identity(3)).to_json()).unwrap();
        let ch = load_channel(&path).unwrap();
        assert_eq!((ch.dim_in(), ch.dim_out()), (3, 3));
        assert!(load_channel(dir.path().join("missing.chan")).is_err());
    }
}
