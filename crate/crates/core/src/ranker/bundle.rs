//! Single-file model bundle: magic `CLRKMDL`, `u32` version, `u64` payload
//! length, then a JSON payload with the ensemble and the extractor state.
//! Floats are written in shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::features::ExtractorState;
use super::gbrt::GbrtModel;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const BUNDLE_MAGIC: &[u8; 7] = b"CLRKMDL";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ModelBundle<T> {
    pub model: GbrtModel<T>,
    pub extractors: ExtractorState<T>,
}

impl<T> ModelBundle<T>
where
    T: Real + Serialize + for<'de> Deserialize<'de>,
{
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = serde_json::to_vec(self)
            .map_err(|e| Error::Format(format!("cannot encode model: {e}")))?;
        let mut out = Vec::with_capacity(payload.len() + 19);
        out.extend_from_slice(BUNDLE_MAGIC);
        out.extend_from_slice(&BUNDLE_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = BUNDLE_MAGIC.len() + 4 + 8;
        if bytes.len() < header || &bytes[..7] != BUNDLE_MAGIC {
            return Err(Error::Format("not a model bundle (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
        if version != BUNDLE_VERSION {
            return Err(Error::Format(format!(
                "unsupported model bundle version {version}"
            )));
        }
        let len = u64::from_le_bytes(bytes[11..19].try_into().unwrap());
        if (bytes.len() - header) as u64 != len {
            return Err(Error::Format(format!(
                "payload length {} does not match header ({len})",
                bytes.len() - header
            )));
        }
        let bundle: ModelBundle<T> = serde_json::from_slice(&bytes[header..])
            .map_err(|e| Error::Format(format!("corrupt model payload: {e}")))?;
        bundle.check()?;
        Ok(bundle)
    }

    /// Internal consistency between trees, manifest and extractor state.
    pub fn check(&self) -> Result<()> {
        if !self.model.is_well_formed() {
            return Err(Error::Format(
                "model trees reference invalid nodes or features".into(),
            ));
        }
        let manifest = self.extractors.manifest()?;
        if manifest != self.model.manifest {
            return Err(Error::Format(
                "model manifest does not match its extractor state".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
