//! Binary checkpoint format.
//!
//! ```text
//! bytes 0..12   magic "LRCLAB-MLP\0\0"
//! bytes 12..16  version, u32 LE (currently 1)
//! u64 LE        input_dim
//! u64 LE        classes
//! u64 LE        hidden layer count H
//! H x u64 LE    hidden widths
//! P x f64 LE    flat parameters, P = param_count(config)
//! ```

use std::fs;
use std::path::Path;

use super::{MlpConfig, Network};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 12] = b"LRCLAB-MLP\0\0";
pub const CHECKPOINT_VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format(format!(
                "checkpoint truncated at byte {} (needed {n} more)",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::Format(format!("integer {v} does not fit usize")))
    }
}

impl Network {
    pub fn to_bytes(&self) -> Vec<u8> {
        let cfg = self.config();
        let mut out = Vec::with_capacity(16 + 8 * (3 + cfg.hidden.len() + self.param_count()));
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(cfg.input_dim as u64).to_le_bytes());
        out.extend_from_slice(&(cfg.classes as u64).to_le_bytes());
        out.extend_from_slice(&(cfg.hidden.len() as u64).to_le_bytes());
        for &h in &cfg.hidden {
            out.extend_from_slice(&(h as u64).to_le_bytes());
        }
        for &w in self.weights() {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(12)? != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a network checkpoint (bad magic)".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let input_dim = r.u64()?;
        let classes = r.u64()?;
        let layers = r.u64()?;
        if layers > 1024 {
            return Err(Error::Format(format!("implausible hidden layer count {layers}")));
        }
        let hidden = (0..layers).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let config = MlpConfig::new(input_dim, hidden, classes)
            .map_err(|e| Error::Format(format!("bad checkpoint config: {e}")))?;
        let count = config.param_count();
        let remaining = bytes.len() - r.pos;
        if remaining != count * 8 {
            return Err(Error::Format(format!(
                "checkpoint carries {remaining} parameter bytes, config needs {}",
                count * 8
            )));
        }
        let weights = r
            .take(count * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Network::from_weights(config, weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        Network::from_bytes(&fs::read(path)?)
    }
}
