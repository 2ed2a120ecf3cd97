//! Binary checkpoints.
//!
//! Layout (little endian):
//! `magic[8] | version u32 | header_len u64 | header (JSON) | f64 blocks | sha256[32]`.
//! The header lists every network with its spec, optimiser scalars and the
//! lengths of the parameter, first-moment and second-moment blocks that
//! follow in the same order. The trailing digest covers all preceding bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::{NetworkSpec, OptimizerState};
use crate::trainer::Mode;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"TCCKPT\0\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRecord {
    pub name: String,
    pub spec: NetworkSpec,
    pub params: Vec<f64>,
    pub optimizer: OptimizerState<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_digest: String,
    pub mode: Mode,
    /// Completed training iterations.
    pub iteration: u64,
    pub master_seed: u64,
    pub networks: Vec<NetworkRecord>,
}

impl Checkpoint {
    pub fn network(&self, name: &str) -> Option<&NetworkRecord> {
        self.networks.iter().find(|n| n.name == name)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    config_digest: String,
    mode: Mode,
    iteration: u64,
    master_seed: u64,
    networks: Vec<NetworkHeader>,
}

#[derive(Serialize, Deserialize)]
struct NetworkHeader {
    name: String,
    spec: NetworkSpec,
    param_len: u64,
    step_count: u64,
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    eps_hat: f64,
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = Header {
        config_digest: ckpt.config_digest.clone(),
        mode: ckpt.mode,
        iteration: ckpt.iteration,
        master_seed: ckpt.master_seed,
        networks: ckpt
            .networks
            .iter()
            .map(|n| NetworkHeader {
                name: n.name.clone(),
                spec: n.spec.clone(),
                param_len: n.params.len() as u64,
                step_count: n.optimizer.step_count,
                learning_rate: n.optimizer.learning_rate,
                beta1: n.optimizer.beta1,
                beta2: n.optimizer.beta2,
                eps_hat: n.optimizer.eps_hat,
            })
            .collect(),
    };
    for n in &ckpt.networks {
        let len = n.params.len();
        if n.optimizer.first_moment.len() != len || n.optimizer.second_moment.len() != len {
            return Err(Error::dim("optimizer moments", len, n.optimizer.first_moment.len()));
        }
        if len != n.spec.param_count() {
            return Err(Error::dim("checkpoint parameters", n.spec.param_count(), len));
        }
    }
    let header = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for n in &ckpt.networks {
        for block in [&n.params, &n.optimizer.first_moment, &n.optimizer.second_moment] {
            for v in block.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated: need {n} bytes at offset {}, file has {}", self.pos, self.bytes.len()))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("block length overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let header_len = r.u64()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    let mut networks = Vec::with_capacity(header.networks.len());
    for h in header.networks {
        let len = h.param_len as usize;
        if len != h.spec.param_count() {
            return Err(Error::Checkpoint(format!(
                "network `{}` declares {len} parameters, its spec needs {}",
                h.name,
                h.spec.param_count()
            )));
        }
        let params = r.f64s(len)?;
        let first_moment = r.f64s(len)?;
        let second_moment = r.f64s(len)?;
        networks.push(NetworkRecord {
            name: h.name,
            spec: h.spec,
            params,
            optimizer: OptimizerState {
                first_moment,
                second_moment,
                step_count: h.step_count,
                learning_rate: h.learning_rate,
                beta1: h.beta1,
                beta2: h.beta2,
                eps_hat: h.eps_hat,
            },
        });
    }
    let body_end = r.pos;
    let stored = r.take(32)?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    if Sha256::digest(&bytes[..body_end]).as_slice() != stored {
        return Err(Error::Checkpoint("content digest mismatch (file corrupted)".into()));
    }
    Ok(Checkpoint {
        config_digest: header.config_digest,
        mode: header.mode,
        iteration: header.iteration,
        master_seed: header.master_seed,
        networks,
    })
}

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial checkpoint.
pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ckpt)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    decode_checkpoint(&bytes)
}
