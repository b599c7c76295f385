//! Binary checkpoint format (little-endian):
//!
//! ```text
//! magic        8 bytes   "BGUARDCK"
//! version      u32       1
//! config_hash  u64
//! seed         u64
//! episode      u64
//! then for the actor and then the critic:
//!   layer_count u32
//!   per layer:  weight (rows u32, cols u32, rows·cols f64 row-major)
//!               bias   (rows u32 = 1, cols u32, cols f64)
//! ```
//!
//! Floats are stored as raw bit patterns, so a round trip is bit-exact.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::environment::{NUM_ACTIONS, OBS_DIM};
use crate::error::{Error, Result};

use super::mlp::{Dense, Mlp};
use super::ActorCritic;

pub const MAGIC: &[u8; 8] = b"BGUARDCK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ActorCritic,
    pub config_hash: u64,
    pub seed: u64,
    pub episode: u64,
}

impl Checkpoint {
    /// Warning text when the checkpoint was produced under another config.
    pub fn config_mismatch(&self, expected_hash: u64) -> Option<String> {
        (self.config_hash != expected_hash).then(|| {
            format!(
                "checkpoint config hash {:016x} differs from current config {:016x}",
                self.config_hash, expected_hash
            )
        })
    }
}

pub fn encode(model: &ActorCritic, config_hash: u64, seed: u64, episode: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 8 * (model.actor.num_params() + model.critic.num_params()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&config_hash.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&episode.to_le_bytes());
    for net in [&model.actor, &model.critic] {
        out.extend_from_slice(&(net.layers.len() as u32).to_le_bytes());
        for layer in &net.layers {
            write_matrix(
                &mut out,
                layer.weight.nrows(),
                layer.weight.ncols(),
                layer.weight.iter(),
            );
            write_matrix(&mut out, 1, layer.bias.len(), layer.bias.iter());
        }
    }
    out
}

fn write_matrix<'a>(out: &mut Vec<u8>, rows: usize, cols: usize, values: impl Iterator<Item = &'a f64>) {
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_bits().to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn matrix(&mut self) -> Result<(usize, usize, Vec<f64>)> {
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some_and(|b| b <= self.bytes.len()))
            .ok_or_else(|| Error::Checkpoint(format!("implausible matrix shape {rows}x{cols}")))?;
        let raw = self.take(n * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Ok((rows, cols, values))
    }
}

fn read_network(r: &mut Reader<'_>, outputs: usize, name: &str) -> Result<Mlp> {
    let count = r.u32()? as usize;
    if count == 0 || count > 64 {
        return Err(Error::Checkpoint(format!("{name}: implausible layer count {count}")));
    }
    let mut layers = Vec::with_capacity(count);
    let mut expected_in = OBS_DIM;
    for i in 0..count {
        let (rows, cols, w) = r.matrix()?;
        if rows != expected_in || cols == 0 {
            return Err(Error::Checkpoint(format!(
                "{name} layer {i}: weight shape {rows}x{cols}, expected {expected_in} rows"
            )));
        }
        let (brows, bcols, b) = r.matrix()?;
        if brows != 1 || bcols != cols {
            return Err(Error::Checkpoint(format!(
                "{name} layer {i}: bias shape {brows}x{bcols}, expected 1x{cols}"
            )));
        }
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint(format!("{name} layer {i}: non-finite parameters")));
        }
        layers.push(Dense {
            weight: Array2::from_shape_vec((rows, cols), w).expect("shape checked"),
            bias: Array1::from_vec(b),
        });
        expected_in = cols;
    }
    if expected_in != outputs {
        return Err(Error::Checkpoint(format!(
            "{name}: {expected_in} outputs, expected {outputs}"
        )));
    }
    Ok(Mlp { layers })
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let config_hash = r.u64()?;
    let seed = r.u64()?;
    let episode = r.u64()?;
    let actor = read_network(&mut r, NUM_ACTIONS, "actor")?;
    let critic = read_network(&mut r, 1, "critic")?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Checkpoint {
        model: ActorCritic { actor, critic },
        config_hash,
        seed,
        episode,
    })
}

pub fn save_checkpoint(path: &Path, model: &ActorCritic, config_hash: u64, seed: u64, episode: u64) -> Result<()> {
    fs::write(path, encode(model, config_hash, seed, episode)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> ActorCritic {
        ActorCritic::new(&[16, 8], &mut ChaCha8Rng::seed_from_u64(1))
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ckpt");
        save_checkpoint(&p, &m, 0xDEAD_BEEF, 9, 42).unwrap();
        let c = load_checkpoint(&p).unwrap();
        assert_eq!(c.model, m);
        assert_eq!((c.config_hash, c.seed, c.episode), (0xDEAD_BEEF, 9, 42));
        let obs = [0.3, 0.1, 0.7, 0.2, 0.5, 0.6, 0.9];
        let p0 = m.policy(&obs).unwrap();
        let p1 = c.model.policy(&obs).unwrap();
        for (a, b) in p0.iter().zip(p1) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(m.value(&obs).unwrap().to_bits(), c.model.value(&obs).unwrap().to_bits());
    }

    #[test]
    fn tampered_shape_rejected() {
        let mut bytes = encode(&model(), 1, 0, 0);
        // First weight header sits right after magic, version, hash, seed, episode and layer count.
        let rows_at = 8 + 4 + 8 + 8 + 8 + 4;
        bytes[rows_at] = 6;
        assert!(matches!(decode(&bytes), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn bad_magic_version_and_truncation_rejected() {
        let good = encode(&model(), 1, 0, 0);
        let mut b = good.clone();
        b[0] = b'X';
        assert!(decode(&b).is_err());
        let mut b = good.clone();
        b[8] = 9;
        assert!(decode(&b).is_err());
        assert!(decode(&good[..good.len() - 3]).is_err());
        let mut b = good;
        b.push(0);
        assert!(decode(&b).is_err());
    }

    #[test]
    fn config_mismatch_is_reported() {
        let c = decode(&encode(&model(), 7, 0, 0)).unwrap();
        assert!(c.config_mismatch(7).is_none());
        assert!(c.config_mismatch(8).unwrap().contains("differs"));
    }
}
