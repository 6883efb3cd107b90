use serde::{Deserialize, Serialize};

use crate::depth::TreeDepth;
use crate::error::{Error, Result};

use super::NoiseTree;

const MAGIC: &[u8; 4] = b"CSNT";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

/// Serialized form of a [`NoiseTree<f64>`] with the seed that produced it.
///
/// JSON: `{"depth": k, "sigma": σ, "seed": s, "values": [...]}`.
///
/// Binary (little endian): magic `CSNT`, `u32` version, `u32` depth,
/// `f64` sigma, `u64` seed, then `2^(k+1) - 1` `f64` values in heap order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTreeRecord {
    pub depth: u32,
    pub sigma: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl NoiseTreeRecord {
    pub fn new(tree: &NoiseTree<f64>, seed: u64) -> Self {
        Self {
            depth: tree.depth().get(),
            sigma: tree.sigma(),
            seed,
            values: tree.values().to_vec(),
        }
    }

    pub fn into_tree(self) -> Result<NoiseTree<f64>> {
        NoiseTree::from_parts(TreeDepth::new(self.depth)?, self.sigma, self.values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(s).map_err(|e| Error::Decode(e.to_string()))?;
        rec.check_len()?;
        Ok(rec)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.depth.to_le_bytes());
        out.extend_from_slice(&self.sigma.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Decode(m.to_string());
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(bad("missing noise tree header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(bad("unsupported noise tree version"));
        }
        let depth = u32_at(8);
        TreeDepth::new(depth)?;
        let sigma = f64::from_bits(u64_at(12));
        let seed = u64_at(20);
        let body = &bytes[HEADER_LEN..];
        if !body.len().is_multiple_of(8) {
            return Err(bad("truncated value block"));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let rec = Self {
            depth,
            sigma,
            seed,
            values,
        };
        rec.check_len()?;
        Ok(rec)
    }

    fn check_len(&self) -> Result<()> {
        let expected = TreeDepth::new(self.depth)?.nodes();
        if self.values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: self.values.len(),
            });
        }
        Ok(())
    }
}
