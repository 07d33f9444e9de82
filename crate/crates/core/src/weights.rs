//! Named tensor container with a bit-exact binary serialization.
//!
//! Layout: magic `VTNW`, little-endian `u32` format version (currently 1),
//! little-endian `u64` manifest byte length, a UTF-8 manifest, then the raw
//! tensor payloads as little-endian 32-bit floats, row-major, in manifest
//! order. The manifest carries one `config_hash=<16 hex>` line followed by
//! one line per tensor: `tensor <name> <d0>x<d1>x... <payload offset>`.
//! Offsets are relative to the start of the payload region.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const WEIGHT_MAGIC: [u8; 4] = *b"VTNW";
pub const WEIGHT_FORMAT_VERSION: u32 = 1;

/// Named tensors plus the hash of the config they were created for.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightStore {
    tensors: BTreeMap<String, Tensor>,
    config_hash: u64,
}

impl WeightStore {
    pub fn new(config_hash: u64) -> Self {
        Self { tensors: BTreeMap::new(), config_hash }
    }

    pub fn config_hash(&self) -> u64 {
        self.config_hash
    }

    pub fn format_version(&self) -> u32 {
        WEIGHT_FORMAT_VERSION
    }

    /// Inserts or replaces a tensor. Names must be single tokens.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(Error::Weight(format!("invalid tensor name `{name}`")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(|k| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars across all tensors.
    pub fn param_count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// Serializes to the container format. Deterministic: tensors are laid
    /// out in name order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut manifest = format!("config_hash={:016x}\n", self.config_hash);
        let mut offset = 0usize;
        for (name, tensor) in &self.tensors {
            let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
            manifest.push_str(&format!("tensor {name} {} {offset}\n", dims.join("x")));
            offset += tensor.len() * 4;
        }

        let mut out = Vec::with_capacity(16 + manifest.len() + offset);
        out.extend_from_slice(&WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(manifest.as_bytes());
        for tensor in self.tensors.values() {
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 {
            return Err(Error::Parse("container shorter than header".into()));
        }
        if bytes[0..4] != WEIGHT_MAGIC {
            return Err(Error::Format("bad magic, not a weight container".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != WEIGHT_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let payload_start = 16usize
            .checked_add(manifest_len)
            .ok_or_else(|| Error::Parse("manifest length overflows".into()))?;
        if payload_start > bytes.len() {
            return Err(Error::Parse("manifest extends past end of file".into()));
        }
        let manifest = core::str::from_utf8(&bytes[16..payload_start])
            .map_err(|_| Error::Parse("manifest is not UTF-8".into()))?;
        let payload = &bytes[payload_start..];

        let mut config_hash = 0u64;
        let mut entries: Vec<(String, Vec<usize>, usize)> = Vec::new();
        for line in manifest.lines() {
            if line.is_empty() {
                continue;
            }
            if let Some(hex) = line.strip_prefix("config_hash=") {
                config_hash = u64::from_str_radix(hex, 16)
                    .map_err(|_| Error::Parse(format!("bad config_hash line `{line}`")))?;
                continue;
            }
            let mut parts = line.split(' ');
            let (tag, name, dims, offset) =
                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some(t), Some(n), Some(d), Some(o)) if parts.next().is_none() => {
                        (t, n, d, o)
                    }
                    _ => return Err(Error::Parse(format!("bad manifest line `{line}`"))),
                };
            if tag != "tensor" {
                return Err(Error::Parse(format!("unknown manifest entry `{tag}`")));
            }
            let shape = dims
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<core::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::Parse(format!("bad shape in line `{line}`")))?;
            let offset = offset
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad offset in line `{line}`")))?;
            entries.push((name.to_string(), shape, offset));
        }

        let mut store = WeightStore::new(config_hash);
        let mut expected_end = 0usize;
        for (name, shape, offset) in entries {
            let count: usize = shape.iter().product();
            let bytes_len = count
                .checked_mul(4)
                .ok_or_else(|| Error::Parse(format!("tensor `{name}` size overflows")))?;
            let end = offset
                .checked_add(bytes_len)
                .ok_or_else(|| Error::Parse(format!("tensor `{name}` extent overflows")))?;
            if end > payload.len() {
                return Err(Error::Parse(format!(
                    "tensor `{name}` extends past end of file"
                )));
            }
            if store.get(&name).is_some() {
                return Err(Error::Parse(format!("duplicate tensor `{name}`")));
            }
            let data = payload[offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            store.insert(&name, Tensor::new(shape, data)?)?;
            expected_end = expected_end.max(end);
        }
        if expected_end != payload.len() {
            return Err(Error::Parse(format!(
                "payload of {} bytes, manifest accounts for {expected_end}",
                payload.len()
            )));
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample_store() -> WeightStore {
        let mut store = WeightStore::new(0xdead_beef_0123_4567);
        store
            .insert("a.weight", Tensor::new([2, 3], vec![1.0, -2.5, 0.0, 3.25, 1e-7, -0.125]).unwrap())
            .unwrap();
        store
            .insert("b.bias", Tensor::new([2], vec![0.5, -0.5]).unwrap())
            .unwrap();
        store
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let store = sample_store();
        let bytes = store.to_bytes();
        let loaded = WeightStore::from_bytes(&bytes).unwrap();
        assert_eq!(loaded, store);
        assert_eq!(loaded.to_bytes(), bytes);
        assert_eq!(loaded.config_hash(), 0xdead_beef_0123_4567);
        assert_eq!(loaded.param_count(), 8);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut bytes = sample_store().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            WeightStore::from_bytes(&bytes),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn bad_version_is_format_error() {
        let mut bytes = sample_store().to_bytes();
        bytes[4] = 9;
        assert!(matches!(
            WeightStore::from_bytes(&bytes),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncated_payload_is_parse_error() {
        let bytes = sample_store().to_bytes();
        assert!(matches!(
            WeightStore::from_bytes(&bytes[..bytes.len() - 5]),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn truncated_manifest_is_parse_error() {
        let bytes = sample_store().to_bytes();
        assert!(matches!(
            WeightStore::from_bytes(&bytes[..20]),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn whitespace_name_rejected() {
        let mut store = WeightStore::new(0);
        assert!(store
            .insert("has space", Tensor::zeros([1]))
            .is_err());
    }
}
