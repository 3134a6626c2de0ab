//! Binary checkpoint format.
//!
//! ```text
//! "SSTM"            4 bytes
//! version           u32 (currently 1)
//! n, c              u32, u32
//! hidden count      u32, followed by one u32 per hidden width
//! group side        u32 (0 = ungrouped)
//! image h, w        u32, u32 (0, 0 = not an image)
//! group head        u32 (0 = mean-pool, 1 = per-group)
//! explanation tap   u32
//! threshold         f64
//! weight blocks     f64 each, in parameter declaration order
//! ```
//!
//! Every integer and float is little-endian.

use std::path::Path;

use super::network::{Architecture, ModelParams};
use super::subset::GroupHead;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SSTM";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode(params: &ModelParams) -> Vec<u8> {
    let arch = params.architecture();
    let mut out = Vec::with_capacity(64 + 8 * params.parameter_count());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    let mut put = |v: u32| out.extend_from_slice(&v.to_le_bytes());
    put(CHECKPOINT_VERSION);
    put(arch.inputs as u32);
    put(arch.classes as u32);
    put(arch.hidden.len() as u32);
    for &h in &arch.hidden {
        put(h as u32);
    }
    put(arch.group_side.unwrap_or(0) as u32);
    let (h, w) = arch.image_shape.unwrap_or((0, 0));
    put(h as u32);
    put(w as u32);
    put(match arch.group_head {
        GroupHead::MeanPool => 0,
        GroupHead::PerGroup => 1,
    });
    put(arch.tap() as u32);
    out.extend_from_slice(&arch.threshold.to_le_bytes());
    for block in params.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("checkpoint truncated at byte {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ModelParams> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("bad checkpoint magic {magic:02x?}")));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let inputs = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let depth = r.u32()? as usize;
    if depth > 1024 {
        return Err(Error::Format(format!("implausible hidden layer count {depth}")));
    }
    let hidden = (0..depth).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let side = r.u32()? as usize;
    let (h, w) = (r.u32()? as usize, r.u32()? as usize);
    let group_head = match r.u32()? {
        0 => GroupHead::MeanPool,
        1 => GroupHead::PerGroup,
        other => return Err(Error::Format(format!("unknown group head tag {other}"))),
    };
    let tap = r.u32()? as usize;
    let threshold = r.f64()?;
    let arch = Architecture {
        inputs,
        classes,
        hidden,
        image_shape: (h > 0 && w > 0).then_some((h, w)),
        group_side: (side > 0).then_some(side),
        group_head,
        explanation_tap: Some(tap),
        threshold,
    };
    let mut params = ModelParams::zeros(arch)?;
    for block in params.blocks_mut() {
        for v in block.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after checkpoint payload",
            bytes.len() - r.pos
        )));
    }
    Ok(params)
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::RandomSource;

    fn sample() -> ModelParams {
        let mut arch = Architecture::new(16, 3, vec![6, 5]);
        arch.image_shape = Some((4, 4));
        arch.group_side = Some(2);
        arch.threshold = 0.4;
        ModelParams::init(arch, &mut RandomSource::new(11)).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&sample());
        assert_eq!(&bytes[..4], b"SSTM");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 3);
    }

    #[test]
    fn decode_inverts_encode() {
        let p = sample();
        let q = decode(&encode(&p)).unwrap();
        assert_eq!(q.to_flat(), p.to_flat());
        assert_eq!(q.architecture().image_shape, Some((4, 4)));
        assert_eq!(q.threshold(), 0.4);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(decode(&bytes).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
    }
}
