//! Self-describing model checkpoint.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    "DWRPMCKP"
//! version  u32 (= 1)
//! arch     u32 length + UTF-8 name
//! spec     u32 length + UTF-8 JSON of the ArchSpec
//! seq_len  u64
//! x_min    f64      normalization constants, mm
//! x_max    f64
//! seed     u64
//! count    u32      number of tensors
//! repeated count times:
//!   name   u32 length + UTF-8
//!   rank   u32
//!   dims   rank × u64
//!   data   product(dims) × f64
//! ```

use std::path::Path;

use crate::codec::{Decoder, Encoder};
use crate::data::Normalizer;
use crate::models::{ArchSpec, ModelGraph};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"DWRPMCKP";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: ModelGraph,
    pub normalizer: Normalizer,
    pub seed: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut e = Encoder::new(MAGIC, VERSION);
        e.str(self.model.architecture().name());
        e.str(&serde_json::to_string(self.model.spec())?);
        e.u64(self.model.seq_len() as u64);
        e.f64(self.normalizer.x_min());
        e.f64(self.normalizer.x_max());
        e.u64(self.seed);
        let params = self.model.params();
        e.u32(params.len() as u32);
        for p in params {
            e.str(p.name);
            e.u32(p.tensor.rank() as u32);
            for &d in p.tensor.shape() {
                e.u64(d as u64);
            }
            e.f64s(p.tensor.data());
        }
        Ok(e.finish())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (mut d, version) = Decoder::open("checkpoint", bytes, MAGIC)?;
        if version != VERSION {
            return Err(Error::format("checkpoint", format!("unsupported version {version}")));
        }
        let arch = d.str()?;
        let spec: ArchSpec = serde_json::from_str(&d.str()?)?;
        if spec.architecture().name() != arch {
            return Err(Error::format("checkpoint", format!("architecture {arch:?} disagrees with its spec")));
        }
        let seq_len = d.usize()?;
        let normalizer = Normalizer::new(d.f64()?, d.f64()?)?;
        let seed = d.u64()?;
        let count = d.u32()? as usize;

        let mut model = spec.build(seq_len, &mut Rng::new(seed))?;
        if count != model.param_names().len() {
            return Err(Error::format(
                "checkpoint",
                format!("{count} tensors stored, architecture has {}", model.param_names().len()),
            ));
        }
        let mut values = Vec::with_capacity(count);
        for expected in model.param_names() {
            let name = d.str()?;
            if &name != expected {
                return Err(Error::format("checkpoint", format!("expected tensor {expected:?}, found {name:?}")));
            }
            let rank = d.u32()? as usize;
            let shape = (0..rank).map(|_| d.usize()).collect::<Result<Vec<_>>>()?;
            let n = shape.iter().product();
            values.push(Tensor::new(&shape, d.f64s(n)?)?);
        }
        d.finish()?;
        model.restore(&values)?;
        Ok(Self { model, normalizer, seed })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Architecture;

    #[test]
    fn round_trip_preserves_parameters() {
        for arch in Architecture::ALL {
            let spec = ArchSpec::default_for(arch);
            let model = spec.build(24, &mut Rng::new(5)).unwrap();
            let ck = Checkpoint {
                model,
                normalizer: Normalizer::new(0.0, 412.5).unwrap(),
                seed: 5,
            };
            let bytes = ck.to_bytes().unwrap();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back.model.snapshot(), ck.model.snapshot());
            assert_eq!(back.model.spec(), ck.model.spec());
            assert_eq!(back.normalizer, ck.normalizer);
            assert_eq!(back.to_bytes().unwrap(), bytes);
        }
    }

    #[test]
    fn rejects_corruption() {
        let model = ArchSpec::default_for(Architecture::Mlp).build(10, &mut Rng::new(0)).unwrap();
        let ck = Checkpoint {
            model,
            normalizer: Normalizer::new(0.0, 1.0).unwrap(),
            seed: 0,
        };
        let bytes = ck.to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
    }
}
