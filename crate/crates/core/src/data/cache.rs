//! Binary dataset cache written by `ingest` and read by `train`/`evaluate`.
//!
//! ```text
//! magic     "DWRPMDS1"
//! version   u32 (= 1)
//! seq_len   u64
//! x_min     f64, x_max f64
//! years     6 × i32   (train, val, test inclusive ranges)
//! stations  u32 count, then per station: id, name, district, zone token
//!           (u32 length + UTF-8 each), latitude f64, longitude f64
//! rows      u64 count, then per row: station index u32, target date
//!           i32 (days from CE), split u8, target f64, seq_len × f64
//! ```

use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::codec::{Decoder, Encoder};
use crate::data::{Normalizer, SplitYears, Station, WindowedDataset};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"DWRPMDS1";
const VERSION: u32 = 1;

impl WindowedDataset {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new(MAGIC, VERSION);
        e.u64(self.seq_len() as u64);
        e.f64(self.normalizer().x_min());
        e.f64(self.normalizer().x_max());
        let y = self.split_years();
        for (a, b) in [y.train, y.val, y.test] {
            e.i32(a);
            e.i32(b);
        }
        e.u32(self.stations().len() as u32);
        for s in self.stations() {
            e.str(&s.id);
            e.str(&s.name);
            e.str(&s.district);
            e.str(s.zone.token());
            e.f64(s.latitude);
            e.f64(s.longitude);
        }
        let (idx, dates, splits, targets, seqs) = self.raw_parts();
        e.u64(targets.len() as u64);
        let l = self.seq_len();
        for i in 0..targets.len() {
            e.u32(idx[i]);
            e.i32(dates[i].num_days_from_ce());
            e.u8(Self::split_code(splits[i]));
            e.f64(targets[i]);
            e.f64s(&seqs[i * l..(i + 1) * l]);
        }
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (mut d, version) = Decoder::open("dataset cache", bytes, MAGIC)?;
        if version != VERSION {
            return Err(Error::format("dataset cache", format!("unsupported version {version}")));
        }
        let seq_len = d.usize()?;
        let normalizer = Normalizer::new(d.f64()?, d.f64()?)?;
        let mut yr = || -> Result<(i32, i32)> { Ok((d.i32()?, d.i32()?)) };
        let years = SplitYears::new(yr()?, yr()?, yr()?)?;
        let n_stations = d.u32()? as usize;
        let mut stations = Vec::with_capacity(n_stations);
        for _ in 0..n_stations {
            stations.push(Station {
                id: d.str()?,
                name: d.str()?,
                district: d.str()?,
                zone: d.str()?.parse()?,
                latitude: d.f64()?,
                longitude: d.f64()?,
            });
        }
        let n = d.usize()?;
        let bad = |what: &str| Error::format("dataset cache", what.to_string());
        let (mut idx, mut dates, mut splits, mut targets) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut seqs = Vec::with_capacity(n.saturating_mul(seq_len));
        for _ in 0..n {
            idx.push(d.u32()?);
            dates.push(NaiveDate::from_num_days_from_ce_opt(d.i32()?).ok_or_else(|| bad("invalid date"))?);
            splits.push(Self::split_from_code(d.u8()?).ok_or_else(|| bad("invalid split code"))?);
            targets.push(d.f64()?);
            seqs.extend(d.f64s(seq_len)?);
        }
        d.finish()?;
        Self::from_raw_parts(seq_len, normalizer, years, stations, idx, dates, splits, targets, seqs)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use crate::data::{synth_generate, SplitYears, SynthConfig, WindowedDataset};

    #[test]
    fn round_trip() {
        let data = synth_generate(&SynthConfig::new(3, 3, 1)).unwrap();
        let years = SplitYears::new((2008, 2008), (2009, 2009), (2010, 2010)).unwrap();
        let (ds, _) = WindowedDataset::build(&data.series, &data.stations, 20, years).unwrap();
        let bytes = ds.to_bytes();
        let back = WindowedDataset::from_bytes(&bytes).unwrap();
        assert_eq!(back, ds);
        assert!(WindowedDataset::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
