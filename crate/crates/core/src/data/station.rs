use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Latitude bounds of the Rajasthan gauge network, degrees N (23°12'N to 29°55'N).
pub const LAT_RANGE: (f64, f64) = (23.2, 29.92);
/// Longitude bounds, degrees E (70°30'E to 77°35'E).
pub const LON_RANGE: (f64, f64) = (70.5, 77.58);

/// Atmospheric zone used for stratified evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Zone {
    NorthWestDesert,
    CentralAravalliHill,
    EasternPlains,
    SouthEasternPlateau,
}

impl Zone {
    pub const ALL: [Zone; 4] = [Zone::NorthWestDesert, Zone::CentralAravalliHill, Zone::EasternPlains, Zone::SouthEasternPlateau];

    /// File-format token.
    pub fn token(self) -> &'static str {
        match self {
            Zone::NorthWestDesert => "NorthWestDesert",
            Zone::CentralAravalliHill => "CentralAravalliHill",
            Zone::EasternPlains => "EasternPlains",
            Zone::SouthEasternPlateau => "SouthEasternPlateau",
        }
    }

    /// Human-readable label for report tables.
    pub fn label(self) -> &'static str {
        match self {
            Zone::NorthWestDesert => "North-West Desert",
            Zone::CentralAravalliHill => "Central Aravalli Hill Region",
            Zone::EasternPlains => "Eastern Plains",
            Zone::SouthEasternPlateau => "South-Eastern Plateau Region",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Zone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Zone::ALL
            .into_iter()
            .find(|z| z.token() == s.trim())
            .ok_or_else(|| Error::arg(format!("unknown zone {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub name: String,
    pub district: String,
    pub zone: Zone,
    /// Degrees north.
    pub latitude: f64,
    /// Degrees east.
    pub longitude: f64,
}

impl Station {
    /// Checks the coordinates against the network's bounding box unless `relaxed`.
    pub fn validate(&self, relaxed: bool) -> Result<()> {
        if !self.latitude.is_finite() || !self.longitude.is_finite() {
            return Err(Error::arg(format!("station {}: non-finite coordinates", self.id)));
        }
        if !relaxed {
            let ok_lat = (LAT_RANGE.0..=LAT_RANGE.1).contains(&self.latitude);
            let ok_lon = (LON_RANGE.0..=LON_RANGE.1).contains(&self.longitude);
            if !ok_lat || !ok_lon {
                return Err(Error::arg(format!(
                    "station {}: ({}, {}) lies outside lat {:?} / lon {:?}",
                    self.id, self.latitude, self.longitude, LAT_RANGE, LON_RANGE
                )));
            }
        }
        Ok(())
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.latitude, self.longitude]
    }
}
