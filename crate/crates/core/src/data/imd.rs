use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The seven IMD daily rainfall intensity bands.
///
/// Published bands are quoted at the gauges' 0.1 mm resolution
/// (light 0.1–7.5, moderate 7.6–35.5, ...). Cut points sit halfway between
/// adjacent published edges, so every published edge value lands in its own
/// band and sub-resolution values round to the nearer one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ImdCategory {
    NoRain,
    Light,
    Moderate,
    RatherHeavy,
    Heavy,
    VeryHeavy,
    ExtremelyHeavy,
}

/// Exclusive upper cut point of each band below `ExtremelyHeavy`, mm.
const CUTS: [(f64, ImdCategory); 6] = [
    (0.05, ImdCategory::NoRain),
    (7.55, ImdCategory::Light),
    (35.55, ImdCategory::Moderate),
    (64.45, ImdCategory::RatherHeavy),
    (124.45, ImdCategory::Heavy),
    (244.45, ImdCategory::VeryHeavy),
];

impl ImdCategory {
    pub const ALL: [ImdCategory; 7] = [
        ImdCategory::NoRain,
        ImdCategory::Light,
        ImdCategory::Moderate,
        ImdCategory::RatherHeavy,
        ImdCategory::Heavy,
        ImdCategory::VeryHeavy,
        ImdCategory::ExtremelyHeavy,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ImdCategory::NoRain => "no rain",
            ImdCategory::Light => "light rain",
            ImdCategory::Moderate => "moderate rain",
            ImdCategory::RatherHeavy => "rather heavy rain",
            ImdCategory::Heavy => "heavy rain",
            ImdCategory::VeryHeavy => "very heavy rain",
            ImdCategory::ExtremelyHeavy => "extremely heavy rain",
        }
    }

    /// Published band in mm; the upper edge is `None` for the open top band.
    pub fn band(self) -> (f64, Option<f64>) {
        match self {
            ImdCategory::NoRain => (0.0, Some(0.0)),
            ImdCategory::Light => (0.1, Some(7.5)),
            ImdCategory::Moderate => (7.6, Some(35.5)),
            ImdCategory::RatherHeavy => (35.6, Some(64.4)),
            ImdCategory::Heavy => (64.5, Some(124.4)),
            ImdCategory::VeryHeavy => (124.5, Some(244.4)),
            ImdCategory::ExtremelyHeavy => (244.5, None),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ImdCategory::NoRain => "no_rain",
            ImdCategory::Light => "light",
            ImdCategory::Moderate => "moderate",
            ImdCategory::RatherHeavy => "rather_heavy",
            ImdCategory::Heavy => "heavy",
            ImdCategory::VeryHeavy => "very_heavy",
            ImdCategory::ExtremelyHeavy => "extremely_heavy",
        }
    }
}

impl fmt::Display for ImdCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

pub fn categorize(mm: f64) -> Result<ImdCategory> {
    if mm.is_nan() || mm < 0.0 {
        return Err(Error::arg(format!("rainfall must be non-negative, got {mm}")));
    }
    Ok(CUTS.iter().find(|(cut, _)| mm < *cut).map_or(ImdCategory::ExtremelyHeavy, |&(_, c)| c))
}
