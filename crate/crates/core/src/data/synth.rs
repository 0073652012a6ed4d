//! Synthetic monsoon rainfall for desk-scale experiments.
//!
//! Each station carries a latent "wetness" signal: a seasonal mean that peaks
//! in late July and rises to the east and south, plus a persistent AR(1)
//! anomaly and a per-year shift. Rain falls on days when the latent signal is
//! positive, with an amount that grows as a power of the signal and carries a
//! little multiplicative day-to-day noise. Wet and dry spells therefore last
//! several days and amounts vary smoothly, which leaves the recent past
//! informative about tomorrow while keeping most days dry. May, October and
//! November see sparse light showers; December to April is close to dry.

use chrono::{Datelike, NaiveDate};
use rand_distr::{Distribution, Normal};

use crate::data::station::{LAT_RANGE, LON_RANGE};
use crate::data::{RainSeries, Station, Zone};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_stations: usize,
    /// Whole calendar years to generate.
    pub years: usize,
    pub start_year: i32,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n_stations: usize, years: usize, seed: u64) -> Self {
        Self {
            n_stations,
            years,
            start_year: 2008,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub stations: Vec<Station>,
    pub series: Vec<RainSeries>,
}

/// Day-of-year centre and width of the monsoon peak.
const PEAK_DOY: f64 = 205.0;
const PEAK_WIDTH: f64 = 28.0;
/// Latent mean from May to November, outside the monsoon hump.
const BASE_LEVEL: f64 = -2.5;
/// Latent mean from December to April.
const DRY_SEASON_LEVEL: f64 = -3.6;
/// Seasonal rise of the latent mean at unit wetness.
const SEASON_AMPLITUDE: f64 = 4.0;
const ANOMALY_PERSISTENCE: f64 = 0.85;
/// Stationary standard deviation of the latent anomaly.
const ANOMALY_SD: f64 = 1.5;
const YEAR_SHIFT_SD: f64 = 0.3;
const AMOUNT_SCALE: f64 = 5.0;
const AMOUNT_POWER: f64 = 1.5;
const AMOUNT_NOISE_SD: f64 = 0.3;

fn monsoon_strength(doy: f64) -> f64 {
    (-0.5 * ((doy - PEAK_DOY) / PEAK_WIDTH).powi(2)).exp()
}

fn zone_for(quadrant: usize) -> Zone {
    match quadrant {
        0 => Zone::NorthWestDesert,
        1 => Zone::EasternPlains,
        2 => Zone::CentralAravalliHill,
        _ => Zone::SouthEasternPlateau,
    }
}

fn place_stations(n: usize, rng: &mut Rng) -> Vec<Station> {
    let lat_mid = (LAT_RANGE.0 + LAT_RANGE.1) / 2.0;
    let lon_mid = (LON_RANGE.0 + LON_RANGE.1) / 2.0;
    (0..n)
        .map(|i| {
            // Quadrants cycle NW, NE, SW, SE so every zone is populated once n >= 4.
            let q = i % 4;
            let (lat_lo, lat_hi) = if q < 2 { (lat_mid, LAT_RANGE.1) } else { (LAT_RANGE.0, lat_mid) };
            let (lon_lo, lon_hi) = if q % 2 == 0 { (LON_RANGE.0, lon_mid) } else { (lon_mid, LON_RANGE.1) };
            let latitude = (rng.uniform_range(lat_lo, lat_hi) * 1e4).round() / 1e4;
            let longitude = (rng.uniform_range(lon_lo, lon_hi) * 1e4).round() / 1e4;
            Station {
                id: format!("SYN{:03}", i + 1),
                name: format!("Synthetic gauge {}", i + 1),
                district: format!("Synthetic district {}", q + 1),
                zone: zone_for(q),
                latitude,
                longitude,
            }
        })
        .collect()
}

/// Relative wetness in roughly `[0.45, 1.35]`, rising to the east and south.
fn wetness(station: &Station) -> f64 {
    let east = (station.longitude - LON_RANGE.0) / (LON_RANGE.1 - LON_RANGE.0);
    let south = (LAT_RANGE.1 - station.latitude) / (LAT_RANGE.1 - LAT_RANGE.0);
    0.45 + 0.6 * east + 0.3 * south
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthData> {
    if cfg.n_stations == 0 {
        return Err(Error::arg("synthetic generation needs at least one station"));
    }
    if cfg.years < 2 {
        return Err(Error::arg("synthetic generation needs at least two years"));
    }
    let start = NaiveDate::from_ymd_opt(cfg.start_year, 1, 1).ok_or_else(|| Error::arg(format!("invalid start year {}", cfg.start_year)))?;
    let end_year = cfg.start_year + cfg.years as i32 - 1;
    let mut placement = Rng::with_stream(cfg.seed, streams::SYNTH);
    let stations = place_stations(cfg.n_stations, &mut placement);

    let stationary = Normal::new(0.0, ANOMALY_SD).expect("valid normal");
    let innovation = Normal::new(0.0, ANOMALY_SD * (1.0 - ANOMALY_PERSISTENCE * ANOMALY_PERSISTENCE).sqrt()).expect("valid normal");
    let year_shift = Normal::new(0.0, YEAR_SHIFT_SD).expect("valid normal");
    let amount_noise = Normal::new(0.0, AMOUNT_NOISE_SD).expect("valid normal");

    let series = stations
        .iter()
        .enumerate()
        .map(|(i, station)| {
            let mut rng = Rng::with_stream(cfg.seed, streams::SYNTH + 1 + i as u64);
            let wet_scale = wetness(station);
            let mut anomaly: f64 = stationary.sample(rng.inner());
            let mut shift = 0.0;
            let mut values = Vec::new();
            for date in start.iter_days().take_while(|d| d.year() <= end_year) {
                if date.ordinal() == 1 {
                    shift = year_shift.sample(rng.inner());
                }
                anomaly = ANOMALY_PERSISTENCE * anomaly + innovation.sample(rng.inner());
                let noise: f64 = amount_noise.sample(rng.inner());
                let base = if (5..=11).contains(&date.month()) { BASE_LEVEL } else { DRY_SEASON_LEVEL };
                let level = base + SEASON_AMPLITUDE * monsoon_strength(date.ordinal() as f64) * wet_scale + shift + anomaly;
                let amount = if level > 0.0 {
                    (AMOUNT_SCALE * level.powf(AMOUNT_POWER) * noise.exp() * 10.0).round() / 10.0
                } else {
                    0.0
                };
                values.push(Some(amount));
            }
            RainSeries::new(station.id.clone(), start, values)
        })
        .collect();
    Ok(SynthData { stations, series })
}
