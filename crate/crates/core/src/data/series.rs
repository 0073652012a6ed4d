use chrono::{Days, NaiveDate};

/// Chronological daily rainfall for one station; `None` marks a missing day.
#[derive(Debug, Clone, PartialEq)]
pub struct RainSeries {
    pub station_id: String,
    pub start: NaiveDate,
    /// Millimetres per day, contiguous from `start`.
    pub values: Vec<Option<f64>>,
}

impl RainSeries {
    pub fn new(station_id: impl Into<String>, start: NaiveDate, values: Vec<Option<f64>>) -> Self {
        Self {
            station_id: station_id.into(),
            start,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    /// Last covered day, or `None` for an empty series.
    pub fn end(&self) -> Option<NaiveDate> {
        (!self.values.is_empty()).then(|| self.date_at(self.values.len() - 1))
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).and_then(|i| self.values[i])
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn iter_dated(&self) -> impl Iterator<Item = (NaiveDate, Option<f64>)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| (self.date_at(i), *v))
    }
}
