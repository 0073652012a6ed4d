//! Side-by-side comparison of evaluation reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::data::Split;
use crate::eval::EvalReport;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
    pub best_mae: bool,
    pub best_rmse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub split: Split,
    pub rows: Vec<ComparisonRow>,
}

/// Lines up the overall metrics of `reports` in input order and marks every
/// row that attains the minimum of a column; equal minima are all marked.
pub fn compare(reports: &[(String, EvalReport)]) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::arg(format!("comparison needs at least two reports, got {}", reports.len())));
    }
    let (first_name, first) = &reports[0];
    for (name, r) in &reports[1..] {
        if r.split != first.split {
            return Err(Error::arg(format!(
                "{name} was scored on the {} split but {first_name} on the {} split",
                r.split.name(),
                first.split.name()
            )));
        }
        if r.overall.n != first.overall.n {
            return Err(Error::arg(format!(
                "{name} has {} samples but {first_name} has {}",
                r.overall.n, first.overall.n
            )));
        }
    }
    let best_mae = reports.iter().map(|(_, r)| r.overall.mae).fold(f64::INFINITY, f64::min);
    let best_rmse = reports.iter().map(|(_, r)| r.overall.rmse).fold(f64::INFINITY, f64::min);
    Ok(ComparisonTable {
        split: first.split,
        rows: reports
            .iter()
            .map(|(name, r)| ComparisonRow {
                name: name.clone(),
                mae: r.overall.mae,
                rmse: r.overall.rmse,
                n: r.overall.n,
                best_mae: r.overall.mae == best_mae,
                best_rmse: r.overall.rmse == best_rmse,
            })
            .collect(),
    })
}

impl ComparisonTable {
    /// Names of the rows marked best on MAE.
    pub fn best_mae(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.best_mae).map(|r| r.name.as_str()).collect()
    }

    pub fn best_rmse(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.best_rmse).map(|r| r.name.as_str()).collect()
    }

    /// Fixed-width table; `*` flags the best value in each column.
    pub fn render(&self) -> String {
        let mark = |v: f64, best: bool| format!("{v:.4}{}", if best { "*" } else { " " });
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>11} {:>11}", "Model", "MAE", "RMSE");
        for r in &self.rows {
            let _ = writeln!(out, "{:<16} {:>11} {:>11}", r.name, mark(r.mae, r.best_mae), mark(r.rmse, r.best_rmse));
        }
        let _ = writeln!(
            out,
            "split: {}, samples per model: {}; * marks the lowest error",
            self.split.name(),
            self.rows[0].n
        );
        out
    }
}
