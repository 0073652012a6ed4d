//! Metrics, stratified reports and cross-model comparison.

mod baseline;
mod compare;
mod metrics;
mod report;

pub use baseline::{zero_forecast, Climatology};
pub use compare::{compare, ComparisonRow, ComparisonTable};
pub use metrics::{aggregate, mae, metric_pair, rmse, MetricAccumulator, MetricPair};
pub use report::{
    evaluate, evaluate_predictions, predict_mm, predict_normalized, split_metrics, write_predictions, EvalReport, PredictionRecord, StationMetrics,
    REGION_LABEL,
};
