//! Daily rainfall forecasting with a joint deep-and-wide network.
//!
//! The crate covers the full pipeline: gauge-record ingestion and windowing
//! ([`data`]), dense tensors and hand-written layers with explicit backward
//! passes ([`tensor`], [`layers`]), the DWRPM graph and its MLP, CNN and LSTM
//! baselines ([`models`]), Adam training ([`optim`]) and stratified
//! evaluation ([`eval`]).
//!
//! ```no_run
//! use dwrpm_core::data::{synth_generate, SplitYears, SynthConfig, WindowedDataset};
//! use dwrpm_core::models::{ArchSpec, Architecture};
//! use dwrpm_core::optim::{train, TrainConfig};
//! use dwrpm_core::rng::{streams, Rng};
//!
//! let synth = synth_generate(&SynthConfig::new(8, 6, 7))?;
//! let years = SplitYears::new((2008, 2011), (2012, 2012), (2013, 2013))?;
//! let (data, _) = WindowedDataset::build(&synth.series, &synth.stations, 210, years)?;
//! let mut model = ArchSpec::default_for(Architecture::Dwrpm).build(210, &mut Rng::with_stream(7, streams::INIT))?;
//! let report = train(&mut model, &data, &TrainConfig { epochs: 5, seed: 7, ..TrainConfig::default() })?;
//! println!("best validation RMSE: {:?}", report.best_val);
//! # Ok::<(), dwrpm_core::Error>(())
//! ```

mod codec;
pub mod data;
mod error;
pub mod eval;
pub mod layers;
pub mod models;
pub mod optim;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use models::{ArchSpec, Architecture, Checkpoint, ModelGraph};
pub use rng::Rng;
pub use tensor::Tensor;
