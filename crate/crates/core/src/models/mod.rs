//! The DWRPM architecture and its three baselines as explicit layer graphs.

mod checkpoint;
mod graph;
mod layer;

pub use checkpoint::Checkpoint;
pub use graph::{
    build_cnn_baseline, build_dwrpm, build_lstm_baseline, build_mlp_baseline, ArchSpec, Architecture, Branch, BranchInput, Gradients, JoinPart, JointHead,
    ModelGraph, NamedParam,
};
pub use layer::Layer;
