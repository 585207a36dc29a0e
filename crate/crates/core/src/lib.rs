//! Sensor-driven plant growth benchmarking: synthetic hydroponic data, three
//! regressors trained from scratch, Shapley attributions and resource
//! profiling.

pub mod dataset;
pub mod eval;
pub mod explain;
pub mod manifest;
pub mod models;
pub mod numerics;
pub mod pipeline;
pub mod plot;
pub mod sensorsim;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/data.md")]
    struct Data;
    #[doc = include_str!("../../../book/src/models.md")]
    struct Models;
    #[doc = include_str!("../../../book/src/explain.md")]
    struct Explain;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/water.md")]
    struct Water;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
