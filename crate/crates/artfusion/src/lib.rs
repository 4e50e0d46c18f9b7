//! Depth-sequence reconstruction driver: file formats, configuration, the
//! per-frame loop with exports, scoring against synthetic ground truth and
//! the `artfusion` command line.

pub mod config;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod pipeline;
pub mod scene_io;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, FrameRecord, Reconstruction, RunOutput, Timings};
