//! File formats, dataset handling and commands for the activity recognizer.

pub mod dataset;
pub mod model_file;
pub mod pipeline;
pub mod pnm;
pub mod report;
pub mod synth;
