//! Dataset ingestion: TUM sequence directories, netpbm image files,
//! and synthetic scenes with exact ground truth.

pub mod image;
pub mod synth;
pub mod tum;

pub use image::{read_pgm16, read_ppm, write_pgm16, write_ppm};
pub use synth::{render_exact, synth_generate, OracleMap, ScenePlane, SyntheticData, SyntheticScene};
pub use tum::{tum_load, IndexEntry, TumSequence};
