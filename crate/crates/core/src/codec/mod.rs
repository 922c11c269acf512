pub mod attention;
pub mod blocks;
pub mod checkpoint;
pub mod config;
pub mod model;
pub mod quantize;
pub mod train;

pub use config::CodecConfig;
pub use model::{AnalogLatent, CodecModel, DigitalLatent, FrozenPoint, LossBreakdown, TrainForward};
pub use quantize::Codebook;
pub use train::{eval_analog_psnr, train, TrainConfig, TrainReport};
