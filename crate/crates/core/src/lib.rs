pub mod channel;
pub mod codec;
pub mod dataio;
pub mod error;
pub mod mapping;
pub mod metrics;
pub mod transport;
pub mod types;

pub use error::{CoreError, Result};
