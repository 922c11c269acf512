//! Small dense/convolutional neural network substrate with hand-written
//! gradients, a seeded initializer, Adam, and a binary weight container.
//! Everything runs on f64 so finite-difference checks stay meaningful.

pub mod activation;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod norm;
pub mod optim;
pub mod tensor;

pub use activation::{sigmoid, Activation};
pub use conv::{Conv2d, ConvTranspose2d};
pub use dense::Dense;
pub use error::{NnError, Result};
pub use norm::{BatchNorm2d, BnCache};
pub use optim::Adam;
pub use tensor::{Shape4, Tensor};
