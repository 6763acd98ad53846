pub mod config;
pub mod detect;
pub mod error;
pub mod experiments;
pub mod matcore;
pub mod plant;
pub mod presets;
pub mod sampling;
pub mod simulate;
pub mod watermark;

pub use error::{Error, Result};
