pub mod compress;
pub mod dataio;
pub mod error;
pub mod estimators;
pub mod fedproto;
pub mod harness;
pub mod linalg;
pub mod objectives;
pub mod privacy;
pub mod streams;

pub use error::{Error, Result};
