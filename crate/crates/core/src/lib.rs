pub mod af;
pub mod channel;
pub mod error;
pub mod gp;
pub mod harness;
pub mod numerics;
pub mod power;
pub mod report;
pub mod svd_relay;

pub use error::{Error, NumericsError, Result};
