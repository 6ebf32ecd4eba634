//! Rate regions, error exponents and a universal random-binning codec for
//! Slepian-Wolf coding of two correlated sources observed with an unknown
//! relative delay.

pub mod bounds;
pub mod cli;
pub mod codec;
pub mod delaysource;
pub mod error;
pub mod probcore;
pub mod typesys;
pub mod verify;

pub use error::{Error, Result};
