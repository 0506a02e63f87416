pub mod attrib;
pub mod corpus;
pub mod error;
pub mod evalx;
pub mod gbt;
pub mod harness;
pub mod recurrent;
pub mod seed;
pub mod synthgen;

pub use error::{Error, Result};
