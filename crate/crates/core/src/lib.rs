//! Find the wheat: the smallest part of a program that a black-box model
//! needs, and needs alone, to keep its prediction.

pub mod lang;
pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod dd;
pub mod error;
pub mod explain;
pub mod model;
pub mod mutate;
pub mod oracle;
pub mod reduce;
pub mod verify;

pub use error::{Error, Result};

/// The out-of-vocabulary placeholder used by mutation.
pub const OOV: &str = "oov";
