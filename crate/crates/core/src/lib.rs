pub mod catalog;
pub mod dialects;
pub mod engine;
pub mod error;
pub mod hierarchy;
pub mod miner;
pub mod postproc;
pub mod relstore;
pub mod rulestore;

pub use error::{Error, Result, Span};
