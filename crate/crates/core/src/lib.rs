//! Truthful gains-from-trade mechanisms for two-sided matching markets,
//! with exact verification on discrete instances.

pub mod bilateral;
pub mod distributions;
pub mod error;
pub mod generate;
pub mod instances;
pub mod market;
pub mod matching;
pub mod mechanisms;
pub mod verify;

pub use error::{Error, Result};
