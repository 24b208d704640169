//! Auditing whether classifiers personalized with group attributes make fair use of them.

pub mod audit;
pub mod dataset;
pub mod error;
pub mod interventions;
pub mod metrics;
pub mod models;
pub mod replicate;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
