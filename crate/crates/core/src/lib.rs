//! Dataset profiling, per-language PCA and subset selection for text
//! fine-tuning corpora.

pub mod analysis;
pub mod corpus;
pub mod divmetrics;
mod error;
pub mod lexmetrics;
pub mod pca;
pub mod profile;
pub mod report;
pub mod rng;
pub mod schema;
pub mod selection;
pub mod semmetrics;

pub use error::{Error, Result};
