//! Mining component/aspect comments from product reviews.
//!
//! The pipeline runs in stages: reviews are split and tokenized
//! ([`corpus`]), matched against token patterns to collect label candidates
//! ([`pattern`]), curated into a label schema ([`schema`]), annotated into a
//! multi-label dataset ([`dataset`]), rebalanced by synonym replacement
//! ([`augment`]), and used to train one component classifier and one aspect
//! classifier ([`classifier`]) that are scored by [`evaluation`].

pub mod augment;
pub mod classifier;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod pattern;
pub mod schema;

pub use error::{Error, Result};
