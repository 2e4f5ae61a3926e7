//! Context-aware hate speech detection over threaded news comments.
//!
//! Two model families are provided: a class-weighted, L2-regularized
//! logistic regression over character/word n-gram and lexicon features
//! ([`logreg`], [`features`]), and a network of parallel bidirectional LSTM
//! branches over the comment, the news title and the poster's screen name
//! ([`encoder`]). [`ensemble`] combines their scores and [`eval`] runs
//! stratified cross-validation and renders result tables.

pub mod corpus;
pub mod encoder;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod features;
pub mod logreg;
pub mod numcore;

pub use error::{Error, Result};
