//! Humor detection over short texts.
//!
//! Each text is cleaned and split into sentences, every sentence and the
//! whole text are mapped to fixed-size embedding vectors, and a small
//! feed-forward classifier looks at the sentences through parallel paths
//! before a shared head makes the final call.

pub mod dataset;
pub mod encoder;
pub mod eval;
pub mod model;
pub mod store;
pub mod textprep;
