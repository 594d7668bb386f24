//! Topic analysis of geo-located microblog posts.
//!
//! The pipeline reads archived post records, keeps those inside a city's
//! bounding box, normalizes their text, builds a pruned vocabulary, trains an
//! LDA model by collapsed Gibbs sampling and reports how topics, entities and
//! activity distribute over time and across cities.
//!
//! Each stage lives in its own module and communicates through plain files
//! (see [`pipeline`]), so long runs can be resumed from any intermediate step.

pub mod config;
pub mod geofilter;
pub mod ingest;
pub mod lda;
pub mod pipeline;
pub mod reporting;
pub mod textprep;
pub mod vocab;
