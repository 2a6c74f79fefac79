//! Detection of coordinated content injection in timestamped micro-post corpora.
//!
//! The pipeline runs in stages that mirror the module layout:
//!
//! 1. [`corpus`] loads and time-indexes tweets and auxiliary account data.
//! 2. [`tokenize`] turns text into token sets compared with Jaccard similarity.
//! 3. [`ccid`] slides overlapping windows over the corpus, finds near-duplicate
//!    groups inside each window in parallel and emits deduplicated copy events.
//! 4. [`copygraph`] reduces events to a weighted source→copier account graph and
//!    applies the activity and copy-percentage filters.
//! 5. [`botnets`] finds communities on the merged multi-period graph, projects them
//!    back onto each period and labels their evolution.
//! 6. [`layers`], [`trends`] and [`features`] situate the detected bots among
//!    interaction graphs, trending topics and per-account feature distributions.
//!
//! [`synth`] generates labelled corpora with planted botnets and [`pipeline`] ties the
//! stages together behind one serializable configuration.

pub mod botnets;
pub mod ccid;
pub mod community;
pub mod copygraph;
pub mod corpus;
pub mod digest;
pub mod error;
pub mod features;
pub mod layers;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod tokenize;
pub mod trends;
mod tsv;

pub use error::{Error, Result};
