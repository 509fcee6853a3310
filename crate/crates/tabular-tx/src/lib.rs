//! Tabular-TX: table-to-text summarization with Theme-Explanation
//! structure.
//!
//! The pipeline turns a table document into a one-sentence summary in four
//! stages: normalize the table (merged-cell expansion, header inference,
//! key-value flattening, related-cell filtering), plan the analysis (cell
//! typing, numeric normalization, method selection), run two prompting
//! steps against a text-generation backend (data recognition, then
//! sentence generation with bounded regeneration), and validate the result
//! against the Theme-Explanation grammar. A separate evaluation module
//! scores summaries with ROUGE-1, ROUGE-L, and BLEU.

pub mod analysis;
pub mod backend;
pub mod config;
pub mod eval;
pub mod fixtures;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod prompt;
pub mod tx;
