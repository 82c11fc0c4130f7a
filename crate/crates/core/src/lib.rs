//! Exact-arithmetic engine for classical Islamic inheritance (fara'id) problems,
//! plus the surrounding tooling used to build and evaluate a retrieval-augmented
//! question-answering pipeline over them: a synthetic Arabic corpus generator,
//! hybrid lexical/dense retrieval with reciprocal-rank fusion, an LLM endpoint
//! bridge, structured-output extraction and validation, and a stage-weighted
//! scoring harness.
//!
//! All share arithmetic is performed on reduced rational numbers; floating
//! point appears only in retrieval scoring and evaluation metrics.

pub mod bridge;
pub mod extract;
pub mod gen;
#[cfg(test)]
pub(crate) mod mockhttp;
pub mod model;
pub mod rational;
pub mod retrieval;
pub mod score;
pub mod solver;
pub mod text;
pub mod validate;
