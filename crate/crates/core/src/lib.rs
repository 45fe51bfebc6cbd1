//! Retrieval-augmented composition of folk tunes in abc notation.
//!
//! A request is turned into tags by a small model, the tagged corpus is ranked
//! by Jaccard similarity, the best tunes go into a few-shot prompt and a
//! composer model answers with commentary followed by a tune. The tune is
//! then validated and checked against the corpus for exact copies.

pub mod abc;
pub mod corpus;
pub mod dialogue;
pub mod llm;
pub mod rational;
pub mod retrieval;
pub mod service;
pub mod template;
