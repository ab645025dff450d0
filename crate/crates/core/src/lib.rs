//! Lexicon-based style classification with language-model prompts.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fewshot;
pub mod lexicon;
pub mod par;
pub mod pipeline;
pub mod prompting;
pub mod scoring;
pub mod seed;

pub use error::{Error, Result};
