//! Multi-head natural-language-understanding engine.
//!
//! Four analyzers (binary sentiment, seven-way emotion, banking intent and
//! BIO entity tagging) trained on a small recurrent-network kernel written
//! from scratch, plus the persistence and joint-inference layer that serves
//! them together.

pub mod corpora;
pub mod engine;
pub mod error;
pub mod exec;
pub mod gradsuite;
pub mod layers;
pub mod numkit;
pub mod synthetic;
pub mod taskmodels;
pub mod textprep;

pub use error::{Error, Result};
pub use exec::Execution;
