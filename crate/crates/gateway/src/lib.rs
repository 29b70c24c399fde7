//! Command line and HTTP front ends for the NLU engine.

pub mod cli;
pub mod service;
