//! Murder-mystery simulation engine for LLM agents and its evaluation harness.

pub mod agent;
pub mod engine;
pub mod harness;
pub mod memory;
pub mod metrics;
pub mod script;
