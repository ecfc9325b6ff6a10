//! Drug-drug interaction benchmark toolkit.
//!
//! Builds directed interaction datasets from a drug catalog, renders the
//! classification prompt, exports fine-tuning conversations, queries
//! OpenAI-compatible chat endpoints, trains an l2-regularized
//! logistic-regression baseline and reports confusion-based metrics.

pub mod baseline;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod finetune;
pub mod llm;
pub mod manifest;
pub mod metrics;
pub mod pairs;
pub mod prompt;
pub mod rng;
