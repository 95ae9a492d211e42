//! Experiment driver for the myotype pipeline: datasets, cross-validation,
//! degradation sweeps, channel-model fits and reports.

pub mod bench;
pub mod cli;
pub mod data;
pub mod errmodel;
pub mod experiment;
pub mod profile;
pub mod report;
pub mod transcripts;
