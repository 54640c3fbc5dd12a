//! Terminal and HTTP front ends for the troubleshooting engine.

pub mod cli;
pub mod kbload;
pub mod service;
pub mod view;

pub use itriage_core as core;
