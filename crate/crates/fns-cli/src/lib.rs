//! Library surface of the experiment runner, split from the binary so the
//! integration tests can construct configs and read artifacts with the same
//! types the binary uses.

pub mod artifacts;
pub mod commands;
pub mod config;
