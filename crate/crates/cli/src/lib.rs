//! Library half of the `hapfix` command-line tool: scene validation, input
//! generation, single runs, batches and baseline generation.

pub mod commands;
pub mod config;
pub mod exit;
pub mod stats;
