//! Command-line front end for `gini_ellipse`: config files, run records and
//! CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod record;
pub mod reproduce;
