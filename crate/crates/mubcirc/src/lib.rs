//! File formats and command-line front end for `mubcirc-core`.

pub mod cli;
pub mod format;
