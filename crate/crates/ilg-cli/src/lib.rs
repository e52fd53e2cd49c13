//! Library surface of the experiment runner; the `ilg` binary is a thin
//! wrapper around these modules.

pub mod args;
pub mod csv;
pub mod runner;
pub mod svg;
