//! File formats and typed output reports shared by the `cobitsim` binary
//! and its integration tests.

pub mod files;
pub mod reports;
