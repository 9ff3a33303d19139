//! Scenario files, command line and HTTP service around the `apgrid`
//! placement engine.

pub mod api;
pub mod artifacts;
pub mod cli;
pub mod runs;
pub mod store;
