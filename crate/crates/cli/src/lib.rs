//! File formats, configuration and the experiment pipeline around
//! `regxplain-core`.

pub mod acceptance;
pub mod config;
pub mod crippen;
pub mod format;
pub mod pipeline;
pub mod report;
pub mod stats;
