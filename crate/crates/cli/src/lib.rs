pub mod config;
pub mod formats;
pub mod pipeline;

pub use fingerloc_core as core;
