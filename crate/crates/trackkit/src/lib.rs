//! File formats, serializable reports and the `trackkit` command line on top
//! of [`trackkit_core`].

pub mod cli;
pub mod corpus;
pub mod error;
pub mod format;
pub mod report;

pub use error::{Error, Result};
pub use format::{load_reference, load_system, save_system, NamedSystem};
pub use trackkit_core as core;
