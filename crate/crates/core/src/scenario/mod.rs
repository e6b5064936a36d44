//! Declarative scenarios: TOML configuration, the pipeline that runs them and
//! the reports they produce.

pub mod bundled;
pub mod config;
pub mod report;
pub mod run;

pub use bundled::*;
pub use config::*;
pub use report::*;
pub use run::*;
