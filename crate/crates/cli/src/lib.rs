//! Library side of the `mx` command: project scaffolding, the conformance
//! checker, and the long-running service and registry commands.

pub mod conformance;
pub mod run;
pub mod scaffold;

pub use conformance::{validate_service, Check, ConformanceReport, Sample, ValidateOptions};
pub use scaffold::{scaffold, ScaffoldError};
