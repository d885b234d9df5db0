//! Identity suites over the `ruijsenaars-core` operators, with plain-text
//! and JSON reports.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{ConfigError, Suite, SuiteConfig};
pub use report::{validate_report, CheckRecord, IdentityReport, Status};
pub use suites::run_suite;
