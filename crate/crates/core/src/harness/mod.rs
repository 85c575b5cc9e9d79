//! Synthetic data, the self-test runner and table export.

mod cgdump;
mod dataset;
mod selftest;

pub use cgdump::{cg_table, write_cg_table, CgEntry};
pub use dataset::{gen_dataset, read_dataset, write_dataset, DatasetSpec, Potential};
pub use selftest::{
    run_selftest, suite_names, SelfTestOptions, SelfTestReport, SuiteResult, SUITES,
};
