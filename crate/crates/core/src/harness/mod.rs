//! Command-line studies: registry, configuration and output.

mod commands;
mod config;
mod registry;

pub use commands::{
    cmd_converge, cmd_dump_tableau, cmd_stability, cmd_verify, cmd_work_precision, least_squares_slope, relative_l2,
    sci, SliceSummary, StabilitySummary, StudyResult, StudyRow, TableauDump, VerifyResult,
};
pub use config::{BoxedSystem, ExperimentConfig, ProblemSpec, StabilityConfig};
pub use registry::{file_stem, resolve, Method};

/// Process exit code for an error.
pub fn exit_code(e: &crate::error::Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}
