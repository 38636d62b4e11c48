//! Validation, ground truth for tiny instances, plan files and benchmarks.

mod algo;
mod bench;
mod oracle;
mod planfile;
mod validate;

pub use algo::{AlgoConfig, Algorithm};
pub use bench::{
    read_records, run_bench, summarize, write_records, write_summary, BenchConfig, BenchError,
    BenchRecord, MapSource, MapSpec, RecordStatus, SummaryRow,
};
pub use oracle::{oracle_optimal_soc, soc_lower_bound, OracleOutcome, Unreachable};
pub use planfile::{parse_plan, serialize_plan, Plan, PlanFileError};
pub use validate::{
    validate_solution, validate_with_constraints, PathCountMismatch, ValidationReport, Violation,
    ViolationKind,
};
