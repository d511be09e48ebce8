//! Count statistics, block-diagonal sensing and sparse recovery.

pub mod colex;
mod counts;
mod experiment;
mod identity;
mod recovery;
mod sensing;

pub use counts::{count_statistics, CountStatistics};
pub use experiment::{
    is_exact_recovery, random_sparse_counts, recovery_experiment, write_recovery_csv, RecoveryConfig, RecoveryRow,
};
pub use identity::{apply_level, verify_identity, IdentityReport};
pub use recovery::{sparse_recover, Recovery, RecoveryMethod, RecoveryOptions};
pub use sensing::{
    allocate_rows, build_sensing, Allocation, BlockSensingMatrix, DenseOperator, HadamardOperator, SensingOperator,
    OPERATOR_ENTRY_CAP,
};
