//! Experiment orchestration for the `tmsae` command-line tool.

pub mod commands;
pub mod config;
pub mod rows;

pub use commands::{
    cell_seed, cmd_compare, cmd_rug, cmd_scaling, cmd_stats, cmd_sweep, cmd_train, train_cell, Cell,
};
pub use config::ExperimentConfig;
pub use rows::{CompareRow, RugRow, ScalingCsvRow, SweepRow};

/// Exit code for a failed command: 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let numerical = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<tmsae::Error>(),
            Some(tmsae::Error::Diverged { .. }) | Some(tmsae::Error::ZeroDiagonal { .. })
        )
    });
    if numerical {
        2
    } else {
        1
    }
}
