//! Desk-scale harness that runs the curriculum loop end to end on a
//! synthetic, word-aligned translation task with a per-token softmax model.

mod experiment;
mod lr;
mod model;
mod task;

pub use experiment::{
    run_experiment, select_t, write_curves_csv, write_summary_csv, ExperimentConfig,
    ExperimentResult, RunRecord, Selection, SummaryRow, Variant, VariantRun,
};
pub use lr::{noam_lr, LearningRate};
pub use model::{aligned_pairs, sgd_step, Evaluation, RowGradient, ToyModel};
pub use task::{generate_task, Permutation, SyntheticTask, TaskData};
