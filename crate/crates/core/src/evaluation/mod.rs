//! Landmark and overlap metrics, test phantoms and the synthetic recovery harness.

mod metrics;
mod phantom;
mod synthetic;

pub use metrics::{
    ame_outer, ame_outer_sets, average_error, average_minimal_error, cumulative_histogram, inverse_consistency_error,
    jaccard, success_metrics, LandmarkSet, Parity, SuccessRates,
};
pub use phantom::{ring_phantom, smooth_phantom};
pub use synthetic::{
    run_synthetic_experiment, warp_image, EvaluationReport, ModelKind, RuntimeStats, SyntheticConfig, TrialRecord,
};
