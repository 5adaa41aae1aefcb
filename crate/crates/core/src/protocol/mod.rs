//! Session schedules, the run loop for every method, and metrics.

mod benchmark;
mod guard;
mod method;
mod metrics;
mod run;

pub use benchmark::{
    build_synthetic_benchmark, synthetic_class_name, BenchmarkSpec, EncoderSpec, SessionSpec, SyntheticLayout,
};
pub use guard::{Access, AccessEvent, ExemplarMemory, ExemplarPolicy, SessionGuard};
pub use method::{FirstSessionSchedule, Method, MethodConfig, Schedule};
pub use metrics::{
    harmonic_mean, median, metric_avg, metric_decomposition, metric_pd, pooled_accuracy, ClassTally, Decomposition,
};
pub use run::{
    evaluate, method_stream, run_benchmark, run_benchmark_with, shot_sweep, RunOutput, SessionLog, SessionResult,
    SessionSnapshot,
};
