//! Scoring reports against simulation truth and running replicate grids.

mod benchmark;
mod score;

pub use benchmark::{
    run_benchmark, BenchmarkRow, BenchmarkTable, CellKey, MethodThresholds, ReplicateRecord, Thresholds,
};
pub use score::{score_family, score_replicate, FamilyScore, ReplicateScore};
