//! Reproducible experiments: free choice under a change of observer, the
//! decoherence fork, and the ergodicity diagnostic.

mod ergodicity;
mod fork;
mod free_choice;
mod states;

pub use ergodicity::{run_ergodicity, ErgodicityConfig, ErgodicityReport, MIN_SAMPLES};
pub use fork::{
    min_pairwise_distance, run_fork_demo, spaced_subset, BundleStats, ForkConfig, ForkReport,
    ForkRun, Side,
};
pub use free_choice::{
    run_free_choice, run_free_choice_with_leaves, scan_free_choice, scan_free_choice_with_leaves,
    FreeChoiceConfig, FreeChoiceResult, FreeChoiceScan,
};
pub use states::{Extents, GridSpec, Packet, StateSpec};
