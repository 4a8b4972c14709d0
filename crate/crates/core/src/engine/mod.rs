//! Generic zig-zag simulation on hybrid discrete/continuous state spaces.

pub mod csv;
pub use csv::CsvRecorder;
mod model;
mod simulate;
mod state;
mod thinning;
mod trace;

pub use model::{BoundaryOutcome, Localization, TargetModel};
pub use simulate::{simulate, simulate_with, stream_rng, Interleave, Pure, RunStats, SimOptions, SimRng};
pub use state::{EventKind, HybridState, MhMoveKind, ModeHash, ModeId};
pub use thinning::next_flip;
pub use trace::{EventRecord, EventTrace, Functional, GridRecorder, NullRecorder, Recorder};
