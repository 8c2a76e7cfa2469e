//! Batch driver: `giantpolaron <mode> --config <file> [--jobs N] [--out DIR]`.

pub mod run;
pub mod spec;

pub use run::run;
pub use spec::{parse, validate, Diagnostic, Mode, RunSpec};

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Invalid config or command line.
pub const EXIT_VALIDATION: i32 = 2;
/// Solver or integrator failure.
pub const EXIT_NUMERICAL: i32 = 3;
