//! Run configuration, command execution and table output.

mod config;
mod run;
mod table;

pub use config::{parse_config, Command, OutputFormat, RunConfig, DEFAULT_TRIALS};
pub use run::{execute, RunOutput};
pub use table::{
    emit_appendix_table, emit_plot_data, trace_table, write_atomic, Provenance, Table,
};

/// Version recorded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
