//! Instance files (JSON, one point per line) and trace files (CSV).

mod instance_file;
mod trace_file;

pub use instance_file::{
    read_instance, read_instance_file, write_instance, write_instance_file, FORMAT_VERSION,
};
pub use trace_file::{
    check_stage_rows, read_trace, read_trace_file, trace_rows, write_trace, write_trace_file,
    TraceFileRow, TRACE_HEADER,
};
