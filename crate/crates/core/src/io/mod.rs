//! Configuration text and CSV formats.

mod config;
mod number;
mod table;

pub use config::{Config, ConfigKey, ENV_PREFIX, KEYS};
pub use number::format_sig9;
pub use table::{
    read_iv_csv, read_pattern_csv, read_table, read_trace_csv, trace_table, Table, TRACE_HEADER,
};
