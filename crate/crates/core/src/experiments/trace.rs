use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Protocol phase a trace record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Read,
    Program,
    Retention,
    Reset,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Read => "read",
            Phase::Program => "program",
            Phase::Retention => "retention",
            Phase::Reset => "reset",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "read" => Ok(Phase::Read),
            "program" => Ok(Phase::Program),
            "retention" => Ok(Phase::Retention),
            "reset" => Ok(Phase::Reset),
            other => Err(Error::invalid(format!("unknown phase '{other}'"))),
        }
    }
}

/// One sample of an experiment trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Seconds since the start of the run.
    pub t: f64,
    pub t_set: f64,
    pub t_air: f64,
    pub t_dev: f64,
    /// Resistance read at 0.2 V (ohm).
    pub r: f64,
    pub phase: Phase,
    pub pulse_index: Option<u64>,
    /// Voltage applied in this sample: the read-out or programming amplitude.
    pub v_applied: f64,
}
