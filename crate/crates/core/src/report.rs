//! Verification reports.

use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "INFO")]
    Info,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Pass => f.write_str("PASS"),
            Status::Fail => f.write_str("FAIL"),
            Status::Info => f.write_str("INFO"),
        }
    }
}

/// Outcome of one verification. A failing report always carries a nonempty
/// residual; a passing one carries none.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub check_id: String,
    pub status: Status,
    pub residual: String,
    pub elapsed_ms: u64,
    pub config: String,
}

impl Report {
    pub fn pass(check_id: impl Into<String>) -> Report {
        Report {
            check_id: check_id.into(),
            status: Status::Pass,
            residual: String::new(),
            elapsed_ms: 0,
            config: String::new(),
        }
    }

    pub fn fail(check_id: impl Into<String>, residual: impl Into<String>) -> Report {
        let residual = residual.into();
        debug_assert!(!residual.is_empty(), "FAIL must carry a residual");
        Report {
            check_id: check_id.into(),
            status: Status::Fail,
            residual,
            elapsed_ms: 0,
            config: String::new(),
        }
    }

    pub fn info(check_id: impl Into<String>, residual: impl Into<String>) -> Report {
        Report {
            check_id: check_id.into(),
            status: Status::Info,
            residual: residual.into(),
            elapsed_ms: 0,
            config: String::new(),
        }
    }

    /// PASS when `residual` is empty, FAIL with the rendered form otherwise.
    pub fn from_residual(check_id: impl Into<String>, residual: Option<String>) -> Report {
        match residual {
            None => Report::pass(check_id),
            Some(r) => Report::fail(check_id, r),
        }
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Runs a closure, returning its result and wall time in milliseconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_millis() as u64)
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} ({} ms)", self.status, self.check_id, self.elapsed_ms)?;
        if !self.residual.is_empty() {
            write!(f, " residual: {}", self.residual)?;
        }
        if !self.config.is_empty() {
            write!(f, " [{}]", self.config)?;
        }
        Ok(())
    }
}
