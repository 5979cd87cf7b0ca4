use std::fmt;

use serde::Serialize;
use stl_kernel::{KernelError, ParseError, RegressionError, SsaError, TrajectoryError};

/// Failure reported to the user as one line of JSON on stderr.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new("config", message)
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::new("input", message)
    }

    /// Usage and configuration problems exit with 2, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "usage" | "config" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

macro_rules! from_error {
    ($ty:ty, $kind:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($kind, e.to_string())
            }
        }
    };
}

from_error!(TrajectoryError, "trajectory");
from_error!(SsaError, "ssa");
from_error!(KernelError, "kernel");
from_error!(RegressionError, "regression");
from_error!(ParseError, "parse");
from_error!(std::io::Error, "io");
from_error!(csv::Error, "csv");
from_error!(serde_json::Error, "json");
