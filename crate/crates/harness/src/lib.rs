//! Benchmark harness for S-KM on dependent data: configuration, the
//! SP / SP-m / MR-s comparison on the autoregressive lasso, out-of-sample
//! coverage studies, bound reports and SVG charts.

pub mod charts;
pub mod config;
pub mod coverage;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    /// Process exit code: 1 for configuration errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Runtime(_) => 2,
        }
    }
}

impl From<skm_core::Error> for HarnessError {
    fn from(e: skm_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Runtime(format!("i/o: {e}"))
    }
}
