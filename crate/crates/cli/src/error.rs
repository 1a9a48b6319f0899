use thiserror::Error;

/// Input problems detected before any computation.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("UnmatchedStorm: forecast storm '{0}' has no observed track")]
    UnmatchedStorm(String),
    #[error("invalid manifest {path}:\n  {}", problems.join("\n  "))]
    InvalidManifest { path: String, problems: Vec<String> },
    #[error("all {0} members failed to track")]
    AllMembersFailed(usize),
}
