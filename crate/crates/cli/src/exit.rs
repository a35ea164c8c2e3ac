//! Process exit codes and error classification.

use std::fmt;

use hapfix::sim::SimError;

/// Stable exit-code contract for scripting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Io = 1,
    Validation = 2,
    Runtime = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Context marker for failures raised while an episode is running.
#[derive(Debug, Clone, Copy)]
pub struct RuntimeFailure;

impl fmt::Display for RuntimeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("episode failed")
    }
}

/// Context marker for bad command-line usage.
#[derive(Debug, Clone)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

/// Maps an error chain onto the exit-code contract: runtime markers win,
/// then any I/O error, and everything else is a validation failure.
pub fn classify(err: &anyhow::Error) -> Exit {
    if err.downcast_ref::<RuntimeFailure>().is_some() {
        return Exit::Runtime;
    }
    let io = err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some() || e.downcast_ref::<SimError>().is_some_and(SimError::is_io)
    });
    if io {
        Exit::Io
    } else {
        Exit::Validation
    }
}

/// Tags errors from inside the episode loop as runtime failures. Input and
/// parameter problems that `run_episode` checks up front stay validation errors.
pub fn episode_error(err: SimError) -> anyhow::Error {
    match err {
        SimError::Fixture(_) | SimError::Geom(_) | SimError::Map(_) | SimError::Score(_) => {
            anyhow::Error::new(err).context(RuntimeFailure)
        }
        other => anyhow::Error::new(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification() {
        let io: anyhow::Error = std::io::Error::new(std::io::ErrorKind::NotFound, "x").into();
        assert_eq!(classify(&io), Exit::Io);
        assert_eq!(classify(&usage("no seeds")), Exit::Validation);
        let wrapped = Err::<(), _>(io).context("reading scene").unwrap_err();
        assert_eq!(classify(&wrapped), Exit::Io);
        let rt = episode_error(SimError::Fixture(hapfix::fixtures::FixtureError::NonFinite("force")));
        assert_eq!(classify(&rt), Exit::Runtime);
        assert_eq!(classify(&episode_error(SimError::EmptyStream)), Exit::Validation);
    }
}
