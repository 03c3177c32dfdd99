//! Exit-code plumbing.
//!
//! The process exit contract is: 0 on success, 1 on runtime failure, 2 on
//! validation failure. Validation failures are marked by wrapping them in
//! [`ValidationFailure`] so `main` can tell the two apart after the error
//! has bubbled up through `anyhow`.

use std::fmt;

/// Marker error for problems a `validate` pass should have caught:
/// unreadable or malformed configs, schema violations, missing files.
#[derive(Debug)]
pub struct ValidationFailure(pub String);

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ValidationFailure {}

/// Shorthand constructor.
pub fn validation(msg: impl Into<String>) -> ValidationFailure {
    ValidationFailure(msg.into())
}

/// The exit code for an error that escaped to `main`.
pub fn exit_code_for(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ValidationFailure>().is_some() {
        2
    } else {
        1
    }
}
