use std::fmt;

use kdv_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Unreadable files, bad config values, invalid profiles. Exit code 2.
    Input,
    /// A computation ran but did not converge or broke down. Exit code 1.
    Numerics,
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { kind: Kind::Input, message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::input(format!("invalid config: {}", message.into()))
    }

    pub fn numerics(message: impl Into<String>) -> Self {
        Self { kind: Kind::Numerics, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Input => 2,
            Kind::Numerics => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::InvalidArgument(_)
            | Error::Input(_)
            | Error::PositiveProfile { .. }
            | Error::InvalidPotential(_)
            | Error::InvalidBlock(_)
            | Error::NotPowerOfTwo { .. } => Kind::Input,
            _ => Kind::Numerics,
        };
        Self { kind, message: e.to_string() }
    }
}
