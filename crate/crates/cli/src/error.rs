use morse_decoherence::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Unreadable input or schema violation.
    Usage,
    /// The requested physics is out of the model's domain.
    Physics,
    /// The integrator gave up.
    Numerical,
    Io,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn schema(message: impl Into<String>) -> Self {
        Self::usage(format!("schema violation {}", message.into()))
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Io,
            message: format!("{context}: {err}"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 2,
            ErrorKind::Physics => 3,
            ErrorKind::Numerical => 4,
            ErrorKind::Io => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let kind = match &err {
            Error::Aborted { .. } | Error::Positivity { .. } | Error::Unstable { .. } | Error::Quadrature { .. } => {
                ErrorKind::Numerical
            }
            Error::Config(_) => ErrorKind::Usage,
            Error::Io(_) | Error::Json(_) => ErrorKind::Io,
            _ => ErrorKind::Physics,
        };
        Self {
            kind,
            message: err.to_string(),
        }
    }
}
