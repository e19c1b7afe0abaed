use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RESOURCE_CAP: i32 = 3;
    pub const SOLVER: i32 = 4;
    pub const CLAIM_FAILED: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Library(#[from] heislab::Error),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("claims failed: {}", .0.join(", "))]
    ClaimsFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use heislab::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io(_) => exit::IO,
            CliError::ClaimsFailed(_) => exit::CLAIM_FAILED,
            CliError::Library(e) => match e {
                E::CapExceeded { .. } | E::Overflow => exit::RESOURCE_CAP,
                E::Quadrature { .. } | E::SolverDidNotConverge { .. } => exit::SOLVER,
                E::InvalidArgument(_) | E::OutOfRange { .. } | E::LengthMismatch(..) | E::NotInBox(_) => {
                    exit::CONFIG
                }
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
