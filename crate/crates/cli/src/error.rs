use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] tubearc::Error),
    #[error("state {index} requested but only {len} states exist")]
    BadState { index: usize, len: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        use tubearc::Error as E;
        match self {
            CliError::Config(_) => "invalid_config",
            CliError::BadState { .. } => "bad_state_index",
            CliError::Io { .. } => "io",
            CliError::Solver(e) => match e {
                E::InvalidGeometry(_) | E::StraightTube => "invalid_geometry",
                E::InvalidBasis(_) | E::IndexOutOfRange { .. } | E::NoSuchFunction { .. } => "invalid_basis",
                E::InvalidGrid(_) => "invalid_grid",
                E::InvalidLattice(_) => "invalid_lattice",
                E::IllConditioned { .. } | E::NotPositiveDefinite(_) => "ill_conditioned_overlap",
                E::NotHermitian { .. } => "hermiticity_failure",
                E::StateOutOfRange { .. } => "bad_state_index",
                E::Dimension(_) | E::NoConvergence(_) => "numerical_failure",
            },
        }
    }

    /// 2 for bad input, 1 when the numerics refuse an otherwise valid run.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "ill_conditioned_overlap" | "hermiticity_failure" | "numerical_failure" | "io" => 1,
            _ => 2,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: ErrorBody { kind: self.kind(), message: self.to_string() } }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}
