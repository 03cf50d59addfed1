use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// Input problems (bad files, bad parameters) and check failures are kept
/// distinct so the CLI can map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop at vertex {id}")]
    SelfLoop { line: usize, id: u64 },

    #[error("line {line}: edge length must be positive and finite (got {value})")]
    BadLength { line: usize, value: f64 },

    #[error("line {line}: vertex weight must be positive and finite (got {value})")]
    BadWeight { line: usize, value: f64 },

    #[error("graph is disconnected: {reachable} of {total} vertices reachable from vertex {from}")]
    Disconnected {
        from: u64,
        reachable: usize,
        total: usize,
    },

    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),

    #[error("net graph is disconnected ({components} components); kappa is too large for the sampling density")]
    DisconnectedNet { components: usize },

    #[error("partition denominator vanishes at vertex {vertex}; the net does not cover this vertex")]
    UncoveredVertex { vertex: u64 },

    #[error("no admissible distortion constants on the search grid; worst pair ({g}, {h}): graph-metric {d_net}, host-metric {d_host}")]
    QiGridExhausted { g: u64, h: u64, d_net: f64, d_host: f64 },

    #[error("field domain mismatch: expected {expected}, got {found}")]
    DomainMismatch { expected: String, found: String },

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("solver did not converge: residual {residual:e} after {sweeps} sweeps (tol {tol:e})")]
    NoConvergence { sweeps: u64, residual: f64, tol: f64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Exit code the CLI should use for this error: input and configuration
    /// problems map to 2, everything else (runtime/check failures) to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::SelfLoop { .. }
            | Error::BadLength { .. }
            | Error::BadWeight { .. }
            | Error::Disconnected { .. }
            | Error::UnknownVertex(_)
            | Error::DomainMismatch { .. }
            | Error::InvalidInput(_)
            | Error::IllPosed(_)
            | Error::Io { .. }
            | Error::Json { .. } => 2,
            _ => 1,
        }
    }
}
