use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index table is empty")]
    EmptyTable,

    #[error("negative permittivity {eps} at {omega_ev} eV")]
    NegativePermittivity { omega_ev: f64, eps: f64 },

    #[error("bisection did not converge in {steps} steps on bracket [{lo}, {hi}]")]
    RootNotConverged { lo: f64, hi: f64, steps: usize },

    #[error("frequency {omega_ev} eV is not on a band (residual {residual:e})")]
    NotOnBand { omega_ev: f64, residual: f64 },

    #[error("degenerate Bloch eigenproblem at {omega_ev} eV (band edge)")]
    DegenerateMode { omega_ev: f64 },

    #[error("band-count check failed: {0}")]
    BandCount(String),

    #[error("quadrature did not converge: refinement delta {delta:.4} exceeds {limit}")]
    NotConverged { delta: f64, limit: f64 },

    #[error("unphysical ionization energy {value} eV for {symbol}")]
    Unphysical { symbol: String, value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
