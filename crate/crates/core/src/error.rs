use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate map: {0}")]
    DegenerateMap(String),
    #[error("parameters leave the Schottky domain: {0}")]
    DomainExit(String),
    #[error("point outside the fundamental domain: {0}")]
    Domain(String),
    #[error("pole proximity: {0}")]
    Pole(String),
    #[error("series did not converge: {0}")]
    Convergence(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("unsupported configuration: {0}")]
    Configuration(String),
    #[error("ill-conditioned linear system (condition estimate {0:.3e})")]
    Conditioning(f64),
    #[error("divergent operator: {0}")]
    Divergence(String),
    #[error("integration path: {0}")]
    Path(String),
    #[error("finite-difference step too large: {0}")]
    StepTooLarge(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short stable identifier, used by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DegenerateMap(_) => "degenerate-map",
            Error::DomainExit(_) => "domain-exit",
            Error::Domain(_) => "domain",
            Error::Pole(_) => "pole",
            Error::Convergence(_) => "convergence",
            Error::Quadrature(_) => "quadrature",
            Error::Configuration(_) => "configuration",
            Error::Conditioning(_) => "conditioning",
            Error::Divergence(_) => "divergence",
            Error::Path(_) => "path",
            Error::StepTooLarge(_) => "step-too-large",
            Error::Parse(_) => "parse",
        }
    }
}
