use std::fmt;

/// Where a vanishing denominator was met.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Position {
    pub stage: &'static str,
    pub n: u64,
    pub j: Option<usize>,
}

impl Position {
    pub fn new(stage: &'static str, n: u64) -> Self {
        Position { stage, n, j: None }
    }

    pub fn with_iteration(stage: &'static str, n: u64, j: usize) -> Self {
        Position { stage, n, j: Some(j) }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.j {
            Some(j) => write!(f, "{} (n = {}, j = {})", self.stage, self.n, j),
            None => write!(f, "{} (n = {})", self.stage, self.n),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("not in class D: {0}")]
    NotInClassD(String),
    #[error("zero denominator in {0}")]
    ZeroDenominator(Position),
    #[error("subclass boundary reached: {0}")]
    BoundaryCondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("degrees (k, l) = ({k}, {l}) outside {{1,2}} x {{0,1}}")]
    DegreeOutOfRange { k: i64, l: i64 },
    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),
    #[error("row of length {0} cannot be iterated")]
    RowExhausted(usize),
    #[error("residual c_{m} is not available for {tag}")]
    UnsupportedResidual { tag: String, m: i32 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotInClassD(_) => "NOT_IN_CLASS_D",
            Error::ZeroDenominator(_) => "ZERO_DENOMINATOR",
            Error::BoundaryCondition(_) => "BOUNDARY_CONDITION",
            Error::Domain(_) => "DOMAIN_ERROR",
            Error::NoConvergence(_) => "NO_CONVERGENCE",
            Error::DegreeOutOfRange { .. } => "DEGREE_OUT_OF_RANGE",
            Error::DegenerateCoefficient(_) => "DEGENERATE_COEFFICIENT",
            Error::RowExhausted(_) => "ROW_EXHAUSTED",
            Error::UnsupportedResidual { .. } => "UNSUPPORTED_RESIDUAL",
            Error::DegenerateInput(_) => "DEGENERATE_INPUT",
            Error::Parse(_) | Error::Json(_) => "PARSE_ERROR",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
