use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ball B({x}, {y}; {r}) contains no support point")]
    EmptyBall { x: f64, y: f64, r: f64 },
    #[error("lift is not strictly increasing (inf omega' = {min_derivative})")]
    NotAHomeomorphism { min_derivative: f64 },
    #[error("kernel is inadmissible: delta = {delta} exceeds {threshold}")]
    InadmissibleKernel { delta: f64, threshold: f64 },
    #[error("kernel is undefined at the origin")]
    UndefinedAtOrigin,
    #[error("resolution exhausted: {0}")]
    ResolutionExhausted(String),
    #[error("cube {0} has a single member")]
    DegenerateCube(usize),
    #[error("no good balanced points in cube {0}")]
    NoGoodPoints(usize),
    #[error("coincident points do not span a line")]
    DegeneratePair,
    #[error("scale {scale} exceeds support diameter {diam}")]
    ScaleOutOfRange { scale: f64, diam: f64 },
    #[error("cutoff kind {found} where {expected} is required")]
    InvalidCutoff {
        expected: &'static str,
        found: &'static str,
    },
    #[error("wrong beta regime: multiscale sum {sum} vs tau {tau}")]
    WrongRegime { sum: f64, tau: f64 },
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
