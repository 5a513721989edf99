use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("grid specifications differ")]
    SpecMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("multiplier is singular at zero frequency and no zero-frequency value was set")]
    SingularZeroFrequency,

    #[error("measure is not admissible: {0}")]
    NotAdmissible(String),

    #[error("normalizing constant {0:e} is too close to zero")]
    ZeroConstant(f64),

    #[error("normalizing constant diverges: {0}")]
    DivergentConstant(String),

    #[error("upper tail of the scale integral is {0:e}, above 1e-6")]
    DivergentTail(f64),

    #[error("time quadrature under-resolved: doubling nodes per decade moved the result by {0:e}")]
    QuadratureUnderresolved(f64),

    #[error("input must have zero mean (mean = {0:e})")]
    NonZeroMean(f64),

    #[error("the wavelet measure has an atom at the origin")]
    AtomAtZero,

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("kernel sample {value:e} at |y| = {radius} is below the noise floor")]
    InsufficientDecay { radius: f64, value: f64 },

    #[error("tail asymptotics are not defined for even integer beta = {0}")]
    EvenBeta(f64),

    #[error("function is not negligible near the box boundary (max {0:e} relative to peak)")]
    SupportOverflow(f64),

    #[error("degenerate least-squares fit")]
    DegenerateFit,

    #[error("scale matrix is singular or ill-conditioned (condition number {0:e})")]
    SingularScale(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
