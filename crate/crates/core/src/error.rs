use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants are grouped by the layer that produces them; higher layers
/// propagate lower-layer errors unchanged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // expression layer
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("family index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("affine precomposition needs a nonzero finite scale")]
    DegenerateScale,
    #[error("invalid family: {0}")]
    InvalidFamily(String),
    #[error("non-finite literal in expression")]
    NonFiniteLiteral,

    // jet layer
    #[error("expression still contains free parameter `{0}`")]
    FreeParameter(String),
    #[error("essential singularity: exp/sin/cos applied to a pole")]
    EssentialSingularity,
    #[error("division by an expansion that vanishes through the working order")]
    ZeroDivisor,
    #[error("coefficient overflow during jet evaluation")]
    Overflow,
    #[error("cancellation left fewer than {needed} known coefficients")]
    PrecisionLoss { needed: usize },

    // sphere
    #[error("point {0} is outside the open unit disk")]
    OutsideUnitDisk(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    // monomial
    #[error("monomial has no derivative factor; the order k must be given explicitly")]
    UndefinedOrder,
    #[error("invalid monomial: {0}")]
    InvalidMonomial(String),

    // locate
    #[error("zero or pole on the contour after {attempts} attempts")]
    OnContourSingularity { attempts: usize },
    #[error("did not converge: {0}")]
    NonConvergent(String),
    #[error("subdivision budget of {0} cells exceeded")]
    BudgetExceeded(usize),

    // nevanlinna
    #[error("pole on the integration circle r = {r} after retries")]
    OnCircleSingularity { r: f64 },
    #[error("function must be non-constant")]
    ConstantFunction,
    #[error("target values must be pairwise distinct")]
    DistinctnessViolation,
    #[error("differential polynomial degree d(P) = {0} is below 2")]
    DegreeTooSmall(u32),
    #[error("growth too small to estimate an order")]
    InsufficientGrowth,
    #[error("invalid radius grid: {0}")]
    InvalidGrid(String),

    // criteria
    #[error("monomial audit target must be nonzero")]
    ZeroTarget,
    #[error("family is flat: spherical derivative vanishes for member {0}")]
    FlatFamily(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
