use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size must be at least 3, got {0}")]
    Dimension(usize),
    #[error("letter {letter} outside alphabet 1..={size}")]
    LetterOutOfRange { letter: usize, size: usize },
    #[error("image of letter {0} is empty")]
    EmptyImage(usize),
    #[error("no letter has unbounded iterated image length")]
    NoGrowth,
    #[error("substitution is not prolongable on letter 1")]
    NotProlongable,
    #[error("operation is only defined for the 1->12 family")]
    NotFamily,
    #[error("matrix is not primitive")]
    NotPrimitive,
    #[error("factor set did not stabilize below prefix length {0}")]
    NoStabilization(usize),
    #[error("no power lambda^-j (j <= 40) within {tol} of estimate {estimate} for {word}")]
    SnapFailure { word: String, estimate: f64, tol: f64 },
    #[error("invalid automaton transition: {0}")]
    InvalidTransition(String),
    #[error("development is not admissible at index {0}")]
    Inadmissible(usize),
    #[error("word is not a prefix of the fixed point")]
    NotAPrefix,
    #[error("exponent gaps must be at least {d}: {exponents:?}")]
    ExponentGap { d: usize, exponents: Vec<u32> },
    #[error("invalid tree substitution, condition {condition}: {witness}")]
    InvalidRules { condition: u8, witness: String },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
    #[error("vertex {0} absent")]
    VertexAbsent(u32),
    #[error("vertex {0} is not a branch point")]
    NotBranchPoint(u32),
    #[error("label {0} does not occur up to stage {1}")]
    UnknownLabel(String, usize),
    #[error("edge {0:?} is not realized by a single syllable")]
    NotSingleSyllable((u32, u32, u8)),
    #[error("arc ({0},{1}) never splits within the allowed number of steps")]
    NoSplit(u32, u32),
    #[error("stage {need} needed but the tower stops at stage {have}")]
    StageOutOfRange { need: usize, have: usize },
    #[error("requires d=3, got d={0}")]
    RequiresDim3(usize),
    #[error("matrix spectrum is not Pisot: {0}")]
    NonPisot(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
