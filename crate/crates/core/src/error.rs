use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown label `{0}` (not in the declared alphabet)")]
    UnknownLabel(String),
    #[error("capacity of edge {src} -> {dst} must be positive")]
    NonPositiveCapacity { src: String, dst: String },
    #[error("`{0}` is reserved for epsilon transitions and cannot label a graph edge")]
    ReservedEpsilonLabel(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` already exists")]
    DuplicateNode(String),
    #[error("syntax error at byte {position}: {reason}")]
    SyntaxError { position: usize, reason: String },
    #[error("unknown token `{token}` at byte {position} (not in the declared alphabet)")]
    UnknownToken { token: String, position: usize },
    #[error("automaton has no accepting state")]
    NoAcceptingState,
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("unknown preset `{0}` (expected valley-free, multiple-peering-links or any)")]
    UnknownPreset(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("automaton has {0} terminal states; normalize terminals first")]
    MultipleTerminals(usize),
    #[error("source and sink must differ")]
    SourceEqualsSink(String),
    #[error("flow is unbounded: source and sink are connected by unbounded edges only")]
    UnboundedFlow,
    #[error("enumeration limit exceeded: {0}")]
    ExplosionGuard(String),
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("conflicting relationship for AS pair {a} / {b}")]
    ConflictingRelationship { a: u32, b: u32 },
    #[error("need at least two entries with positive weight to sample pairs")]
    InsufficientSupport,
    #[error("numeric overflow while {0}")]
    NumericOverflow(String),
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
