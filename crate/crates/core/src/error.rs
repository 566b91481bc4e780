use thiserror::Error;

#[derive(Debug, Error)]
pub enum LcsError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("duplicate node label `{0}`")]
    DuplicateNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("more than one edge between `{0}` and `{1}`")]
    MultiEdge(String, String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("wrong graph kind: expected {expected}, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("consecutive path nodes `{0}` and `{1}` are not adjacent")]
    NotAdjacent(String, String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("rank-deficient design; offending columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("test budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("zero true effect; relative error undefined")]
    ZeroTruth,
    #[error("data format error: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LcsError>;
