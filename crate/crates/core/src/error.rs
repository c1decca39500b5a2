use thiserror::Error;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("cycle detected through nonterminals: {witness}")]
    Cycle { witness: String },
    #[error("symbol `{name}` used with rank {found} but declared/used with rank {expected}")]
    RankMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("right-hand side of `{head}` is not linear: parameter x{param} occurs twice")]
    NonLinear { head: String, param: usize },
    #[error("right-hand side of `{head}` uses parameters {found:?}, expected exactly x1..x{rank}")]
    ParamSet {
        head: String,
        rank: usize,
        found: Vec<usize>,
    },
    #[error("symbol `{name}` is declared as a terminal but has a rule")]
    TerminalWithRule { name: String },
    #[error("undeclared symbol `{name}`")]
    Undeclared { name: String },
    #[error("derived size of `{name}` does not fit in 63 bits")]
    TooLarge { name: String },
    #[error("guard exceeded: result has size {size}, guard is {guard}")]
    GuardExceeded { size: u64, guard: u64 },
    #[error("position {pos} out of range 1..={len}")]
    OutOfRange { pos: u64, len: u64 },
    #[error("nonterminal `{name}` derives a string of length {len} < 2; cannot binarize")]
    TooShortToBinarize { name: String, len: u64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, GrammarError>;
