use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },

    #[error("exponent {value} at offset {offset} exceeds the limit of 65536")]
    ExponentOverflow { value: String, offset: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid job: {0}")]
    Job(String),

    #[error("{count} of {total} paths were truncated at slice index {k}; rerun with a larger max_steps")]
    Truncated { k: usize, count: usize, total: usize },

    #[error("removal ML degree r_{k} is unstable across generic draws: counts {counts:?}")]
    Genericity { k: usize, counts: Vec<usize> },

    #[error("start system has {paths} paths, exceeding the budget of {budget}")]
    PathBudget { paths: u128, budget: u128 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("dimension check failed: {0}")]
    Dimension(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
