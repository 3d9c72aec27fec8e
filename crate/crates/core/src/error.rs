use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cost {0} exceeds the cost of maximal effort")]
    Saturated(f64),
    #[error("{0} voters with positive effort exceed the enumeration limit of {1}")]
    TooManyVoters(usize, usize),
    #[error("no equilibrium effort in (0, 1/2]: {0}")]
    Infeasible(String),
    #[error("cost function has no origin tangency point")]
    NoTangent,
    #[error("three-vs-one verdict does not change on (0, {0}]")]
    NoFlip(f64),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
