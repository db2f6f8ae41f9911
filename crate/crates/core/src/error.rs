use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {source}")]
    AtLine {
        path: String,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed line: {0}")]
    Malformed(String),

    #[error("unknown vertex {ty}:{id}")]
    UnknownVertex { ty: usize, id: String },

    #[error("duplicate vertex {ty}:{id}")]
    DuplicateVertex { ty: usize, id: String },

    #[error("intra-type edge between {a} and {b} (both type {ty})")]
    IntraTypeEdge { ty: usize, a: String, b: String },

    #[error("unknown edge {t1}:{a} -- {t2}:{b}")]
    UnknownEdge { t1: usize, a: String, t2: usize, b: String },

    #[error("negative edge weight {0}")]
    NegativeWeight(f64),

    #[error("vertex type {ty} out of range (K = {types})")]
    TypeOutOfRange { ty: usize, types: usize },

    #[error("label {label} out of range (k = {classes})")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("objective is not finite at iteration {iteration} (value {value})")]
    NonFiniteObjective { iteration: usize, value: f64 },

    #[error("regularizer did not converge: residual {residual:e} after {iterations} iterations")]
    RegularizerNotConverged { residual: f64, iterations: usize },

    #[error("infeasible density: {0}")]
    InfeasibleDensity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_line(self, path: &str, line: usize) -> Error {
        Error::AtLine { path: path.to_string(), line, source: Box::new(self) }
    }

    /// Strips any file/line wrapper and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }
}
