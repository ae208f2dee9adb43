use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands disagree on a dimension.
    ShapeMismatch {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    NodeOutOfRange { node: usize, num_nodes: usize },
    EmptyGraph,
    EmptyNodeSet,
    InvalidArgument(String),
    /// A backward pass was requested without a cached forward pass.
    MissingCache(&'static str),
    /// Batch normalization in train mode needs at least two rows.
    BatchTooSmall(usize),
    /// Loss became non-finite during training.
    Divergence { stage: usize, epoch: usize, seed: u64 },
    VariantMismatch(&'static str),
    UnknownParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, expected, found } => write!(
                f,
                "{op}: shape mismatch, expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::NodeOutOfRange { node, num_nodes } => {
                write!(f, "node {node} out of range for graph with {num_nodes} nodes")
            }
            Error::EmptyGraph => f.write_str("graph must have at least one node"),
            Error::EmptyNodeSet => f.write_str("node set is empty"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::MissingCache(what) => write!(f, "{what}: backward called before forward"),
            Error::BatchTooSmall(n) => {
                write!(f, "batch normalization in train mode needs >= 2 rows, got {n}")
            }
            Error::Divergence { stage, epoch, seed } => write!(
                f,
                "non-finite loss at stage {stage}, epoch {epoch} (seed {seed})"
            ),
            Error::VariantMismatch(msg) => write!(f, "model variant mismatch: {msg}"),
            Error::UnknownParameter(name) => write!(f, "unknown or mis-shaped state entry `{name}`"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
