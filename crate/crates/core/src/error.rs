use crate::dense::Layout;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch, expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("{op}: expected {expected:?} layout, got {got:?}")]
    Layout {
        op: &'static str,
        expected: Layout,
        got: Layout,
    },

    #[error("triangular factor is singular at diagonal {index}")]
    Singular { index: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("{op}: {requested} elements exceeds the limit of {limit}")]
    Capacity {
        op: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("cannot partition {rows} rows into {blocks} blocks")]
    Partition { rows: usize, blocks: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
