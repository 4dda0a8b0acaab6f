use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two bodies came closer than the collision guard.
    #[error("collision: bodies {bodies:?} at distance {distance:e}{}", grid_suffix(*.grid_index))]
    Collision {
        bodies: (usize, usize),
        distance: f64,
        grid_index: Option<usize>,
    },

    #[error("no convergence after {iterations} iterations (last gradient norm {grad_norm:e})")]
    Convergence { iterations: usize, grad_norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A degenerate cluster is neither fully choreographic nor free of choreographic
    /// directions.
    #[error("ambiguous classification of cluster at lambda = {lambda:.6e}: choreographic dimension {fixed_dim:.3} of {degeneracy}")]
    Ambiguity {
        lambda: f64,
        degeneracy: usize,
        fixed_dim: f64,
    },

    #[error("continuation failure: {0}")]
    Continuation(String),

    #[error("unsupported file format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn grid_suffix(index: Option<usize>) -> String {
    match index {
        Some(j) => format!(" (grid index {j})"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a quadrature grid index to a collision error.
    pub(crate) fn at_grid(self, j: usize) -> Self {
        match self {
            Error::Collision {
                bodies, distance, ..
            } => Error::Collision {
                bodies,
                distance,
                grid_index: Some(j),
            },
            other => other,
        }
    }
}
