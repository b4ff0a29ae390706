use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("target degree {target} unreachable: radius search exhausted after {steps} bisection steps (best realized degree {best:.3})")]
    DegreeUnreachable { target: f64, steps: u32, best: f64 },

    #[error("carved holes exclude {fraction:.1}% of the deployment region (limit 50%)")]
    HolesTooLarge { fraction: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node id {id} out of range at line {line} (declared {nodes} nodes)")]
    IdRange { line: usize, id: usize, nodes: usize },

    #[error("layout diverged: non-finite position for node {node} at iteration {iteration}")]
    Divergence { iteration: usize, node: usize },

    #[error("degenerate layout: all nodes coincident, cannot fit to canvas")]
    DegenerateLayout,

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image: {0}")]
    MalformedImage(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
