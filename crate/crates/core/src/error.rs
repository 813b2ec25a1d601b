use thiserror::Error;

/// Failures reported by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error(
        "component {component} has {count} panels; a corner neighborhood needs at least {needed}"
    )]
    MeshTooCoarse {
        component: usize,
        count: usize,
        needed: usize,
    },
    #[error("singular system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("target point lies on the boundary")]
    TargetOnBoundary,
    #[error("fit window too small: {0}")]
    FitWindow(String),
    #[error("no root in (0,1): {0}")]
    NoRoot(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular { .. } => 3,
            Error::Config(_) | Error::Io(_) | Error::MeshTooCoarse { .. } | Error::Geometry(_) => 2,
            _ => 3,
        }
    }
}
