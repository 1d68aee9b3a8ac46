use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate cluster: {size} points, at least {required} required")]
    DegenerateCluster { size: usize, required: usize },

    #[error("clustering collapsed: cannot keep {clusters} clusters non-empty with {points} points")]
    ClusteringCollapsed { clusters: usize, points: usize },

    #[error("no unlabelled points left to query")]
    NoUnlabelled,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("requested {requested} components but the data has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
